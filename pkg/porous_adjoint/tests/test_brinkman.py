import logging

import numpy as np
import pytest
import scipy.sparse as sp

from porous_adjoint.brinkman import (
    BrinkmanProblem,
    residuals_brinkman,
    solve_brinkman,
    strain_energy,
    strain_rate,
    stress_divergence,
    vector_laplacian,
)
from porous_adjoint.classify import ClassTag
from porous_adjoint.darcy import DarcyProblem
from porous_adjoint.exceptions import InputError
from porous_adjoint.grid import BoundaryCondition, BoundaryKind, CellField, FaceField, make_grid, uniform_boundary
from porous_adjoint.verification import random_instance

logger = logging.getLogger(__name__)


def no_slip(u: float = 0.0) -> BoundaryCondition:
    return BoundaryCondition(BoundaryKind.FULL_VELOCITY, (u, 0.0))


def pressure_channel(nx: int, ny: int, k: float, drop: float = 1.0, wall_speed: float = 0.0) -> BrinkmanProblem:
    grid = make_grid(nx, ny)
    bc = uniform_boundary(
        left=BoundaryCondition(BoundaryKind.PRESSURE, drop, tangential=0.0),
        right=BoundaryCondition(BoundaryKind.PRESSURE, 0.0, tangential=0.0),
        bottom=no_slip(wall_speed),
        top=no_slip(wall_speed),
    )
    return BrinkmanProblem(grid, CellField(grid, k), 1.0, bc)


def traction_channel(nx: int, ny: int, k: float, drop: float = 1.0, wall_speed: float = 0.0) -> BrinkmanProblem:
    grid = make_grid(nx, ny)
    # t = -p n with the outward normal (-1, 0) on the left.
    bc = uniform_boundary(
        left=BoundaryCondition(BoundaryKind.TRACTION, (drop, 0.0)),
        right=BoundaryCondition(BoundaryKind.TRACTION, (0.0, 0.0)),
        bottom=no_slip(wall_speed),
        top=no_slip(wall_speed),
    )
    return BrinkmanProblem(grid, CellField(grid, k), 1.0, bc, form="traction")


def test_poiseuille_limit():
    """
    For a very permeable medium the channel flow approaches the plane Poiseuille profile ``y (1 - y) / 2``.
    """

    problem = pressure_channel(64, 64, k=1e6)
    solution = problem.solve()

    _, y = problem.grid.x_face_centers()
    expected = y * (1.0 - y) / 2.0

    error = np.linalg.norm(solution.v.x_values - expected) / np.linalg.norm(expected)
    assert error < 1e-3
    np.testing.assert_allclose(solution.v.y_values, 0.0, atol=1e-10)


def test_darcy_limit():

    nx = ny = 32
    brinkman = pressure_channel(nx, ny, k=1e-6).solve()

    grid = make_grid(nx, ny)
    wall = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, 0.0)
    bc = uniform_boundary(
        left=BoundaryCondition(BoundaryKind.PRESSURE, 1.0),
        right=BoundaryCondition(BoundaryKind.PRESSURE, 0.0),
        bottom=wall,
        top=wall,
    )
    darcy = DarcyProblem(grid, CellField(grid, 1e-6), 1.0, bc).solve()

    # Compare away from the faces next to the no-slip walls.
    np.testing.assert_allclose(brinkman.v.x_values[:, 1:-1], darcy.v.x_values[:, 1:-1], rtol=1e-2)


def test_zero_loading_gives_rest():

    problem = pressure_channel(6, 5, k=0.3, drop=0.0)
    solution = problem.solve()

    assert solution.v.max_abs() <= 1e-14
    np.testing.assert_allclose(solution.p.values, 0.0, atol=1e-14)


def test_converged_residuals_vanish():

    grid = make_grid(16, 12)
    rng = np.random.default_rng(8)
    k = CellField(grid, 0.05 * np.exp(0.3 * rng.standard_normal(grid.cell_shape)))
    problem = pressure_channel(16, 12, k=1.0).with_permeability(k)
    solution = problem.solve()

    momentum, continuity = residuals_brinkman(problem, solution)
    assert momentum.max_abs() <= 1e-9
    assert np.abs(continuity.values).max() <= 1e-9


@pytest.mark.parametrize("k, wall_speed", [(0.1, 0.1), (2.0, 2.0)])
def test_traction_form_matches_main_form(k: float, wall_speed: float):
    """
    With walls moving at the plug speed ``k * drop / mu`` neither form develops shear, so the traction statement
    ``t = -p n`` coincides with the pressure statement with zero tangential velocity.

    Parameterize Combinations
    -------------------------
    k : float
        Uniform permeability.

    wall_speed : float
        Speed of the walls, equal to the plug speed.
    """

    main = pressure_channel(10, 6, k=k, wall_speed=wall_speed).solve()
    traction = traction_channel(10, 6, k=k, wall_speed=wall_speed).solve()

    np.testing.assert_allclose(traction.v.flat, main.v.flat, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(traction.p.values, main.p.values, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(main.v.x_values, wall_speed, rtol=1e-10)


def test_strain_rate_of_uniform_flow():

    grid = make_grid(5, 5)
    tensor = strain_rate(grid, FaceField(grid, 0.3, -0.2))

    assert tensor.shape == (5, 5, 2, 2)
    np.testing.assert_allclose(tensor, 0.0, atol=1e-14)


def test_strain_rate_of_shear():

    grid = make_grid(8, 8)
    v = FaceField.from_function(grid, lambda x, y: y, lambda x, y: 0.0 * x)
    tensor = strain_rate(grid, v)

    np.testing.assert_allclose(tensor[..., 0, 1], 0.5, rtol=1e-12)
    np.testing.assert_allclose(tensor[..., 1, 0], 0.5, rtol=1e-12)
    np.testing.assert_allclose(tensor[..., 0, 0], 0.0, atol=1e-13)
    np.testing.assert_allclose(tensor[..., 1, 1], 0.0, atol=1e-13)


def test_strain_rate_of_rigid_rotation():

    grid = make_grid(8, 8)
    v = FaceField.from_function(grid, lambda x, y: -y, lambda x, y: x)

    np.testing.assert_allclose(strain_rate(grid, v), 0.0, atol=1e-12)


def test_stress_divergence_matches_laplacian_on_divergence_free_field():

    grid = make_grid(9, 7)
    rng = np.random.default_rng(21)

    # Velocities from a vertex stream function are discretely divergence free.
    psi = rng.standard_normal((grid.nx + 1, grid.ny + 1))
    u = np.diff(psi, axis=1) / grid.hy
    w = -np.diff(psi, axis=0) / grid.hx
    v = FaceField(grid, u, w)

    laplacian = vector_laplacian(grid, v, mu=1.5)
    stress = stress_divergence(grid, v, mu=1.5)

    scale = laplacian.max_abs()
    np.testing.assert_allclose(stress.x_values, laplacian.x_values, atol=1e-10 * scale)
    np.testing.assert_allclose(stress.y_values, laplacian.y_values, atol=1e-10 * scale)


def test_rejects_unknown_form():

    grid = make_grid(2, 2)
    bc = uniform_boundary(left=no_slip(), right=no_slip(), bottom=no_slip(), top=no_slip())

    with pytest.raises(InputError):
        BrinkmanProblem(grid, CellField(grid, 1.0), 1.0, bc, form="weak")


@pytest.mark.parametrize(
    "form, kind",
    [
        ("main", BoundaryKind.NORMAL_VELOCITY),
        ("main", BoundaryKind.TRACTION),
        ("traction", BoundaryKind.PRESSURE),
    ]
)
def test_rejects_boundary_kind_of_other_form(form: str, kind: BoundaryKind):

    grid = make_grid(2, 2)
    value = (0.0, 0.0) if kind == BoundaryKind.TRACTION else 0.0
    bc = uniform_boundary(left=BoundaryCondition(kind, value), right=no_slip(), bottom=no_slip(), top=no_slip())

    with pytest.raises(InputError):
        BrinkmanProblem(grid, CellField(grid, 1.0), 1.0, bc, form=form)


def test_module_solver_matches_method():

    problem = pressure_channel(6, 6, 0.1)

    np.testing.assert_array_equal(solve_brinkman(problem).p.values, problem.solve().p.values)


@pytest.mark.parametrize("model", ["brinkman", "brinkman_traction"])
def test_viscous_operator_is_strain_energy_hessian(model: str):
    """
    Weighted by the face volumes, the viscous and normal-stress rows form the symmetric Hessian of the strain energy.

    Parameterize Combinations
    -------------------------
    model : str
        Main or traction form, loaded on every side so that every face carries a momentum row.
    """

    problem = random_instance(model, ClassTag.A, nx=6, rng=np.random.default_rng(2))
    ops = problem.operators()
    assert ops.momentum_faces.all()

    weighted = (sp.diags(problem.grid.face_volumes().flat) @ (ops.viscous + ops.normal_stress)).toarray()
    np.testing.assert_allclose(weighted, weighted.T, atol=1e-12 * np.abs(weighted).max())
    np.testing.assert_allclose(weighted, strain_energy(problem.grid, problem.bc).hessian(1.0).toarray(), atol=1e-9)


def test_strain_energy_vanishes_for_rigid_motion():

    grid = make_grid(5, 4)
    wall = BoundaryCondition(BoundaryKind.FULL_VELOCITY, (0.3, -0.2))
    bc = uniform_boundary(left=wall, right=wall, bottom=wall, top=wall)
    v = FaceField(grid, 0.3, -0.2)

    energy = strain_energy(grid, bc)
    np.testing.assert_allclose(energy.rates(v.flat), 0.0, atol=1e-12)
    assert energy.dissipation(1.0, v.flat) == pytest.approx(0.0, abs=1e-20)
