import logging

import numpy as np
import pytest
from scipy.integrate import quad

from porous_adjoint.adjoint import AdjointSolution, analytical_adjoint
from porous_adjoint.classify import ClassTag
from porous_adjoint.darcy import DarcyProblem
from porous_adjoint.dissipation import (
    GradientReport,
    SensitivityField,
    directional_derivative,
    discrete_gradient,
    fd_gradient,
    gradient_report,
    relative_error,
    sensitivity_field,
    total_dissipation_brinkman,
    total_dissipation_darcy,
)
from porous_adjoint.exceptions import InputError
from porous_adjoint.grid import BoundaryCondition, BoundaryKind, CellField, FaceField, make_grid, uniform_boundary
from porous_adjoint.verification import random_instance

logger = logging.getLogger(__name__)


def channel(nx: int = 8, inflow: bool = False) -> DarcyProblem:
    grid = make_grid(nx, 1)
    wall = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, 0.0)
    if inflow:
        left = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, -1.0)
    else:
        left = BoundaryCondition(BoundaryKind.PRESSURE, 1.0)
    bc = uniform_boundary(left=left, right=BoundaryCondition(BoundaryKind.PRESSURE, 0.0), bottom=wall, top=wall)
    return DarcyProblem(grid, CellField(grid, 1.0), 1.0, bc)


@pytest.mark.parametrize("k, expected", [(1.0, 1.0), (2.0, 0.5)])
def test_darcy_dissipation_of_uniform_flow(k: float, expected: float):

    grid = make_grid(4, 4)
    v = FaceField(grid, 1.0, 0.0)

    assert total_dissipation_darcy(grid, CellField(grid, k), 1.0, v) == pytest.approx(expected, rel=1e-14)


def test_darcy_dissipation_of_channel_solution():

    problem = channel()
    solution = problem.solve()

    assert problem.total_dissipation(solution.v) == pytest.approx(1.0, rel=1e-12)


def test_brinkman_dissipation_of_uniform_flow_has_no_strain_term():

    grid = make_grid(5, 3)
    k = CellField(grid, 0.4)
    v = FaceField(grid, 0.7, -0.2)

    assert total_dissipation_brinkman(grid, k, 1.3, v) == pytest.approx(total_dissipation_darcy(grid, k, 1.3, v))


def test_brinkman_dissipation_of_pure_shear():

    grid = make_grid(16, 16)
    v = FaceField.from_function(grid, lambda x, y: y, lambda x, y: 0.0 * x)
    side = BoundaryCondition(BoundaryKind.PRESSURE, 0.0, tangential=0.0)
    bc = uniform_boundary(
        left=side,
        right=side,
        bottom=BoundaryCondition(BoundaryKind.FULL_VELOCITY, (0.0, 0.0)),
        top=BoundaryCondition(BoundaryKind.FULL_VELOCITY, (1.0, 0.0)),
    )

    # 2 mu D:D = 2 (0.5**2 + 0.5**2) = 1 everywhere; the drag term is suppressed by the huge permeability.
    assert total_dissipation_brinkman(grid, CellField(grid, 1e12), 1.0, v, bc) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("model", ["brinkman", "brinkman_traction"])
@pytest.mark.parametrize("tag", [ClassTag.A, ClassTag.B])
def test_brinkman_dissipation_equals_boundary_work(model: str, tag: ClassTag):
    """
    Without body force and sources the discrete dissipation of a solution equals the work of the boundary pressure
    ``-sum(p_b v.n * face length)``.

    Parameterize Combinations
    -------------------------
    model : str
        Main or traction form.

    tag : :py:class:`~porous_adjoint.classify.ClassTag`
        Pressure-loaded classes.
    """

    problem = random_instance(model, tag, nx=12, rng=np.random.default_rng(21))
    grid = problem.grid
    solution = problem.solve()
    v = solution.v.flat

    data = problem.boundary_data()
    lengths = np.concatenate([np.full(grid.num_x_faces, grid.hy), np.full(grid.num_y_faces, grid.hx)])
    work = -np.sum(np.where(data.pressure, data.pressure_values * data.sign * v * lengths, 0.0))

    assert work > 0.0
    assert problem.total_dissipation(solution.v) == pytest.approx(work, rel=1e-9)


def test_dissipation_of_rest_is_zero():

    grid = make_grid(3, 3)
    zero = FaceField.zeros(grid)

    assert total_dissipation_darcy(grid, CellField(grid, 1.0), 1.0, zero) == 0.0
    assert total_dissipation_brinkman(grid, CellField(grid, 1.0), 1.0, zero) == 0.0


def test_dissipation_rejects_nonpositive_permeability():

    grid = make_grid(2, 2)

    with pytest.raises(InputError):
        total_dissipation_darcy(grid, CellField(grid, np.array([[1.0, 1.0], [-1.0, 1.0]])), 1.0, FaceField.zeros(grid))


def test_sensitivity_density_of_pressure_driven_channel():

    problem = channel()
    forward = problem.solve()
    s = sensitivity_field(problem.k, problem.mu, forward.v, analytical_adjoint(ClassTag.B, forward))

    np.testing.assert_allclose(s.density.values, 1.0, rtol=1e-12)
    np.testing.assert_allclose(s.per_cell.values, problem.grid.cell_area, rtol=1e-12)


def test_sensitivity_density_of_velocity_driven_channel():

    problem = channel(inflow=True)
    forward = problem.solve()
    s = sensitivity_field(problem.k, problem.mu, forward.v, analytical_adjoint(ClassTag.D, forward))

    np.testing.assert_allclose(s.density.values, -1.0, rtol=1e-12)


def test_sensitivity_density_of_rest_is_zero():

    grid = make_grid(3, 2)
    zero = FaceField.zeros(grid)
    adjoint = AdjointSolution(FaceField(grid, 1.0, 1.0), CellField(grid, 0.0))

    s = sensitivity_field(CellField(grid, 1.0), 1.0, zero, adjoint)
    np.testing.assert_array_equal(s.density.values, 0.0)


@pytest.mark.parametrize("density, dk, expected", [(1.0, 1.0, 1.0), (-1.0, 0.1, -0.1)])
def test_directional_derivative(density: float, dk: float, expected: float):

    grid = make_grid(4, 4)
    s = SensitivityField(CellField(grid, density))

    assert directional_derivative(s, CellField(grid, dk)) == pytest.approx(expected, rel=1e-14)
    assert s.directional_derivative(CellField(grid, dk)) == pytest.approx(expected, rel=1e-14)


def test_directional_derivative_matches_summation():

    grid = make_grid(7, 5, 2.0, 1.5)
    rng = np.random.default_rng(17)
    density = rng.standard_normal(grid.cell_shape)
    dk = rng.standard_normal(grid.cell_shape)

    expected = 0.0
    for i in range(grid.nx):
        for j in range(grid.ny):
            expected += density[i, j] * dk[i, j] * grid.hx * grid.hy

    s = SensitivityField(CellField(grid, density))
    assert directional_derivative(s, CellField(grid, dk)) == pytest.approx(expected, rel=1e-12)


def test_directional_derivative_rejects_other_grid():

    s = SensitivityField(CellField(make_grid(2, 2), 1.0))

    with pytest.raises(InputError):
        directional_derivative(s, CellField(make_grid(3, 2), 1.0))


def test_fd_gradient_of_quadratic_objective():

    problem = channel(nx=4)
    grid = problem.grid
    k = CellField(grid, np.array([[0.5], [1.0], [1.5], [2.0]]))
    problem = problem.with_permeability(k)

    gradient = fd_gradient(problem, objective=lambda p: float(np.sum(p.k.values ** 2)))
    np.testing.assert_allclose(gradient.values, 2.0 * k.values, rtol=1e-8)

    constant = fd_gradient(problem, objective=lambda p: 3.0)
    np.testing.assert_array_equal(constant.values, 0.0)


def test_channel_gradients_agree_with_closed_form():
    """
    In the one-dimensional channel with unit data ``dPhi/dk_c = hx * hy * mu v**2 / k**2 = 1 / 8`` exactly.
    """

    problem = channel()
    report = gradient_report(problem, include_fd=True)

    np.testing.assert_allclose(report.discrete_gradient.values, 0.125, rtol=1e-10)
    np.testing.assert_allclose(report.adjoint_gradient.values, 0.125, rtol=1e-10)
    np.testing.assert_allclose(report.fd_gradient.values, 0.125, rtol=1e-6)


@pytest.mark.parametrize(
    "model, tag, nx",
    [
        ("darcy", ClassTag.B, 16),
        ("darcy", ClassTag.C, 10),
        ("darcy", ClassTag.GENERAL, 10),
        ("brinkman", ClassTag.B, 8),
        ("brinkman_traction", ClassTag.D, 8),
    ]
)
def test_discrete_gradient_matches_finite_differences(model: str, tag: ClassTag, nx: int):
    """
    Parameterize Combinations
    -------------------------
    model : str
        Flow model of the random instance.

    tag : :py:class:`~porous_adjoint.classify.ClassTag`
        Class of the random instance.

    nx : int
        Cells per side.
    """

    problem = random_instance(model, tag, nx=nx, rng=np.random.default_rng(99))

    discrete = discrete_gradient(problem)
    fd = fd_gradient(problem)

    assert relative_error(discrete, fd) <= 1e-6


def layered_channel_derivative_error(n: int) -> float:
    """
    Relative gap between the discrete directional derivative and the exact one for a channel layered in ``x``
    with ``k = 1 + sin(pi x) / 2``. The exact flow is uniform, ``Q = 1 / int(1 / k)``, and
    ``dPhi[dk] = Q**2 int(dk / k**2)``.
    """

    def k_exact(x):
        return 1.0 + 0.5 * np.sin(np.pi * x)

    def dk_exact(x, y):
        return x * y + 0.5

    resistance = quad(lambda x: 1.0 / k_exact(x), 0.0, 1.0)[0]
    flux = 1.0 / resistance
    exact = flux ** 2 * quad(lambda x: (0.5 * x + 0.5) / k_exact(x) ** 2, 0.0, 1.0)[0]

    grid = make_grid(n, 4)
    wall = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, 0.0)
    bc = uniform_boundary(
        left=BoundaryCondition(BoundaryKind.PRESSURE, 1.0),
        right=BoundaryCondition(BoundaryKind.PRESSURE, 0.0),
        bottom=wall,
        top=wall,
    )
    problem = DarcyProblem(grid, CellField.from_function(grid, lambda x, y: k_exact(x)), 1.0, bc)

    gradient = discrete_gradient(problem)
    discrete = float(np.sum(gradient.values * CellField.from_function(grid, dk_exact).values))
    return abs(discrete - exact) / abs(exact)


def test_discrete_directional_derivative_converges_to_continuous():

    errors = [layered_channel_derivative_error(n) for n in (16, 32, 64)]
    logger.info(f"Directional derivative errors: {errors}.")

    assert errors[0] < 1e-2
    assert np.log2(errors[0] / errors[1]) >= 1.0
    assert np.log2(errors[1] / errors[2]) >= 1.0


def test_fd_gradient_threads_match_serial():

    problem = random_instance("darcy", ClassTag.D, nx=5, rng=np.random.default_rng(4))

    serial = fd_gradient(problem)
    threaded = fd_gradient(problem, threads=3)

    np.testing.assert_array_equal(threaded.values, serial.values)


def test_relative_error():

    grid = make_grid(2, 1)
    a = CellField(grid, np.array([[1.0], [2.5]]))
    b = CellField(grid, np.array([[1.0], [2.0]]))

    assert relative_error(a, b) == pytest.approx(0.25)
    # Absolute error against a vanishing reference.
    assert relative_error(a, CellField(grid, 0.0)) == pytest.approx(2.5)


def test_gradient_report_without_finite_differences():

    problem = channel()
    report = gradient_report(problem, include_fd=False)

    assert report.fd_gradient is None
    assert set(report.errors) == {"adjoint_vs_discrete"}

    summary = report.to_dict()
    assert summary["grid"] == {"nx": 8, "ny": 1}
    assert "fd_gradient" not in summary


def test_gradient_report_keys():

    grid = make_grid(2, 2)
    report = GradientReport(CellField(grid, 1.0), CellField(grid, 1.0), CellField(grid, 2.0))

    assert set(report.errors) == {"adjoint_vs_discrete", "discrete_vs_fd", "adjoint_vs_fd"}
    assert report.errors["discrete_vs_fd"] == pytest.approx(0.5)
