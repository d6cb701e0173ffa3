import logging
from typing import Tuple

import numpy as np
import pytest

from porous_adjoint.brinkman import BrinkmanProblem
from porous_adjoint.darcy import DarcyProblem
from porous_adjoint.flow_problem import BodyForce
from porous_adjoint.grid import BoundaryCondition, BoundaryKind, CellField, FaceField, make_grid, uniform_boundary

logger = logging.getLogger("porous_adjoint")

pi = np.pi


def permeability(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 1.0 + 0.5 * np.sin(pi * x) * np.sin(pi * y)


def observed_order(coarse: float, fine: float) -> float:
    return float(np.log2(coarse / fine))


def face_error(v: FaceField, exact: FaceField) -> float:
    volumes = v.grid.face_volumes().flat
    return float(np.sqrt(np.sum(volumes * (v.flat - exact.flat) ** 2)))


def darcy_errors(n: int) -> Tuple[float, float]:
    """
    Pressure ``cos(pi x) cos(pi y)`` has no normal gradient on the unit square, so the exact flux vanishes on the
    boundary and the problem is closed with zero normal velocity and the manufactured source ``div v``.
    """
    grid = make_grid(n, n)

    def source(x, y):
        return pi ** 2 * (
            np.sin(pi * x) * np.cos(pi * x) * np.sin(pi * y) * np.cos(pi * y)
            + 2.0 * permeability(x, y) * np.cos(pi * x) * np.cos(pi * y)
        )

    # Cell-centre sampling of the source balances only up to O(h^2); remove the discrete mean.
    s = CellField.from_function(grid, source).values
    s = s - s.mean()

    wall = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, 0.0)
    bc = uniform_boundary(left=wall, right=wall, bottom=wall, top=wall)
    problem = DarcyProblem(grid, CellField.from_function(grid, permeability), 1.0, bc, source=CellField(grid, s))
    solution = problem.solve()

    exact_p = CellField.from_function(grid, lambda x, y: np.cos(pi * x) * np.cos(pi * y)).values
    difference = (solution.p.values - solution.p.values.mean()) - (exact_p - exact_p.mean())
    pressure_error = float(np.sqrt(grid.cell_area * np.sum(difference ** 2)))

    exact_v = FaceField.from_function(
        grid,
        lambda x, y: pi * permeability(x, y) * np.sin(pi * x) * np.cos(pi * y),
        lambda x, y: pi * permeability(x, y) * np.cos(pi * x) * np.sin(pi * y),
    )
    return pressure_error, face_error(solution.v, exact_v)


def brinkman_velocity_error(n: int, form: str) -> float:
    """
    Divergence-free velocity from the stream function ``sin^2(pi x) sin^2(pi y)``, which vanishes with its tangential
    component on every wall, driven by the face-sampled force ``mu v / k - mu laplace(v)`` at zero pressure.
    """
    grid = make_grid(n, n)

    def u(x, y):
        return pi * np.sin(pi * x) ** 2 * np.sin(2.0 * pi * y)

    def w(x, y):
        return -pi * np.sin(2.0 * pi * x) * np.sin(pi * y) ** 2

    def force_x(x, y):
        laplacian = 2.0 * pi ** 3 * np.sin(2.0 * pi * y) * (2.0 * np.cos(2.0 * pi * x) - 1.0)
        return u(x, y) / permeability(x, y) - laplacian

    def force_y(x, y):
        laplacian = 2.0 * pi ** 3 * np.sin(2.0 * pi * x) * (1.0 - 2.0 * np.cos(2.0 * pi * y))
        return w(x, y) / permeability(x, y) - laplacian

    wall = BoundaryCondition(BoundaryKind.FULL_VELOCITY, (0.0, 0.0))
    bc = uniform_boundary(left=wall, right=wall, bottom=wall, top=wall)
    problem = BrinkmanProblem(
        grid,
        CellField.from_function(grid, permeability),
        1.0,
        bc,
        body_force=BodyForce.from_faces(FaceField.from_function(grid, force_x, force_y)),
        form=form,
    )
    solution = problem.solve()

    return face_error(solution.v, FaceField.from_function(grid, u, w))


@pytest.mark.slow
def test_darcy_manufactured_solution_converges_at_second_order():

    coarse_p, coarse_v = darcy_errors(32)
    fine_p, fine_v = darcy_errors(64)
    logger.info(f"Darcy errors: p {coarse_p:.3e} -> {fine_p:.3e}, v {coarse_v:.3e} -> {fine_v:.3e}.")

    assert observed_order(coarse_p, fine_p) >= 1.9
    assert observed_order(coarse_v, fine_v) >= 1.9


@pytest.mark.slow
@pytest.mark.parametrize("form", ["main", "traction"])
def test_brinkman_manufactured_solution_converges_at_second_order(form: str):
    """
    Parameterize Combinations
    -------------------------
    form : str
        Darcy-Brinkman form; both reduce to no-slip walls here.
    """

    coarse = brinkman_velocity_error(32, form)
    fine = brinkman_velocity_error(64, form)
    logger.info(f"Darcy-Brinkman ({form}) velocity errors: {coarse:.3e} -> {fine:.3e}.")

    assert observed_order(coarse, fine) >= 1.9


def test_manufactured_errors_decrease_on_refinement():

    assert darcy_errors(16)[1] < darcy_errors(8)[1]
    assert brinkman_velocity_error(16, "main") < brinkman_velocity_error(8, "main")
