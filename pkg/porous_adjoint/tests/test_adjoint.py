import logging

import numpy as np
import pytest

from porous_adjoint.adjoint import (
    AdjointSource,
    analytical_adjoint,
    solve_adjoint,
    solve_adjoint_brinkman,
    solve_adjoint_darcy,
)
from porous_adjoint.classify import BvpClass, ClassTag, classify_bvp
from porous_adjoint.exceptions import InputError, NotAnalyticallySolvable
from porous_adjoint.grid import BoundaryCondition
from porous_adjoint.verification import random_instance

logger = logging.getLogger(__name__)


def rng(seed: int = 2024) -> np.random.Generator:
    return np.random.default_rng(seed)


@pytest.mark.parametrize("model", ["darcy", "brinkman", "brinkman_traction"])
@pytest.mark.parametrize("tag", [ClassTag.A, ClassTag.B])
def test_pressure_driven_adjoint_is_forward_velocity(model: str, tag: ClassTag):
    """
    Parameterize Combinations
    -------------------------
    model : str
        Darcy, main-form or traction-form Darcy-Brinkman.

    tag : :py:class:`~porous_adjoint.classify.ClassTag`
        A pressure-driven class.
    """

    problem = random_instance(model, tag, nx=12, rng=rng())
    assert classify_bvp(problem).tag == tag

    forward = problem.solve()
    adjoint = problem.solve_adjoint(forward)

    scale = forward.v.max_abs()
    np.testing.assert_allclose(adjoint.lambda_v.flat, forward.v.flat, atol=1e-8 * scale)
    np.testing.assert_allclose(adjoint.lambda_p.values, 0.0, atol=1e-8 * scale)
    assert adjoint.source == AdjointSource.NUMERICAL


@pytest.mark.parametrize("model", ["darcy", "brinkman", "brinkman_traction"])
def test_class_d_adjoint_is_negative_pressure(model: str):

    problem = random_instance(model, ClassTag.D, nx=12, rng=rng())
    assert classify_bvp(problem).tag == ClassTag.D

    forward = problem.solve()
    adjoint = problem.solve_adjoint(forward)

    scale = max(forward.v.max_abs(), float(np.abs(forward.p.values).max()))
    np.testing.assert_allclose(adjoint.lambda_v.flat, 0.0, atol=1e-8 * scale)
    np.testing.assert_allclose(adjoint.lambda_p.values, -forward.p.values, atol=1e-8 * scale)


def test_class_c_adjoint_matches_closed_form():

    problem = random_instance("darcy", ClassTag.C, nx=12, rng=rng())
    assert classify_bvp(problem).tag == ClassTag.C

    forward = problem.solve()
    numerical = problem.solve_adjoint(forward)
    closed_form = analytical_adjoint(ClassTag.C, forward, psi=problem.body_force.potential)

    scale = float(np.abs(forward.p.values).max())
    np.testing.assert_allclose(numerical.lambda_v.flat, 0.0, atol=1e-8 * scale)
    # Both adjoint pressures carry the mean-zero gauge.
    np.testing.assert_allclose(numerical.lambda_p.values, closed_form.lambda_p.values, atol=1e-8 * scale)


@pytest.mark.parametrize("model", ["darcy", "brinkman"])
def test_zero_forward_gives_zero_adjoint(model: str):

    problem = random_instance(model, ClassTag.D, nx=6, rng=rng())
    grid = problem.grid
    inlet = problem.bc["left"]
    zero_inlet = BoundaryCondition(inlet.kind, np.zeros_like(inlet.values(grid, "left")))
    problem = problem.with_boundary(problem.bc.replace(left=zero_inlet))

    forward = problem.solve()
    adjoint = problem.solve_adjoint(forward)

    assert forward.v.max_abs() <= 1e-14
    assert adjoint.lambda_v.max_abs() <= 1e-14
    np.testing.assert_allclose(adjoint.lambda_p.values, 0.0, atol=1e-14)


def test_general_adjoint_is_divergence_free():

    problem = random_instance("darcy", ClassTag.GENERAL, nx=10, rng=rng())
    adjoint = solve_adjoint(problem, problem.solve())

    assert adjoint.max_divergence() <= 1e-9


def test_model_specific_entry_points_check_the_model():

    darcy = random_instance("darcy", ClassTag.B, nx=4, rng=rng())
    brinkman = random_instance("brinkman", ClassTag.B, nx=4, rng=rng())

    with pytest.raises(InputError):
        solve_adjoint_darcy(brinkman, brinkman.solve())

    with pytest.raises(InputError):
        solve_adjoint_brinkman(darcy, darcy.solve())


def test_analytical_adjoint_classes():

    problem = random_instance("darcy", ClassTag.B, nx=6, rng=rng())
    forward = problem.solve()

    b = analytical_adjoint("B", forward)
    np.testing.assert_array_equal(b.lambda_v.flat, forward.v.flat)
    np.testing.assert_array_equal(b.lambda_p.values, 0.0)
    assert b.source == AdjointSource.ANALYTICAL

    d = analytical_adjoint(BvpClass(ClassTag.D, "darcy"), forward)
    np.testing.assert_array_equal(d.lambda_v.flat, 0.0)
    np.testing.assert_array_equal(d.lambda_p.values, -forward.p.values)


def test_analytical_adjoint_errors():

    problem = random_instance("darcy", ClassTag.GENERAL, nx=4, rng=rng())
    forward = problem.solve()

    with pytest.raises(NotAnalyticallySolvable):
        analytical_adjoint(ClassTag.GENERAL, forward)

    with pytest.raises(InputError):
        analytical_adjoint(ClassTag.C, forward)

    with pytest.raises(InputError):
        analytical_adjoint("E", forward)
