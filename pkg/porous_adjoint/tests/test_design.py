import logging

import numpy as np
import pytest

from porous_adjoint.classify import ClassTag
from porous_adjoint.design import (
    HIGH_PERMEABILITY,
    LOW_PERMEABILITY,
    MAXIMIZE,
    MINIMIZE,
    TABLE1_PATTERN,
    DesignField,
    Scenario,
    Verdict,
    bounded_volume,
    channel_problem_ab,
    channel_problem_cd,
    design_verdict,
    interpolate_permeability,
    interpolation_derivative,
    objective_monotone_check,
    optimize,
    run_table1,
    smooth,
)
from porous_adjoint.dissipation import discrete_gradient
from porous_adjoint.exceptions import InputError, MisuseError
from porous_adjoint.grid import CellField, make_grid
from porous_adjoint.verification import random_instance

logger = logging.getLogger(__name__)


def test_interpolation_example():

    grid = make_grid(1, 1)
    scenario = Scenario(k_low=1e-4, k_high=1.0, q=1.0)

    k = interpolate_permeability(CellField(grid, 0.5), scenario)
    # 1 / k = 1 + (1e4 - 1) * 0.5 * 2 / 1.5
    assert k.values[0, 0] == pytest.approx(1.0 / (1.0 + 9999.0 * 2.0 / 3.0), rel=1e-12)


@pytest.mark.parametrize("gamma, expected", [(0.0, 1e-2), (1.0, 1.0)])
def test_interpolation_endpoints(gamma: float, expected: float):

    grid = make_grid(2, 2)
    k = interpolate_permeability(CellField(grid, gamma), Scenario())

    np.testing.assert_allclose(k.values, expected, rtol=1e-12)


def test_interpolation_is_increasing():

    grid = make_grid(11, 1)
    gamma = CellField(grid, np.linspace(0.0, 1.0, 11))

    k = interpolate_permeability(gamma, Scenario()).values.ravel()
    assert np.all(np.diff(k) > 0.0)
    assert np.all(interpolation_derivative(gamma, Scenario()).values > 0.0)


def test_interpolation_derivative_matches_finite_differences():

    grid = make_grid(5, 1)
    scenario = Scenario(q=3.0)
    gamma = np.array([[0.1], [0.3], [0.5], [0.7], [0.9]])
    step = 1e-6

    plus = interpolate_permeability(CellField(grid, gamma + step), scenario).values
    minus = interpolate_permeability(CellField(grid, gamma - step), scenario).values
    expected = (plus - minus) / (2.0 * step)

    np.testing.assert_allclose(interpolation_derivative(CellField(grid, gamma), scenario).values, expected, rtol=1e-6)


def test_interpolation_rejects_out_of_range_design():

    grid = make_grid(2, 1)

    with pytest.raises(InputError):
        interpolate_permeability(CellField(grid, 1.5), Scenario())


@pytest.mark.parametrize(
    "kwargs",
    [
        {"sense": "extremize"},
        {"bound": "medium"},
        {"volume_fraction": 0.0},
        {"volume_fraction": 1.0},
        {"k_low": 2.0, "k_high": 1.0},
        {"k_low": 0.0},
        {"q": 0.0},
    ]
)
def test_invalid_scenarios(kwargs):
    """
    Parameterize Combinations
    -------------------------
    kwargs : dict [str, Any]
        A single invalid scenario field.
    """

    with pytest.raises(InputError):
        Scenario(**kwargs)


def test_scenario_sign_and_dict():

    assert Scenario(sense=MAXIMIZE).sign == 1.0
    assert Scenario(sense=MINIMIZE).sign == -1.0
    assert Scenario().to_dict() == {
        "sense": "maximize", "bound": "high", "volume_fraction": 0.4, "k_low": 1e-2, "k_high": 1.0, "q": 8.0,
    }


def test_design_field_range():

    grid = make_grid(2, 2)
    assert DesignField.uniform(grid, 0.3).gamma.mean() == pytest.approx(0.3)

    with pytest.raises(InputError):
        DesignField(CellField(grid, -0.1))


@pytest.mark.parametrize(
    "values, expected",
    [
        ([1.0, 0.9995], Verdict.TRIVIAL_ALL_HIGH),
        ([0.0, 0.0005], Verdict.TRIVIAL_ALL_LOW),
        ([0.0, 1.0], Verdict.NONTRIVIAL),
        ([0.4, 0.4], Verdict.NONTRIVIAL),
    ]
)
def test_design_verdict(values, expected: Verdict):
    """
    Parameterize Combinations
    -------------------------
    values : list of float
        Design values of a two-cell grid.

    expected : :py:class:`~porous_adjoint.design.Verdict`
        The expected classification of the design.
    """

    grid = make_grid(2, 1)
    assert design_verdict(CellField(grid, np.array(values))) == expected


def test_bounded_volume():

    grid = make_grid(2, 1)
    gamma = CellField(grid, np.array([0.2, 0.6]))

    assert bounded_volume(gamma, Scenario(bound=HIGH_PERMEABILITY)) == pytest.approx(0.4)
    assert bounded_volume(gamma, Scenario(bound=LOW_PERMEABILITY)) == pytest.approx(0.6)


def test_smooth_keeps_constants():

    values = np.full((6, 4), 0.3)
    np.testing.assert_allclose(smooth(values), 0.3)

    spike = np.zeros((5, 5))
    spike[2, 2] = 9.0
    np.testing.assert_allclose(smooth(spike)[1:4, 1:4], 1.0)


def test_maximize_with_low_bound_fills_domain_with_high_material():

    problem = channel_problem_ab(make_grid(8, 8))
    state = optimize(problem, Scenario(MAXIMIZE, LOW_PERMEABILITY, 0.4))

    assert state.verdict == Verdict.TRIVIAL_ALL_HIGH
    assert state.converged
    assert state.iterations <= 100


def test_maximize_with_high_bound_is_nontrivial():

    problem = channel_problem_ab(make_grid(8, 8))
    state = optimize(problem, Scenario(MAXIMIZE, HIGH_PERMEABILITY, 0.4))

    assert state.verdict == Verdict.NONTRIVIAL
    assert state.constraint_active
    assert abs(state.gamma.mean() - 0.4) <= 0.01


def test_minimize_velocity_driven_with_high_bound_is_nontrivial():

    problem = channel_problem_cd(make_grid(8, 8))
    state = optimize(problem, Scenario(MINIMIZE, HIGH_PERMEABILITY, 0.4))

    assert state.verdict == Verdict.NONTRIVIAL
    assert abs(state.gamma.mean() - 0.4) <= 0.01


@pytest.mark.parametrize("sense", [MAXIMIZE, MINIMIZE])
def test_objective_history_is_monotone(sense: str):
    """
    Parameterize Combinations
    -------------------------
    sense : str
        Direction of the optimization.
    """

    problem = random_instance("darcy", ClassTag.B, nx=8, rng=np.random.default_rng(11))
    state = optimize(problem, Scenario(sense, HIGH_PERMEABILITY, 0.4), max_iters=15)

    history = np.asarray(state.objective_history)
    slack = 1e-12 * np.abs(history[:-1]).clip(min=1.0)
    if sense == MAXIMIZE:
        assert np.all(np.diff(history) >= -slack)
    else:
        assert np.all(np.diff(history) <= slack)

    assert state.volume_history[-1] <= 0.4 + 1e-9


@pytest.mark.parametrize("model", ["brinkman", "brinkman_traction"])
@pytest.mark.parametrize("sense", [MAXIMIZE, MINIMIZE])
def test_brinkman_optimization_moves_dissipation_in_scenario_direction(model: str, sense: str):
    """
    Maximizing on the pressure-driven channel raises the dissipation step by step and minimizing on the
    velocity-driven channel lowers it, with the no-slip walls making the sensitivity nonuniform.

    Parameterize Combinations
    -------------------------
    model : str
        Main or traction form.

    sense : str
        Direction of the optimization.
    """

    grid = make_grid(8, 8)
    problem = channel_problem_ab(grid, model) if sense == MAXIMIZE else channel_problem_cd(grid, model)
    state = optimize(problem, Scenario(sense, HIGH_PERMEABILITY, 0.4), max_iters=8)

    history = np.asarray(state.objective_history)
    sign = 1.0 if sense == MAXIMIZE else -1.0
    assert len(history) > 1
    assert np.all(sign * np.diff(history) >= -1e-12 * np.abs(history[:-1]).clip(min=1.0))
    assert sign * (history[-1] - history[0]) > 1e-6 * abs(history[0])
    assert state.volume_history[-1] <= 0.4 + 1e-9


@pytest.mark.parametrize("model", ["brinkman", "brinkman_traction"])
def test_design_sensitivity_predicts_dissipation_change(model: str):
    """
    The design sensitivity the optimizer steps along is the derivative of the dissipation it evaluates.

    Parameterize Combinations
    -------------------------
    model : str
        Main or traction form.
    """

    grid = make_grid(6, 6)
    rng = np.random.default_rng(13)
    scenario = Scenario(MAXIMIZE, HIGH_PERMEABILITY, 0.4)
    problem = channel_problem_ab(grid, model)

    def dissipation(values: np.ndarray) -> float:
        current = problem.with_permeability(interpolate_permeability(CellField(grid, values), scenario))
        return current.total_dissipation(current.solve().v)

    gamma = rng.uniform(0.2, 0.8, grid.cell_shape)
    current = problem.with_permeability(interpolate_permeability(CellField(grid, gamma), scenario))
    sensitivity = discrete_gradient(current).values * interpolation_derivative(CellField(grid, gamma), scenario).values

    direction = rng.uniform(0.5, 1.0, grid.cell_shape)
    step = 1e-5
    predicted = float(np.sum(sensitivity * direction))
    measured = (dissipation(gamma + step * direction) - dissipation(gamma - step * direction)) / (2.0 * step)

    assert measured == pytest.approx(predicted, rel=1e-4)


def test_general_problem_warns():

    problem = random_instance("darcy", ClassTag.GENERAL, nx=6, rng=np.random.default_rng(3))

    with pytest.warns(UserWarning):
        optimize(problem, Scenario(), max_iters=2)


@pytest.mark.parametrize("kwargs", [{"max_iters": 0}, {"move_limit": 0.0}, {"move_limit": 1.5}])
def test_invalid_optimizer_settings(kwargs):
    """
    Parameterize Combinations
    -------------------------
    kwargs : dict [str, Any]
        A single invalid optimizer setting.
    """

    problem = channel_problem_ab(make_grid(4, 4))

    with pytest.raises(InputError):
        optimize(problem, Scenario(), **kwargs)


def test_channel_problem_classes():

    grid = make_grid(4, 4)

    for model in ("darcy", "brinkman", "brinkman_traction"):
        assert channel_problem_ab(grid, model).solve().v.max_abs() > 0.0
    with pytest.raises(InputError):
        channel_problem_ab(grid, "stokes")
    with pytest.raises(InputError):
        channel_problem_cd(grid, "stokes")


def test_table1_rejects_swapped_problems():

    grid = make_grid(4, 4)

    with pytest.raises(InputError):
        run_table1(channel_problem_cd(grid), channel_problem_ab(grid))


@pytest.mark.slow
def test_table1_pattern():

    grid = make_grid(32, 32)
    result = run_table1(channel_problem_ab(grid), channel_problem_cd(grid), max_iters=100, threads=2)

    assert result.verdicts == TABLE1_PATTERN
    assert result.matches_expected()

    for bound, senses in result.states.items():
        for sense, groups in senses.items():
            for group, state in groups.items():
                if state.verdict == Verdict.NONTRIVIAL:
                    assert abs(state.volume - 0.4) <= 0.01, (bound, sense, group)

    summary = result.to_dict()
    assert summary["verdicts"]["high"]["maximize"]["AB"] == "Nontrivial"
    assert summary["verdicts"]["low"]["minimize"]["CD"] == "Trivial-AllHigh"


@pytest.mark.parametrize("model", ["darcy", "brinkman", "brinkman_traction"])
def test_objective_monotone_check(model: str):
    """
    Parameterize Combinations
    -------------------------
    model : str
        Flow model of the canonical channels.
    """

    grid = make_grid(8, 8)

    increasing = objective_monotone_check(channel_problem_ab(grid, model))
    decreasing = objective_monotone_check(channel_problem_cd(grid, model))

    assert np.all(np.diff(increasing) / increasing[0] > 1e-6)
    assert np.all(np.diff(decreasing) / decreasing[0] < -1e-6)


def test_monotone_check_of_rest_warns():

    problem = channel_problem_ab(make_grid(4, 4), pressure_drop=0.0)

    with pytest.warns(UserWarning):
        values = objective_monotone_check(problem)
    assert values == [0.0, 0.0, 0.0]


def test_monotone_check_misuse():

    grid = make_grid(4, 4)

    with pytest.raises(MisuseError):
        objective_monotone_check(channel_problem_ab(grid), scales=(1.0, 1.0))
    with pytest.raises(MisuseError):
        objective_monotone_check(channel_problem_ab(grid), scales=(-1.0, 2.0))
    with pytest.raises(MisuseError):
        objective_monotone_check(random_instance("darcy", ClassTag.GENERAL, nx=4, rng=np.random.default_rng(0)))
