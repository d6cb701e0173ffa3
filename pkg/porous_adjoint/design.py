"""
Two-material permeability design.

A design field ``gamma`` in [0, 1] per cell selects between a low-permeability (``gamma = 0``) and a high-permeability
(``gamma = 1``) material through a rational interpolation of the inverse permeability. :py:func:`optimize` extremizes
the total dissipation rate with a projected-gradient method under a volume bound on either material, and
:py:func:`run_table1` runs the eight combinations of sense, bound and problem class.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy.ndimage import uniform_filter
from tqdm import tqdm

from porous_adjoint.brinkman import BrinkmanProblem
from porous_adjoint.classify import ClassTag, classify_bvp
from porous_adjoint.darcy import DarcyProblem
from porous_adjoint.dissipation import discrete_gradient
from porous_adjoint.exceptions import InputError, InvariantError, MisuseError
from porous_adjoint.flow_problem import FlowProblem
from porous_adjoint.grid import BoundaryCondition, BoundaryKind, CellField, StaggeredGrid, uniform_boundary

logger = logging.getLogger(__name__)

MAXIMIZE = "maximize"
MINIMIZE = "minimize"
HIGH_PERMEABILITY = "high"
LOW_PERMEABILITY = "low"

CONVERGENCE_TOLERANCE = 1e-4
VERDICT_TOLERANCE = 1e-3
MAX_HALVINGS = 5
ACCEPTANCE_SLACK = 1e-12
BISECTION_TOLERANCE = 1e-12


class Verdict(str, Enum):
    TRIVIAL_ALL_HIGH = "Trivial-AllHigh"
    TRIVIAL_ALL_LOW = "Trivial-AllLow"
    NONTRIVIAL = "Nontrivial"


class DesignField():
    """
    Design variable ``gamma`` per cell, 1 for the high-permeability material and 0 for the low one.
    """

    def __init__(self, gamma: CellField) -> None:
        values = gamma.values
        if values.min() < 0.0 or values.max() > 1.0:
            raise InputError(f"Design values must lie in [0, 1]. Received range [{values.min()}, {values.max()}].")
        self._gamma = gamma

    def __repr__(self) -> str:
        return f"DesignField(mean={self._gamma.mean():.4f})"

    @property
    def gamma(self) -> CellField:
        return self._gamma

    @property
    def grid(self) -> StaggeredGrid:
        return self._gamma.grid

    @classmethod
    def uniform(cls, grid: StaggeredGrid, value: float) -> "DesignField":
        return cls(CellField(grid, value))


@dataclass(frozen=True)
class Scenario:
    """
    One optimization scenario.

    Attributes
    ----------
    sense : str
        ``"maximize"`` or ``"minimize"`` the total dissipation rate.

    bound : str
        Material whose volume is bounded: ``"high"`` bounds the high-permeability material
        (``mean(gamma) <= f``), ``"low"`` the low-permeability one (``mean(1 - gamma) <= f``).

    volume_fraction : float
        The bound ``f`` in (0, 1).

    k_low, k_high : float
        Permeabilities of the two materials, ``0 < k_low < k_high``.

    q : float
        Interpolation parameter, positive.
    """

    sense: str = MAXIMIZE
    bound: str = HIGH_PERMEABILITY
    volume_fraction: float = 0.4
    k_low: float = 1e-2
    k_high: float = 1.0
    q: float = 8.0

    def __post_init__(self) -> None:
        if self.sense not in (MAXIMIZE, MINIMIZE):
            raise InputError(f"Scenario sense must be '{MAXIMIZE}' or '{MINIMIZE}', received '{self.sense}'.")
        if self.bound not in (HIGH_PERMEABILITY, LOW_PERMEABILITY):
            raise InputError(
                f"Scenario bound must be '{HIGH_PERMEABILITY}' or '{LOW_PERMEABILITY}', received '{self.bound}'."
            )
        if not 0.0 < self.volume_fraction < 1.0:
            raise InputError(f"Volume fraction must lie in (0, 1), received {self.volume_fraction}.")
        if not 0.0 < self.k_low < self.k_high:
            raise InputError(f"Material permeabilities need 0 < k_low < k_high, received {self.k_low}, {self.k_high}.")
        if not self.q > 0.0:
            raise InputError(f"Interpolation parameter q must be positive, received {self.q}.")

    @property
    def sign(self) -> float:
        return 1.0 if self.sense == MAXIMIZE else -1.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sense": self.sense,
            "bound": self.bound,
            "volume_fraction": self.volume_fraction,
            "k_low": self.k_low,
            "k_high": self.k_high,
            "q": self.q,
        }


@dataclass
class DesignState:
    """
    Result of :py:func:`optimize`.
    """

    design: DesignField
    scenario: Scenario
    objective_history: List[float] = field(default_factory=list)
    volume_history: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def gamma(self) -> CellField:
        return self.design.gamma

    @property
    def volume(self) -> float:
        return bounded_volume(self.design.gamma, self.scenario)

    @property
    def constraint_active(self) -> bool:
        return self.volume >= self.scenario.volume_fraction - VERDICT_TOLERANCE

    @property
    def verdict(self) -> Verdict:
        return design_verdict(self.design.gamma)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario.to_dict(),
            "verdict": self.verdict.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "constraint_active": self.constraint_active,
            "bounded_volume": self.volume,
            "objective_history": list(self.objective_history),
            "volume_history": list(self.volume_history),
        }


def design_verdict(gamma: CellField) -> Verdict:
    values = gamma.values
    if values.min() >= 1.0 - VERDICT_TOLERANCE:
        return Verdict.TRIVIAL_ALL_HIGH
    if values.max() <= VERDICT_TOLERANCE:
        return Verdict.TRIVIAL_ALL_LOW
    return Verdict.NONTRIVIAL


def bounded_volume(gamma: CellField, scenario: Scenario) -> float:
    """
    Area fraction of the bounded material.
    """
    mean = gamma.mean()
    return mean if scenario.bound == HIGH_PERMEABILITY else 1.0 - mean


def _check_gamma(gamma: CellField) -> np.ndarray:
    values = gamma.values
    if values.min() < 0.0 or values.max() > 1.0:
        raise InputError(f"Design values must lie in [0, 1]. Received range [{values.min()}, {values.max()}].")
    return values


def interpolate_permeability(gamma: CellField, scenario: Scenario) -> CellField:
    """
    ``1 / k = 1 / k_high + (1 / k_low - 1 / k_high) s (1 + q) / (s + q)`` with ``s = 1 - gamma``, so that
    ``k(0) = k_low`` and ``k(1) = k_high``.

    Errors
    ------
    InputError
        Raised when ``gamma`` leaves [0, 1].
    """
    s = 1.0 - _check_gamma(gamma)
    contrast = 1.0 / scenario.k_low - 1.0 / scenario.k_high
    inverse = 1.0 / scenario.k_high + contrast * s * (1.0 + scenario.q) / (s + scenario.q)
    return CellField(gamma.grid, 1.0 / inverse)


def interpolation_derivative(gamma: CellField, scenario: Scenario) -> CellField:
    """
    ``dk / dgamma`` of :py:func:`interpolate_permeability`, nonnegative.
    """
    s = 1.0 - _check_gamma(gamma)
    k = interpolate_permeability(gamma, scenario).values
    contrast = 1.0 / scenario.k_low - 1.0 / scenario.k_high
    q = scenario.q
    return CellField(gamma.grid, k ** 2 * contrast * (1.0 + q) * q / (s + q) ** 2)


def smooth(values: np.ndarray) -> np.ndarray:
    """
    3 x 3 moving average, edges padded with the nearest value.
    """
    return uniform_filter(values, size=3, mode="nearest")


def _project(
    gamma: np.ndarray,
    step: np.ndarray,
    move_limit: float,
    scenario: Scenario,
) -> np.ndarray:
    """
    Takes ``step`` inside the move-limit box and [0, 1], then shifts uniformly (bisection on the shift) only if the
    volume bound is violated.
    """
    lower = np.maximum(0.0, gamma - move_limit)
    upper = np.minimum(1.0, gamma + move_limit)
    f = scenario.volume_fraction

    def trial(shift: float) -> np.ndarray:
        return np.clip(gamma + step + shift, lower, upper)

    if scenario.bound == HIGH_PERMEABILITY:
        excess = lambda values: values.mean() - f  # noqa: E731
    else:
        excess = lambda values: (1.0 - values.mean()) - f  # noqa: E731

    candidate = trial(0.0)
    if excess(candidate) <= 0.0:
        return candidate

    # The bounded volume is monotone in the shift: decreasing for the high bound, increasing for the low bound.
    direction = -1.0 if scenario.bound == HIGH_PERMEABILITY else 1.0
    low, high = 0.0, 1.0 + 2.0 * move_limit + float(np.abs(step).max())
    while high - low > BISECTION_TOLERANCE:
        middle = 0.5 * (low + high)
        if excess(trial(direction * middle)) > 0.0:
            low = middle
        else:
            high = middle

    logger.debug(f"Volume projection shift {direction * high:.3e}.")
    return trial(direction * high)


def optimize(
    problem: FlowProblem,
    scenario: Scenario,
    max_iters: int = 200,
    move_limit: float = 0.2,
    use_filter: bool = False,
    show_progress: bool = False,
) -> DesignState:
    """
    Extremizes the total dissipation rate over the design field.

    Each iteration solves the forward problem at ``k(gamma)``, forms ``dPhi/dgamma = dPhi/dk * dk/dgamma`` from the
    discrete gradient, steps by ``move_limit`` along the (normalized) ascent or descent direction and projects onto
    the move-limit box, [0, 1] and the volume bound. A step is accepted only if the objective improves (up to a
    relative slack of 1e-12); otherwise the move limit is halved, at most five times. The run stops when
    ``max |delta gamma| < 1e-4``, when no step is accepted or after ``max_iters`` iterations.

    Parameters
    ----------
    problem : :py:class:`~porous_adjoint.flow_problem.FlowProblem`
        The boundary value problem; its permeability is replaced by the interpolated design.

    scenario : :py:class:`Scenario`
        Sense, bound and material data.

    max_iters : int, default 200
        Iteration cap.

    move_limit : float, default 0.2
        Largest change of any design value per iteration.

    use_filter : bool, default False
        Smooth the design sensitivity with a 3 x 3 moving average.

    show_progress : bool, default False
        Display a ``tqdm`` progress bar.

    Returns
    -------
    state : :py:class:`DesignState`

    Errors
    ------
    InputError
        Raised for a nonpositive iteration cap or move limit.

    ConvergenceError
        Raised when a forward or adjoint solve fails.
    """

    if max_iters < 1:
        raise InputError(f"max_iters must be at least 1, received {max_iters}.")
    if not 0.0 < move_limit <= 1.0:
        raise InputError(f"move_limit must lie in (0, 1], received {move_limit}.")

    bvp_class = classify_bvp(problem)
    if bvp_class.tag == ClassTag.GENERAL:
        warnings.warn(
            "Optimizing a General boundary value problem; the sensitivity has no guaranteed sign.", UserWarning,
        )

    grid = problem.grid
    start = scenario.volume_fraction if scenario.bound == HIGH_PERMEABILITY else 1.0 - scenario.volume_fraction
    gamma = np.full(grid.cell_shape, start)

    def evaluate(values: np.ndarray) -> Tuple[FlowProblem, Any, float]:
        k = interpolate_permeability(CellField(grid, values), scenario)
        current = problem.with_permeability(k)
        forward = current.solve()
        return current, forward, current.total_dissipation(forward.v)

    current, forward, objective = evaluate(gamma)
    initial = CellField(grid, gamma)
    state = DesignState(DesignField(initial), scenario, [objective], [bounded_volume(initial, scenario)])

    progress = tqdm(range(max_iters), disable=not show_progress, desc=f"{scenario.sense}/{scenario.bound}")
    for iteration in progress:

        gradient_k = discrete_gradient(current, forward).values
        gradient = gradient_k * interpolation_derivative(CellField(grid, gamma), scenario).values
        if use_filter:
            gradient = smooth(gradient)

        scale = float(np.abs(gradient).max())
        state.iterations = iteration + 1
        if scale == 0.0:
            state.converged = True
            logger.info("Design sensitivity vanishes; stopping.")
            break

        direction = scenario.sign * gradient / scale
        move = move_limit
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            candidate = _project(gamma, move * direction, move, scenario)
            trial_problem, trial_forward, trial_objective = evaluate(candidate)
            slack = ACCEPTANCE_SLACK * max(1.0, abs(objective))
            if scenario.sign * (trial_objective - objective) >= -slack:
                accepted = True
                break
            move *= 0.5

        if not accepted:
            state.converged = True
            logger.info(f"No improving step after {MAX_HALVINGS} halvings of the move limit; stopping.")
            break

        change = float(np.abs(candidate - gamma).max())
        gamma = candidate
        current, forward, objective = trial_problem, trial_forward, trial_objective

        state.design = DesignField(CellField(grid, gamma))
        state.objective_history.append(objective)
        state.volume_history.append(bounded_volume(state.design.gamma, scenario))
        logger.debug(f"Iteration {iteration + 1}: objective {objective:.8e}, change {change:.3e}.")

        if change < CONVERGENCE_TOLERANCE:
            state.converged = True
            break

    logger.info(
        f"Optimization ({scenario.sense}, {scenario.bound} bound) finished after {state.iterations} iterations with "
        f"verdict {state.verdict.value}."
    )
    return state


def channel_problem_ab(
    grid: StaggeredGrid,
    model: str = "darcy",
    mu: float = 1.0,
    pressure_drop: float = 1.0,
) -> FlowProblem:
    """
    Pressure-driven channel: pressure ``pressure_drop`` on the left, 0 on the right and impermeable (no-slip under
    Darcy-Brinkman) walls on top and bottom. Class B.
    """
    k = CellField(grid, 1.0)
    if model == "darcy":
        wall = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, 0.0)
        bc = uniform_boundary(
            left=BoundaryCondition(BoundaryKind.PRESSURE, pressure_drop),
            right=BoundaryCondition(BoundaryKind.PRESSURE, 0.0),
            bottom=wall,
            top=wall,
        )
        return DarcyProblem(grid, k, mu, bc)

    wall = BoundaryCondition(BoundaryKind.FULL_VELOCITY, (0.0, 0.0))
    if model == "brinkman":
        bc = uniform_boundary(
            left=BoundaryCondition(BoundaryKind.PRESSURE, pressure_drop),
            right=BoundaryCondition(BoundaryKind.PRESSURE, 0.0),
            bottom=wall,
            top=wall,
        )
        return BrinkmanProblem(grid, k, mu, bc)

    if model == "brinkman_traction":
        bc = uniform_boundary(
            left=BoundaryCondition(BoundaryKind.TRACTION, (pressure_drop, 0.0)),
            right=BoundaryCondition(BoundaryKind.TRACTION, (0.0, 0.0)),
            bottom=wall,
            top=wall,
        )
        return BrinkmanProblem(grid, k, mu, bc, form="traction")

    raise InputError(f"Unknown model '{model}'. Expected 'darcy', 'brinkman' or 'brinkman_traction'.")


def channel_problem_cd(
    grid: StaggeredGrid,
    model: str = "darcy",
    mu: float = 1.0,
    inflow: float = 1.0,
) -> FlowProblem:
    """
    Velocity-driven channel: inflow ``inflow`` through the left side, zero outlet pressure (or traction) on the right
    and impermeable walls. Class D.
    """
    k = CellField(grid, 1.0)
    if model == "darcy":
        wall = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, 0.0)
        bc = uniform_boundary(
            left=BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, -inflow),
            right=BoundaryCondition(BoundaryKind.PRESSURE, 0.0),
            bottom=wall,
            top=wall,
        )
        return DarcyProblem(grid, k, mu, bc)

    wall = BoundaryCondition(BoundaryKind.FULL_VELOCITY, (0.0, 0.0))
    inlet = BoundaryCondition(BoundaryKind.FULL_VELOCITY, (inflow, 0.0))
    if model == "brinkman":
        bc = uniform_boundary(left=inlet, right=BoundaryCondition(BoundaryKind.PRESSURE, 0.0), bottom=wall, top=wall)
        return BrinkmanProblem(grid, k, mu, bc)

    if model == "brinkman_traction":
        bc = uniform_boundary(
            left=inlet, right=BoundaryCondition(BoundaryKind.TRACTION, (0.0, 0.0)), bottom=wall, top=wall,
        )
        return BrinkmanProblem(grid, k, mu, bc, form="traction")

    raise InputError(f"Unknown model '{model}'. Expected 'darcy', 'brinkman' or 'brinkman_traction'.")


TABLE1_PATTERN = {
    HIGH_PERMEABILITY: {
        MAXIMIZE: {"AB": Verdict.NONTRIVIAL, "CD": Verdict.TRIVIAL_ALL_LOW},
        MINIMIZE: {"AB": Verdict.TRIVIAL_ALL_LOW, "CD": Verdict.NONTRIVIAL},
    },
    LOW_PERMEABILITY: {
        MAXIMIZE: {"AB": Verdict.TRIVIAL_ALL_HIGH, "CD": Verdict.NONTRIVIAL},
        MINIMIZE: {"AB": Verdict.NONTRIVIAL, "CD": Verdict.TRIVIAL_ALL_HIGH},
    },
}


def _map_states(states: Dict[str, Dict[str, Dict[str, DesignState]]], func: Callable[[DesignState], Any]):
    return {
        bound: {sense: {group: func(state) for group, state in groups.items()} for sense, groups in senses.items()}
        for bound, senses in states.items()
    }


@dataclass
class Table1Result:
    """
    Verdicts and optimizer states of the eight scenarios, indexed ``[bound][sense][group]`` with groups ``"AB"`` and
    ``"CD"``.
    """

    states: Dict[str, Dict[str, Dict[str, DesignState]]]

    @property
    def verdicts(self) -> Dict[str, Dict[str, Dict[str, Verdict]]]:
        return _map_states(self.states, lambda state: state.verdict)

    def matches_expected(self) -> bool:
        return self.verdicts == TABLE1_PATTERN

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdicts": _map_states(self.states, lambda state: state.verdict.value),
            "matches_expected": self.matches_expected(),
            "scenarios": _map_states(self.states, lambda state: state.to_dict()),
        }


def run_table1(
    problem_ab: FlowProblem,
    problem_cd: FlowProblem,
    volume_fraction: float = 0.4,
    k_low: float = 1e-2,
    k_high: float = 1.0,
    q: float = 8.0,
    max_iters: int = 200,
    move_limit: float = 0.2,
    use_filter: bool = False,
    threads: int = 1,
    show_progress: bool = False,
) -> Table1Result:
    """
    Runs both senses under both bounds for a pressure-driven (class A or B) and a velocity-driven (class C or D)
    problem.

    Errors
    ------
    InputError
        Raised when ``problem_ab`` is not of class A or B or ``problem_cd`` not of class C or D.
    """
    if not classify_bvp(problem_ab).is_pressure_driven:
        raise InputError("The first scenario-table problem must be of class A or B.")
    if not classify_bvp(problem_cd).is_velocity_driven:
        raise InputError("The second scenario-table problem must be of class C or D.")

    jobs: List[Tuple[str, str, str, FlowProblem, Scenario]] = []
    for bound in (HIGH_PERMEABILITY, LOW_PERMEABILITY):
        for sense in (MAXIMIZE, MINIMIZE):
            scenario = Scenario(sense, bound, volume_fraction, k_low, k_high, q)
            jobs.append((bound, sense, "AB", problem_ab, scenario))
            jobs.append((bound, sense, "CD", problem_cd, scenario))

    def run(job: Tuple[str, str, str, FlowProblem, Scenario]) -> DesignState:
        return optimize(job[3], job[4], max_iters=max_iters, move_limit=move_limit, use_filter=use_filter)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            progress = tqdm(executor.map(run, jobs), total=len(jobs), disable=not show_progress, desc="Scenario table")
            results = list(progress)
    else:
        results = [run(job) for job in tqdm(jobs, disable=not show_progress, desc="Scenario table")]

    states: Dict[str, Dict[str, Dict[str, DesignState]]] = {}
    for (bound, sense, group, _, _), state in zip(jobs, results):
        states.setdefault(bound, {}).setdefault(sense, {})[group] = state

    result = Table1Result(states)
    logger.info(f"Scenario table verdicts match the expected pattern: {result.matches_expected()}.")
    return result


def objective_monotone_check(problem: FlowProblem, scales: Sequence[float] = (1.0, 2.0, 4.0)) -> List[float]:
    """
    Total dissipation at ``c * k`` for each scale ``c``; strictly increasing for classes A and B and strictly
    decreasing for classes C and D.

    Errors
    ------
    MisuseError
        Raised for a General problem or scales that are not positive and increasing.

    InvariantError
        Raised when the objective is not strictly monotone in the expected direction.
    """
    scales = [float(c) for c in scales]
    if any(c <= 0.0 for c in scales) or any(b <= a for a, b in zip(scales, scales[1:])):
        raise MisuseError(f"Scales must be positive and strictly increasing, received {scales}.")

    bvp_class = classify_bvp(problem)
    if bvp_class.tag == ClassTag.GENERAL:
        raise MisuseError("The monotonicity check needs a class A, B, C or D problem.")

    values = []
    for c in scales:
        scaled = problem.with_permeability(CellField(problem.grid, c * problem.k.values))
        values.append(scaled.total_dissipation(scaled.solve().v))

    if max(abs(v) for v in values) == 0.0:
        warnings.warn("The total dissipation vanishes for every scale; monotonicity is not asserted.", UserWarning)
        return values

    differences = np.diff(values)
    expected = 1.0 if bvp_class.is_pressure_driven else -1.0
    if not np.all(expected * differences > 0.0):
        raise InvariantError(
            f"Total dissipation {values} is not strictly {'increasing' if expected > 0 else 'decreasing'} for a class "
            f"{bvp_class.tag.value} problem."
        )
    return values


