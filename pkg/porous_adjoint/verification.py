"""
Randomized verification of the permeability sensitivities.

:py:func:`random_instance` draws a seeded boundary value problem of a requested model and class. The triple check
compares the continuous-adjoint, exact discrete and finite-difference gradients of one instance; the sign suite
checks the gradient sign over many instances of each class.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from porous_adjoint.brinkman import FORM_TRACTION, BrinkmanProblem
from porous_adjoint.classify import ClassTag, classify_bvp
from porous_adjoint.darcy import DarcyProblem
from porous_adjoint.dissipation import GradientReport, discrete_gradient, gradient_report, sensitivity_field
from porous_adjoint.exceptions import InputError, InvariantError
from porous_adjoint.flow_problem import BodyForce, FlowProblem
from porous_adjoint.grid import BoundaryCondition, BoundaryKind, CellField, make_grid, uniform_boundary

logger = logging.getLogger(__name__)

MODELS = ("darcy", "brinkman", "brinkman_traction")
RANDOM_CLASSES = (ClassTag.A, ClassTag.B, ClassTag.C, ClassTag.D, ClassTag.GENERAL)

SIGN_TOLERANCE = 1e-12
FD_TOLERANCE = 1e-6

# Median permeability of the random instances. The Darcy-Brinkman instances are drag dominated.
MEDIAN_PERMEABILITY = {"darcy": 1.0, "brinkman": 0.05, "brinkman_traction": 0.05}
PERMEABILITY_SPREAD = 0.25


def _random_permeability(rng: np.random.Generator, grid, model: str) -> CellField:
    values = MEDIAN_PERMEABILITY[model] * np.exp(PERMEABILITY_SPREAD * rng.standard_normal(grid.cell_shape))
    return CellField(grid, values)


def _smooth_profile(rng: np.random.Generator, n: int, mean: float, amplitude: float) -> np.ndarray:
    """
    Positive profile ``mean * (1 + amplitude * sin(...))`` over ``n`` faces with a random phase.
    """
    t = (np.arange(n) + 0.5) / n
    return mean * (1.0 + amplitude * np.sin(2.0 * np.pi * t + rng.uniform(0.0, 2.0 * np.pi)))


def _pressure_condition(model: str, value, tangential: float = 0.0, normal_sign: int = 1, axis: int = 0):
    """
    A pressure side for Darcy or main-form problems; a traction side ``t = -p n`` under the traction form.
    """
    if model != "brinkman_traction":
        return BoundaryCondition(BoundaryKind.PRESSURE, value, tangential=tangential)

    pressure = np.asarray(value, dtype=float)
    traction = np.zeros(pressure.shape + (2,))
    traction[..., axis] = -normal_sign * pressure
    return BoundaryCondition(BoundaryKind.TRACTION, traction)


def _wall(model: str) -> BoundaryCondition:
    if model == "darcy":
        return BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, 0.0)
    return BoundaryCondition(BoundaryKind.FULL_VELOCITY, (0.0, 0.0))


def _build(model: str, grid, k: CellField, bc, body_force: Optional[BodyForce] = None) -> FlowProblem:
    if model == "darcy":
        return DarcyProblem(grid, k, 1.0, bc, body_force=body_force)
    form = FORM_TRACTION if model == "brinkman_traction" else "main"
    return BrinkmanProblem(grid, k, 1.0, bc, body_force=body_force, form=form)


def random_instance(
    model: str,
    tag: ClassTag,
    nx: int = 16,
    ny: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> FlowProblem:
    """
    Draws a random boundary value problem of the given model and class on the unit square.

    The permeability is log-normal; boundary data are smooth random profiles chosen so that the flow has no
    stagnation points.

    * A: pressure (traction) on every side, sampled from a random affine pressure field
    * B: random pressure drop from left to right, walls on top and bottom
    * C: matching inflow and outflow profiles on left and right, walls, random affine body-force potential
    * D: random inflow profile on the left, zero pressure (traction) on the right, walls
    * General: class B data with a nonzero normal velocity through the bottom wall

    Parameters
    ----------
    model : str
        ``"darcy"``, ``"brinkman"`` or ``"brinkman_traction"``.

    tag : :py:class:`~porous_adjoint.classify.ClassTag` or str
        The requested class.

    nx, ny : int
        Grid size; ``ny`` defaults to ``nx``.

    rng : :obj:`numpy.random.Generator`, optional
        Source of randomness; a fresh default generator if not given.

    Errors
    ------
    InputError
        Raised for an unknown model or class.
    """

    if model not in MODELS:
        raise InputError(f"Unknown model '{model}'. Expected one of {MODELS}.")
    try:
        tag = ClassTag(tag)
    except ValueError:
        raise InputError(f"Unknown class '{tag}'. Expected one of {[t.value for t in RANDOM_CLASSES]}.")

    if rng is None:
        rng = np.random.default_rng()
    if ny is None:
        ny = nx

    grid = make_grid(nx, ny)
    k = _random_permeability(rng, grid, model)
    wall = _wall(model)

    if tag == ClassTag.A:
        slope_x = rng.uniform(0.5, 1.5)
        slope_y = rng.uniform(-0.3, 0.3)
        offset = rng.uniform(-1.0, 1.0)

        def pressure(x, y):
            return offset - slope_x * x + slope_y * y

        sides = {}
        for side, sign, axis in (("left", -1, 0), ("right", 1, 0), ("bottom", -1, 1), ("top", 1, 1)):
            x, y = grid.side_coordinates(side)
            sides[side] = _pressure_condition(model, pressure(x, y), normal_sign=sign, axis=axis)
        return _build(model, grid, k, uniform_boundary(**sides))

    if tag in (ClassTag.B, ClassTag.GENERAL):
        drop = rng.uniform(0.5, 2.0)
        outlet = rng.uniform(-1.0, 1.0)
        bc = uniform_boundary(
            left=_pressure_condition(model, outlet + drop, normal_sign=-1, axis=0),
            right=_pressure_condition(model, outlet, normal_sign=1, axis=0),
            bottom=wall,
            top=wall,
        )
        if tag == ClassTag.GENERAL:
            leak = _smooth_profile(rng, nx, rng.uniform(0.1, 0.3), 0.5)
            if model == "darcy":
                bottom = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, -leak)
            else:
                bottom = BoundaryCondition(BoundaryKind.FULL_VELOCITY, np.stack([np.zeros(nx), leak], axis=1))
            bc = bc.replace(bottom=bottom)
        return _build(model, grid, k, bc)

    if tag == ClassTag.C:
        profile = _smooth_profile(rng, ny, rng.uniform(0.5, 2.0), 0.3)
        if model == "darcy":
            inlet = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, -profile)
            outlet = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, profile)
        else:
            tabulated = np.stack([profile, np.zeros(ny)], axis=1)
            inlet = BoundaryCondition(BoundaryKind.FULL_VELOCITY, tabulated)
            outlet = BoundaryCondition(BoundaryKind.FULL_VELOCITY, tabulated)

        gx, gy = rng.uniform(-1.0, 1.0, size=2)
        psi = CellField.from_function(grid, lambda x, y: gx * x + gy * y)
        bc = uniform_boundary(left=inlet, right=outlet, bottom=wall, top=wall)
        return _build(model, grid, k, bc, body_force=BodyForce.from_potential(psi))

    if tag == ClassTag.D:
        profile = _smooth_profile(rng, ny, rng.uniform(0.5, 2.0), 0.3)
        if model == "darcy":
            inlet = BoundaryCondition(BoundaryKind.NORMAL_VELOCITY, -profile)
        else:
            inlet = BoundaryCondition(BoundaryKind.FULL_VELOCITY, np.stack([profile, np.zeros(ny)], axis=1))
        bc = uniform_boundary(
            left=inlet, right=_pressure_condition(model, 0.0, normal_sign=1, axis=0), bottom=wall, top=wall,
        )
        return _build(model, grid, k, bc)

    raise InputError(f"Random instances are not available for class '{tag.value}'.")  # pragma: no cover


@dataclass
class TripleCheck:
    """
    Outcome of :py:func:`triple_check` on one instance.
    """

    model: str
    tag: ClassTag
    report: GradientReport
    tolerance: float = FD_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.report.errors["discrete_vs_fd"] <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "class": self.tag.value,
            "errors": self.report.errors,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def triple_check(
    problem: FlowProblem,
    threads: int = 1,
    tolerance: float = FD_TOLERANCE,
    show_progress: bool = False,
) -> TripleCheck:
    """
    Computes the adjoint, discrete and finite-difference gradients of ``problem``. The check passes when the
    discrete gradient matches the finite differences to ``tolerance`` in the max-norm relative sense; the
    continuous-adjoint gradient differs from both by the discretization error and is only reported.
    """
    bvp_class = classify_bvp(problem)
    report = gradient_report(problem, include_fd=True, threads=threads, show_progress=show_progress)
    check = TripleCheck(problem.model_form, bvp_class.tag, report, tolerance)
    if not check.passed:
        logger.warning(f"Triple check failed for a class {bvp_class.tag.value} problem: {report.errors}.")
    return check


def expected_sign(tag: ClassTag) -> int:
    """
    +1 for classes A and B (dissipation grows with permeability), -1 for C and D, 0 otherwise.
    """
    if tag in (ClassTag.A, ClassTag.B):
        return 1
    if tag in (ClassTag.C, ClassTag.D):
        return -1
    return 0


def sign_holds(gradient: CellField, tag: ClassTag, tolerance: float = SIGN_TOLERANCE) -> bool:
    sign = expected_sign(tag)
    if sign == 0:
        raise InputError(f"No sign is expected for a class '{tag.value}' problem.")
    return bool(np.all(sign * gradient.values >= -tolerance))


@dataclass
class SignSuiteResult:
    """
    Extreme gradient values per class over all instances of a sign suite.
    """

    model: str
    instances: int
    path: str = "discrete"
    min_gradient: Dict[str, float] = field(default_factory=dict)
    max_gradient: Dict[str, float] = field(default_factory=dict)
    failures: Dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(count == 0 for count in self.failures.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "instances_per_class": self.instances,
            "gradient_path": self.path,
            "min_gradient": self.min_gradient,
            "max_gradient": self.max_gradient,
            "failures": self.failures,
            "passed": self.passed,
        }


GRADIENT_PATHS = ("discrete", "adjoint")


def _gradient(problem: FlowProblem, path: str) -> CellField:
    if path == "discrete":
        return discrete_gradient(problem)
    forward = problem.solve()
    return sensitivity_field(problem.k, problem.mu, forward.v, problem.solve_adjoint(forward)).per_cell


def sign_suite(
    model: str = "darcy",
    instances: int = 20,
    nx: int = 16,
    seed: Optional[int] = None,
    classes: Sequence[ClassTag] = (ClassTag.A, ClassTag.B, ClassTag.C, ClassTag.D),
    path: str = "discrete",
    threads: int = 1,
    show_progress: bool = False,
) -> SignSuiteResult:
    """
    Draws ``instances`` random problems per class and checks that every gradient component is nonnegative
    (classes A, B) or nonpositive (C, D) up to 1e-12.

    ``path`` selects the gradient: ``"discrete"`` differentiates the discretized dissipation exactly,
    ``"adjoint"`` evaluates the sensitivity density with the numerical adjoint.
    """
    if path not in GRADIENT_PATHS:
        raise InputError(f"Unknown gradient path '{path}'. Expected one of {GRADIENT_PATHS}.")

    rng = np.random.default_rng(seed)
    problems = [(tag, random_instance(model, tag, nx, rng=rng)) for tag in classes for _ in range(instances)]

    def evaluate(item):
        return item[0], _gradient(item[1], path)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(tqdm(executor.map(evaluate, problems), total=len(problems), disable=not show_progress))
    else:
        results = [evaluate(item) for item in tqdm(problems, disable=not show_progress, desc=f"Signs ({model})")]

    result = SignSuiteResult(model, instances, path)
    for tag, gradient in results:
        key = tag.value
        values = gradient.values
        result.min_gradient[key] = min(result.min_gradient.get(key, np.inf), float(values.min()))
        result.max_gradient[key] = max(result.max_gradient.get(key, -np.inf), float(values.max()))
        result.failures[key] = result.failures.get(key, 0) + (0 if sign_holds(gradient, tag) else 1)

    logger.info(f"Sign suite ({model}, {instances} instances per class) passed: {result.passed}.")
    return result


@dataclass
class VerificationSummary:
    triple_checks: List[TripleCheck]
    sign_suites: List[SignSuiteResult]
    seed: Optional[int] = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.triple_checks) and all(s.passed for s in self.sign_suites)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "passed": self.passed,
            "triple_checks": [check.to_dict() for check in self.triple_checks],
            "sign_suites": [suite.to_dict() for suite in self.sign_suites],
        }


def run_verification(
    models: Sequence[str] = MODELS,
    instances: int = 20,
    nx: int = 16,
    seed: Optional[int] = None,
    threads: int = 1,
    show_progress: bool = False,
    strict: bool = False,
) -> VerificationSummary:
    """
    Runs one triple check per model and class and the sign suite of the discrete gradient per model.

    Errors
    ------
    InvariantError
        Raised when ``strict`` is set and any check fails.
    """
    rng = np.random.default_rng(seed)
    checks = []
    suites = []
    for model in models:
        for tag in RANDOM_CLASSES:
            problem = random_instance(model, tag, nx, rng=rng)
            checks.append(triple_check(problem, threads=threads))
        suite_seed = int(rng.integers(0, 2 ** 32))
        suites.append(sign_suite(model, instances, nx, seed=suite_seed, threads=threads, show_progress=show_progress))

    summary = VerificationSummary(checks, suites, seed)
    if strict and not summary.passed:
        raise InvariantError(f"Verification failed: {summary.to_dict()}")
    return summary
