"""
Adjoint problems of the total dissipation rate.

The adjoint of either model is again a problem of the same model, with a pseudo body force and homogeneous or pseudo
boundary data built from the forward solution; it is solved by the forward solver. For the classes of
:py:mod:`porous_adjoint.classify` the adjoint is also available in closed form through :py:func:`analytical_adjoint`.
"""

import logging
from enum import Enum
from typing import Optional, Union

import numpy as np

from porous_adjoint.brinkman import BrinkmanProblem
from porous_adjoint.classify import BvpClass, ClassTag
from porous_adjoint.darcy import DarcyProblem
from porous_adjoint.exceptions import InputError, NotAnalyticallySolvable
from porous_adjoint.flow_problem import MODEL_DARCY, FlowProblem, FlowSolution
from porous_adjoint.grid import CellField, FaceField, divergence

logger = logging.getLogger(__name__)


class AdjointSource(str, Enum):
    NUMERICAL = "numerical"
    ANALYTICAL = "analytical"


class AdjointSolution():
    """
    The adjoint velocity ``Lambda`` (per face) and adjoint pressure ``lambda`` (per cell).
    """

    def __init__(
        self,
        lambda_v: FaceField,
        lambda_p: CellField,
        source: AdjointSource = AdjointSource.NUMERICAL,
        residual: float = 0.0,
    ) -> None:
        if lambda_v.grid != lambda_p.grid:
            raise InputError(f"Adjoint velocity on {lambda_v.grid} and pressure on {lambda_p.grid} do not match.")
        self._lambda_v = lambda_v
        self._lambda_p = lambda_p
        self._source = AdjointSource(source)
        self._residual = residual

    def __repr__(self) -> str:
        return f"AdjointSolution(source={self._source.value}, max|Lambda|={self._lambda_v.max_abs():.6g})"

    @property
    def lambda_v(self) -> FaceField:
        return self._lambda_v

    @property
    def lambda_p(self) -> CellField:
        return self._lambda_p

    @property
    def source(self) -> AdjointSource:
        return self._source

    @property
    def residual(self) -> float:
        return self._residual

    @property
    def grid(self):
        return self._lambda_v.grid

    def max_divergence(self) -> float:
        return float(np.abs(divergence(self.grid, self._lambda_v).values).max())


def _solve_numerically(problem: FlowProblem, forward: FlowSolution) -> AdjointSolution:

    adjoint_problem = problem.adjoint_problem(forward)
    solution = adjoint_problem.solve()
    logger.info(f"Adjoint of the {problem.model_form} problem solved (scaled residual {solution.residual:.3e}).")
    return AdjointSolution(solution.v, solution.p, AdjointSource.NUMERICAL, solution.residual)


def solve_adjoint_darcy(problem: DarcyProblem, forward: FlowSolution) -> AdjointSolution:
    """
    Solves the adjoint Darcy problem

        mu / k Lambda + grad lambda = mu / k v,    div Lambda = 0,

    with ``lambda = 0`` on pressure sides and ``Lambda.n = 0`` on velocity sides. The pseudo body force uses the same
    harmonic face permeability as the forward solve.

    Errors
    ------
    InputError
        Raised if ``problem`` is not a Darcy problem or ``forward`` lives on another grid.

    ConvergenceError
        Raised when the linear solve fails.
    """
    if not isinstance(problem, DarcyProblem):
        raise InputError(f"Expected a DarcyProblem, received {type(problem).__name__}.")
    return _solve_numerically(problem, forward)


def solve_adjoint_brinkman(problem: BrinkmanProblem, forward: FlowSolution) -> AdjointSolution:
    """
    Solves the adjoint Darcy-Brinkman problem. The pseudo body force is ``mu v / k - div(2 mu D[v])``; pressure sides
    carry the pseudo loading ``-n.(2 mu D[v]).n`` with zero tangential velocity (traction sides the matching traction
    data) and full-velocity sides become no-slip.

    Errors
    ------
    InputError
        Raised if ``problem`` is not a Darcy-Brinkman problem or ``forward`` lives on another grid.

    ConvergenceError
        Raised when the linear solve fails.
    """
    if not isinstance(problem, BrinkmanProblem):
        raise InputError(f"Expected a BrinkmanProblem, received {type(problem).__name__}.")
    return _solve_numerically(problem, forward)


def solve_adjoint(problem: FlowProblem, forward: FlowSolution) -> AdjointSolution:
    if problem.model_form == MODEL_DARCY:
        return solve_adjoint_darcy(problem, forward)
    return solve_adjoint_brinkman(problem, forward)


def analytical_adjoint(
    bvp_class: Union[BvpClass, ClassTag, str],
    forward: FlowSolution,
    psi: Optional[CellField] = None,
) -> AdjointSolution:
    """
    Closed-form adjoint of a class problem.

    * A, B: ``(Lambda, lambda) = (v, 0)``
    * C: ``(0, -p - psi)`` shifted to zero mean
    * D: ``(0, -p)``

    Parameters
    ----------
    bvp_class : :py:class:`~porous_adjoint.classify.BvpClass`, :py:class:`~porous_adjoint.classify.ClassTag` or str
        The class of the forward problem.

    forward : :py:class:`~porous_adjoint.flow_problem.FlowSolution`
        The forward solution.

    psi : :py:class:`~porous_adjoint.grid.CellField`, optional
        Body-force potential. Required for class C.

    Errors
    ------
    NotAnalyticallySolvable
        Raised for a ``General`` problem.

    InputError
        Raised when ``psi`` is missing for class C.
    """

    if isinstance(bvp_class, BvpClass):
        tag = bvp_class.tag
    else:
        try:
            tag = ClassTag(bvp_class)
        except ValueError:
            raise InputError(f"Unknown class '{bvp_class}'. Expected one of {[t.value for t in ClassTag]}.")

    grid = forward.grid
    zero_v = FaceField.zeros(grid)

    if tag in (ClassTag.A, ClassTag.B):
        return AdjointSolution(forward.v, CellField(grid, 0.0), AdjointSource.ANALYTICAL)

    if tag == ClassTag.C:
        if psi is None:
            raise InputError("The class C adjoint needs the body-force potential psi.")
        values = -forward.p.values - psi.values
        return AdjointSolution(zero_v, CellField(grid, values - values.mean()), AdjointSource.ANALYTICAL)

    if tag == ClassTag.D:
        return AdjointSolution(zero_v, CellField(grid, -forward.p.values), AdjointSource.ANALYTICAL)

    raise NotAnalyticallySolvable(
        "A General boundary value problem has no closed-form adjoint; use the numerical adjoint instead."
    )
