"""
Sparse linear solves shared by the Darcy and Darcy-Brinkman solvers.

Two system shapes occur: the symmetric positive (semi-)definite pressure system of the Darcy Schur complement and
the indefinite saddle-point system of Darcy-Brinkman (also used for the exact discrete adjoint of either model).
When no part of the boundary fixes the pressure level, the constant pressure mode is removed by bordering the system
with a mean-zero constraint.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from porous_adjoint.exceptions import ConvergenceError, InputError

logger = logging.getLogger(__name__)

DIRECT_CELL_LIMIT = 256 * 256
CG_RELATIVE_TOLERANCE = 1e-12
SOLVE_METHODS = ("auto", "direct", "iterative")


@dataclass(frozen=True)
class SolverSettings:
    """
    Linear solver controls.

    Attributes
    ----------
    tolerance : float
        Accepted scaled residual ``|K x - f| / (|f| + |K| |x|)`` (max norms) of the returned solution.

    max_iterations : int, optional
        Iteration cap for the iterative path. Defaults to ten times the number of unknowns.

    method : str
        ``"direct"`` (sparse LU), ``"iterative"`` (CG for the pressure system, preconditioned GMRES for saddle
        systems) or ``"auto"``, which picks direct factorization up to 256 x 256 cells.
    """

    tolerance: float = 1e-10
    max_iterations: Optional[int] = None
    method: str = "auto"

    def __post_init__(self) -> None:
        if self.method not in SOLVE_METHODS:
            raise InputError(f"Unknown linear solver method '{self.method}'. Expected one of {SOLVE_METHODS}.")
        if not self.tolerance > 0.0:
            raise InputError(f"Solver tolerance must be positive, received {self.tolerance}.")

    def use_direct(self, num_cells: int) -> bool:
        if self.method == "auto":
            return num_cells <= DIRECT_CELL_LIMIT
        return self.method == "direct"


class LinearSolveResult(NamedTuple):
    x: np.ndarray
    residual: float
    iterations: int
    method: str
    gauge_multiplier: float


def scaled_residual(matrix: sp.spmatrix, x: np.ndarray, rhs: np.ndarray) -> float:
    """
    Max-norm residual of ``matrix @ x = rhs`` scaled by ``|rhs| + |matrix| |x|``. Returns 0 for the trivial system.
    """
    residual = np.abs(matrix @ x - rhs).max(initial=0.0)
    scale = np.abs(rhs).max(initial=0.0) + abs(matrix).max() * np.abs(x).max(initial=0.0)
    if scale == 0.0:
        return float(residual)
    return float(residual / scale)


def _bordered(matrix: sp.spmatrix, gauge_mask: np.ndarray) -> sp.csr_matrix:
    """
    Appends the mean-zero constraint over the entries selected by ``gauge_mask`` and its Lagrange multiplier.
    """
    column = sp.csr_matrix(gauge_mask.astype(float).reshape(-1, 1))
    return sp.bmat([[matrix, column], [column.T, None]], format="csc")


def solve_pressure_system(
    matrix: sp.spmatrix,
    rhs: np.ndarray,
    settings: SolverSettings,
    singular: bool,
) -> LinearSolveResult:
    """
    Solves the symmetric positive (semi-)definite pressure system of the Darcy Schur complement.

    Parameters
    ----------
    matrix : :obj:`~scipy.sparse.spmatrix`
        The pressure matrix, one row per cell.

    rhs : :obj:`~numpy.ndarray`
        Right-hand side.

    settings : :py:class:`SolverSettings`
        Solver controls.

    singular : bool
        Set when the pressure level is not fixed by the boundary. The returned pressure then has zero mean.

    Errors
    ------
    ConvergenceError
        Raised if the solution does not meet ``settings.tolerance``.
    """

    n = matrix.shape[0]
    max_iterations = settings.max_iterations if settings.max_iterations is not None else 10 * n

    if settings.use_direct(n):
        method = "direct"
        iterations = 1
        if singular:
            solution = spla.spsolve(_bordered(matrix, np.ones(n, dtype=bool)), np.append(rhs, 0.0))
            x, multiplier = solution[:n], float(solution[n])
        else:
            x, multiplier = spla.spsolve(sp.csc_matrix(matrix), rhs), 0.0
    else:
        method = "cg"
        counter = _IterationCounter()
        # The constant mode is removed from the right-hand side so CG works on the consistent range.
        shifted_rhs = rhs - rhs.mean() if singular else rhs
        x, info = spla.cg(
            sp.csr_matrix(matrix), shifted_rhs, rtol=CG_RELATIVE_TOLERANCE, atol=0.0, maxiter=max_iterations,
            callback=counter,
        )
        if singular:
            x = x - x.mean()
        multiplier = float(rhs.mean()) if singular else 0.0
        iterations = counter.count
        if info > 0:
            logger.debug(f"CG stopped after {iterations} iterations without reaching its relative tolerance.")

    x = np.asarray(x, dtype=float)
    target = rhs - multiplier if singular else rhs
    residual = scaled_residual(matrix, x, target)
    logger.debug(f"Pressure system of size {n} solved by {method}: scaled residual {residual:.3e}.")

    if not np.all(np.isfinite(x)) or residual > settings.tolerance:
        raise ConvergenceError(
            f"The pressure system ({n} unknowns, method '{method}') reached a scaled residual of {residual:.3e}, "
            f"above the tolerance {settings.tolerance:.3e} within {max_iterations} iterations."
        )

    return LinearSolveResult(x, residual, iterations, method, multiplier)


def solve_saddle_system(
    matrix: sp.spmatrix,
    rhs: np.ndarray,
    settings: SolverSettings,
    gauge_mask: Optional[np.ndarray] = None,
    num_cells: Optional[int] = None,
    transpose: bool = False,
) -> LinearSolveResult:
    """
    Solves a (possibly gauge-bordered) saddle-point system ``K x = f`` or its transpose.

    Parameters
    ----------
    matrix : :obj:`~scipy.sparse.spmatrix`
        The square system matrix ``K``.

    rhs : :obj:`~numpy.ndarray`
        Right-hand side ``f``.

    settings : :py:class:`SolverSettings`
        Solver controls.

    gauge_mask : :obj:`~numpy.ndarray` of bool, optional
        Entries of ``x`` (the pressures) constrained to have zero sum. Required when ``K`` carries the constant
        pressure mode in its null space.

    num_cells : int, optional
        Cell count used to choose between the direct and iterative paths. Defaults to the number of unknowns.

    transpose : bool, default False
        Solve ``K^T x = f`` instead. The gauge bordering is applied to ``K^T``.

    Returns
    -------
    result : :py:class:`LinearSolveResult`
        ``gauge_multiplier`` is the Lagrange multiplier of the mean-zero constraint, zero for a consistent system.

    Errors
    ------
    ConvergenceError
        Raised if the solution does not meet ``settings.tolerance``.
    """

    system = sp.csc_matrix(matrix.T if transpose else matrix)
    n = system.shape[0]
    if num_cells is None:
        num_cells = n

    if gauge_mask is not None:
        system = _bordered(system, gauge_mask)
        rhs = np.append(rhs, 0.0)

    max_iterations = settings.max_iterations if settings.max_iterations is not None else 10 * system.shape[0]

    if settings.use_direct(num_cells):
        method = "direct"
        iterations = 1
        x = spla.spsolve(system, rhs)
    else:
        method = "gmres"
        counter = _IterationCounter()
        preconditioner = _ilu_preconditioner(system)
        x, info = spla.gmres(
            system, rhs, rtol=CG_RELATIVE_TOLERANCE, atol=0.0, restart=200, maxiter=max_iterations,
            M=preconditioner, callback=counter, callback_type="pr_norm",
        )
        iterations = counter.count
        if info > 0:
            logger.debug(f"GMRES stopped after {iterations} iterations without reaching its relative tolerance.")

    x = np.asarray(x, dtype=float)
    residual = scaled_residual(system, x, rhs)
    logger.debug(f"Saddle system of size {system.shape[0]} solved by {method}: scaled residual {residual:.3e}.")

    if not np.all(np.isfinite(x)) or residual > settings.tolerance:
        raise ConvergenceError(
            f"The saddle-point system ({system.shape[0]} unknowns, method '{method}') reached a scaled residual of "
            f"{residual:.3e}, above the tolerance {settings.tolerance:.3e}."
        )

    multiplier = 0.0
    if gauge_mask is not None:
        multiplier = float(x[-1])
        x = x[:-1]

    return LinearSolveResult(x, residual, iterations, method, multiplier)


def _ilu_preconditioner(system: sp.csc_matrix) -> spla.LinearOperator:
    """
    Incomplete LU of the whole indefinite matrix, used as the preconditioner of the iterative saddle path.
    """
    factor = spla.spilu(system, drop_tol=1e-8, fill_factor=20)
    return spla.LinearOperator(system.shape, matvec=factor.solve)


class _IterationCounter():

    def __init__(self) -> None:
        self.count = 0

    def __call__(self, *args) -> None:
        self.count += 1
