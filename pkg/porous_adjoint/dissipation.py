"""
Total dissipation rate functionals and their derivatives with respect to the permeability.

Three gradient paths are provided:

* :py:func:`sensitivity_field`, the continuous formula ``mu / k**2 v.(2 Lambda - v)`` fed with an adjoint solution,
* :py:func:`discrete_gradient`, the exact derivative of the discretized functional through the transposed system,
* :py:func:`fd_gradient`, central finite differences used as an oracle.

The Darcy functional and the sensitivity density use the cell velocity obtained by averaging the two faces normal to
each component, squared after averaging. The Darcy-Brinkman functional is the energy of the discrete operator: face
drag plus the strain energy the viscous term is assembled from.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np
import scipy.sparse as sp
from tqdm import tqdm

from porous_adjoint.brinkman import strain_energy
from porous_adjoint.exceptions import InputError
from porous_adjoint.flow_problem import FlowProblem, FlowSolution
from porous_adjoint.grid import (
    BoundarySpec,
    CellField,
    FaceField,
    StaggeredGrid,
    cell_average_matrices,
    face_permeability,
    face_permeability_jacobian,
)
from porous_adjoint.linear_solvers import solve_saddle_system

logger = logging.getLogger(__name__)

FD_STEP_EXPONENT = 1.0 / 3.0


def _check_inputs(grid: StaggeredGrid, k: CellField, mu: float, v: FaceField) -> None:
    if k.grid != grid or v.grid != grid:
        raise InputError(f"Permeability on {k.grid} and velocity on {v.grid} must both live on {grid}.")
    if np.any(k.values <= 0.0):
        raise InputError(f"Permeability must be positive everywhere. Minimum received value is {k.values.min()}.")
    if mu <= 0.0:
        raise InputError(f"Viscosity must be positive. Received mu = {mu}.")


def _darcy_density(grid: StaggeredGrid, k: CellField, mu: float, v: FaceField) -> np.ndarray:
    avg_x, avg_y = cell_average_matrices(grid)
    u, w = avg_x @ v.flat, avg_y @ v.flat
    return mu / k.flat * (u ** 2 + w ** 2)


def _face_drag_dissipation(grid: StaggeredGrid, k: CellField, mu: float, v: FaceField) -> float:
    volumes = grid.face_volumes().flat
    return float(np.sum(volumes * mu / face_permeability(grid, k).flat * v.flat ** 2))


def total_dissipation_darcy(grid: StaggeredGrid, k: CellField, mu: float, v: FaceField) -> float:
    """
    ``sum_c (mu / k_c) |v_c|**2 * cell area``.

    Errors
    ------
    InputError
        Raised for nonpositive ``k`` or fields on another grid.
    """
    _check_inputs(grid, k, mu, v)
    return float(np.sum(_darcy_density(grid, k, mu, v)) * grid.cell_area)


def total_dissipation_brinkman(
    grid: StaggeredGrid, k: CellField, mu: float, v: FaceField, bc: Optional[BoundarySpec] = None
) -> float:
    """
    ``sum_f (mu / k_f) v_f**2 * face volume + mu * sum(weights * s**2)``: the drag dissipation at the faces, where the
    momentum equation carries it, plus the strain dissipation ``2 mu D:D`` of
    :py:func:`~porous_adjoint.brinkman.strain_energy`.

    This is the energy of the discrete Darcy-Brinkman operator. Passing the boundary specification of the problem
    closes the shear rates at its walls the way the solver does; without it no wall closure is applied.

    Errors
    ------
    InputError
        Raised for nonpositive ``k`` or fields on another grid.
    """
    _check_inputs(grid, k, mu, v)
    return _face_drag_dissipation(grid, k, mu, v) + strain_energy(grid, bc).dissipation(mu, v.flat)


def total_dissipation(problem: FlowProblem, v: FaceField) -> float:
    if problem.includes_strain:
        return total_dissipation_brinkman(problem.grid, problem.k, problem.mu, v, problem.bc)
    return total_dissipation_darcy(problem.grid, problem.k, problem.mu, v)


def dissipation_velocity_derivative(problem: FlowProblem, v: FaceField) -> np.ndarray:
    """
    Partial derivative of the total dissipation with respect to the flat face velocities.
    """
    grid, mu = problem.grid, problem.mu
    flat = v.flat

    if problem.includes_strain:
        drag = 2.0 * grid.face_volumes().flat * problem.face_drag() * flat
        return drag + strain_energy(grid, problem.bc).dissipation_gradient(mu, flat)

    avg_x, avg_y = cell_average_matrices(grid)
    weight = 2.0 * grid.cell_area * mu / problem.k.flat
    derivative = avg_x.T @ (weight * (avg_x @ flat)) + avg_y.T @ (weight * (avg_y @ flat))
    return np.asarray(derivative).ravel()


def dissipation_permeability_derivative(problem: FlowProblem, v: FaceField) -> np.ndarray:
    """
    Explicit partial derivative of the total dissipation with respect to each cell permeability at fixed velocity:
    ``-A mu / k_c**2 |v_c|**2`` for Darcy, and the face drag term ``-V_f mu / k_f**2 v_f**2`` carried to the cells
    through the face permeability for Darcy-Brinkman.
    """
    grid, mu = problem.grid, problem.mu

    if problem.includes_strain:
        k_face = face_permeability(grid, problem.k).flat
        face_term = -grid.face_volumes().flat * mu / k_face ** 2 * v.flat ** 2
        return np.asarray(face_permeability_jacobian(grid, problem.k).T @ face_term).ravel()

    avg_x, avg_y = cell_average_matrices(grid)
    u, w = avg_x @ v.flat, avg_y @ v.flat
    return -grid.cell_area * mu / problem.k.flat ** 2 * (u ** 2 + w ** 2)


class SensitivityField():
    """
    Sensitivity of the total dissipation to the permeability, as a density per unit area and as the per-cell
    derivative ``dPhi / dk_c = density_c * cell area``.
    """

    def __init__(self, density: CellField) -> None:
        self._density = density

    def __repr__(self) -> str:
        values = self._density.values
        return f"SensitivityField(min={values.min():.6g}, max={values.max():.6g})"

    @property
    def density(self) -> CellField:
        return self._density

    @property
    def grid(self) -> StaggeredGrid:
        return self._density.grid

    @property
    def per_cell(self) -> CellField:
        return CellField(self.grid, self._density.values * self.grid.cell_area)

    def directional_derivative(self, dk: CellField) -> float:
        return directional_derivative(self, dk)


def sensitivity_field(k: CellField, mu: float, v: FaceField, adjoint) -> SensitivityField:
    """
    Sensitivity density ``(mu / k_c**2) v_c.(2 Lambda_c - v_c)`` from a forward velocity and an adjoint solution.

    Parameters
    ----------
    k : :py:class:`~porous_adjoint.grid.CellField`
        Permeability.

    mu : float
        Viscosity.

    v : :py:class:`~porous_adjoint.grid.FaceField`
        Forward velocity.

    adjoint : :py:class:`~porous_adjoint.adjoint.AdjointSolution`
        Numerical or analytical adjoint of the same problem.

    Errors
    ------
    InputError
        Raised for fields on different grids.
    """
    grid = k.grid
    lambda_v = adjoint.lambda_v
    if v.grid != grid or lambda_v.grid != grid:
        raise InputError(f"Velocity on {v.grid} and adjoint on {lambda_v.grid} must both live on {grid}.")

    avg_x, avg_y = cell_average_matrices(grid)
    u, w = avg_x @ v.flat, avg_y @ v.flat
    lu, lw = avg_x @ lambda_v.flat, avg_y @ lambda_v.flat

    density = mu / k.flat ** 2 * (u * (2.0 * lu - u) + w * (2.0 * lw - w))
    return SensitivityField(CellField(grid, density))


def directional_derivative(s: SensitivityField, dk: CellField) -> float:
    """
    ``sum_c density_c * dk_c * cell area``.

    Errors
    ------
    InputError
        Raised when ``dk`` lives on another grid.
    """
    if dk.grid != s.grid:
        raise InputError(f"Perturbation on {dk.grid} does not match the sensitivity grid {s.grid}.")
    return float(np.sum(s.density.values * dk.values) * s.grid.cell_area)


def discrete_gradient(problem: FlowProblem, forward: Optional[FlowSolution] = None) -> CellField:
    """
    Exact derivative of the discretized total dissipation with respect to each cell permeability.

    The transposed system ``K^T xi = -dPhi/dx`` is solved once; the gradient is then
    ``dPhi/dk + xi^T (dK/dk) x``, where only the drag diagonal of ``K`` depends on ``k`` (through the harmonic face
    permeability).

    Parameters
    ----------
    problem : :py:class:`~porous_adjoint.flow_problem.FlowProblem`
        Darcy or Darcy-Brinkman problem.

    forward : :py:class:`~porous_adjoint.flow_problem.FlowSolution`, optional
        Its forward solution; solved if not given.

    Errors
    ------
    ConvergenceError
        Raised when the transposed system cannot be solved.
    """
    grid = problem.grid
    if forward is None:
        forward = problem.solve()

    system = problem.assemble_system()
    v = forward.v.flat

    state_derivative = np.concatenate([dissipation_velocity_derivative(problem, forward.v), np.zeros(grid.num_cells)])
    result = solve_saddle_system(
        system.matrix, -state_derivative, problem.settings, gauge_mask=system.gauge_mask, num_cells=grid.num_cells,
        transpose=True,
    )
    multiplier = result.x[:grid.num_faces]

    weights = np.where(system.drag_faces, multiplier * v, 0.0)
    gradient = dissipation_permeability_derivative(problem, forward.v) + face_drag_sensitivity(problem).T @ weights
    logger.debug(f"Discrete gradient assembled (transposed solve residual {result.residual:.3e}).")
    return CellField(grid, np.asarray(gradient).ravel())


def _fd_step(value: float) -> float:
    step = max(value, 1.0) * np.finfo(float).eps ** FD_STEP_EXPONENT
    if step >= value:
        # Keep k - step positive for small permeabilities.
        step = value * np.finfo(float).eps ** FD_STEP_EXPONENT
    return step


def _default_objective(problem: FlowProblem) -> float:
    return problem.total_dissipation(problem.solve().v)


def fd_gradient(
    problem: FlowProblem,
    objective: Optional[Callable[[FlowProblem], float]] = None,
    threads: int = 1,
    show_progress: bool = False,
) -> CellField:
    """
    Central finite-difference gradient ``[Phi(k + eps e_c) - Phi(k - eps e_c)] / (2 eps)`` per cell with
    ``eps = max(k_c, 1) * machine_eps**(1/3)``. Cells whose permeability is below that step use
    ``eps = k_c * machine_eps**(1/3)`` instead.

    Parameters
    ----------
    problem : :py:class:`~porous_adjoint.flow_problem.FlowProblem`
        The unperturbed problem.

    objective : callable, optional
        Maps a (perturbed) problem to a scalar. Defaults to the total dissipation of its forward solution.

    threads : int, default 1
        Number of perturbations evaluated concurrently.

    show_progress : bool, default False
        Display a ``tqdm`` progress bar.

    Errors
    ------
    ConvergenceError
        Raised when any perturbed solve fails.
    """
    if objective is None:
        objective = _default_objective

    grid = problem.grid
    k = problem.k.flat

    def evaluate(cell: int) -> float:
        step = _fd_step(k[cell])
        values = []
        for sign in (1.0, -1.0):
            perturbed = k.copy()
            perturbed[cell] += sign * step
            values.append(objective(problem.with_permeability(CellField(grid, perturbed))))
        return (values[0] - values[1]) / (2.0 * step)

    cells = range(grid.num_cells)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            gradient = list(
                tqdm(executor.map(evaluate, cells), total=grid.num_cells, disable=not show_progress, desc="FD gradient")
            )
    else:
        gradient = [evaluate(cell) for cell in tqdm(cells, disable=not show_progress, desc="FD gradient")]

    return CellField(grid, np.asarray(gradient))


def relative_error(a: CellField, b: CellField) -> float:
    """
    ``max|a - b| / max|b|``; the absolute error when ``b`` vanishes.
    """
    difference = float(np.abs(a.values - b.values).max())
    scale = float(np.abs(b.values).max())
    if scale == 0.0:
        return difference
    return difference / scale


@dataclass
class GradientReport:
    """
    The three gradient paths for one problem and their pairwise max-norm relative errors.
    """

    adjoint_gradient: CellField
    discrete_gradient: CellField
    fd_gradient: Optional[CellField] = None

    @property
    def errors(self) -> Dict[str, float]:
        errors = {"adjoint_vs_discrete": relative_error(self.adjoint_gradient, self.discrete_gradient)}
        if self.fd_gradient is not None:
            errors["discrete_vs_fd"] = relative_error(self.discrete_gradient, self.fd_gradient)
            errors["adjoint_vs_fd"] = relative_error(self.adjoint_gradient, self.fd_gradient)
        return errors

    def to_dict(self) -> Dict[str, Any]:
        report: Dict[str, Any] = {
            "grid": {"nx": self.adjoint_gradient.grid.nx, "ny": self.adjoint_gradient.grid.ny},
            "adjoint_gradient": self.adjoint_gradient.values.tolist(),
            "discrete_gradient": self.discrete_gradient.values.tolist(),
            "errors": self.errors,
        }
        if self.fd_gradient is not None:
            report["fd_gradient"] = self.fd_gradient.values.tolist()
        return report


def gradient_report(
    problem: FlowProblem,
    include_fd: bool = True,
    threads: int = 1,
    show_progress: bool = False,
) -> GradientReport:
    """
    Computes the adjoint, discrete and (optionally) finite-difference gradients of the total dissipation.
    """
    forward = problem.solve()
    adjoint = problem.solve_adjoint(forward)

    sensitivity = sensitivity_field(problem.k, problem.mu, forward.v, adjoint)
    discrete = discrete_gradient(problem, forward)
    fd = fd_gradient(problem, threads=threads, show_progress=show_progress) if include_fd else None

    report = GradientReport(sensitivity.per_cell, discrete, fd)
    logger.info(f"Gradient report errors: {report.errors}")
    return report


def face_drag_sensitivity(problem: FlowProblem) -> sp.csr_matrix:
    """
    Derivative of the face drag ``mu / k_f`` with respect to the cell permeabilities, shape
    ``(num_faces, num_cells)``.
    """
    k_face = problem.mu / problem.face_drag()
    return (sp.diags(-problem.mu / k_face ** 2) @ face_permeability_jacobian(problem.grid, problem.k)).tocsr()
