"""
Forward solver for the Darcy equations

    mu / k v + grad p = rho b,    div v = 0

on a :py:class:`~porous_adjoint.grid.StaggeredGrid`.

The velocity is eliminated face by face, ``v_f = (k_f / mu) (rho b_f - (grad p)_f)``, leaving the symmetric positive
(semi-)definite five-point pressure system solved by :py:func:`~porous_adjoint.linear_solvers.solve_pressure_system`.
The coupled saddle-point form returned by :py:meth:`DarcyProblem.assemble_system` is used for residuals and for the
exact discrete adjoint.
"""

import logging
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from porous_adjoint.exceptions import InputError
from porous_adjoint.flow_problem import (
    MODEL_DARCY,
    BodyForce,
    FlowProblem,
    FlowSolution,
    SaddleSystem,
    gradient_operator,
    saddle_residuals,
)
from porous_adjoint.grid import (
    BoundaryCondition,
    BoundaryKind,
    CellField,
    FaceField,
    divergence_matrix,
    face_permeability,
)
from porous_adjoint.linear_solvers import solve_pressure_system

logger = logging.getLogger(__name__)


class DarcyProblem(FlowProblem):
    """
    A Darcy boundary value problem. Each side carries either a ``PRESSURE`` or a ``NORMAL_VELOCITY`` condition.
    """

    allowed_kinds = (BoundaryKind.PRESSURE, BoundaryKind.NORMAL_VELOCITY)

    def __repr__(self) -> str:
        return f"DarcyProblem(grid={self.grid}, mu={self.mu}, bc={self.bc}, body_force={self.body_force})"

    @property
    def model_form(self) -> str:
        return MODEL_DARCY

    def momentum_face_mask(self) -> np.ndarray:
        return ~self.boundary_data().fixed

    def assemble_system(self) -> SaddleSystem:
        """
        Coupled form of the discrete Darcy equations.

        Face rows: ``(mu / k_f) v_f + (G p)_f = rho b_f - g0_f`` on faces without prescribed velocity, ``v_f = v^p_f``
        on the others. Cell rows: ``-(D v)_c = -s_c``.
        """
        grid = self.grid
        data = self.boundary_data()
        free = ~data.fixed

        drag = np.where(free, self.face_drag(), 1.0)
        operator, constant = gradient_operator(grid, data)
        div = divergence_matrix(grid)

        matrix = sp.bmat([[sp.diags(drag), operator], [-div, None]], format="csr")

        force = self.body_force.face_values(grid).flat
        face_rhs = np.where(free, force - constant, data.fixed_values)
        rhs = np.concatenate([face_rhs, -self.source_values()])

        gauge_mask = None
        if not self.bc.has_pressure_boundary:
            gauge_mask = np.concatenate([np.zeros(grid.num_faces, dtype=bool), np.ones(grid.num_cells, dtype=bool)])

        return SaddleSystem(matrix, rhs, free, gauge_mask)

    def solve(self) -> FlowSolution:
        return solve_darcy(self)

    def adjoint_problem(self, forward: FlowSolution) -> "DarcyProblem":
        """
        The adjoint Darcy problem: pseudo body force ``mu v / k_f`` at faces, ``lambda = 0`` on pressure sides and
        ``Lambda.n = 0`` on velocity sides.
        """
        if forward.grid != self.grid:
            raise InputError(f"Forward solution on {forward.grid} does not belong to the problem grid {self.grid}.")

        k_face = face_permeability(self.grid, self.k)
        pseudo_force = FaceField(
            self.grid,
            self.mu * forward.v.x_values / k_face.x_values,
            self.mu * forward.v.y_values / k_face.y_values,
        )

        conditions = {}
        for side, condition in self.bc.items():
            conditions[side] = BoundaryCondition(condition.kind, 0.0)

        return self._replace(
            bc=self.bc.replace(**conditions),
            body_force=BodyForce.from_faces(pseudo_force),
            source=None,
            pressure_datum=0.0,
        )


def _schur_operators(problem: DarcyProblem) -> Tuple[sp.csr_matrix, np.ndarray, np.ndarray]:

    grid = problem.grid
    data = problem.boundary_data()
    free = ~data.fixed

    mobility = np.where(free, 1.0 / problem.face_drag(), 0.0)
    operator, constant = gradient_operator(grid, data)
    force = problem.body_force.face_values(grid).flat

    # Known part of the face velocity: mobility times the load on free faces, the prescribed value on fixed ones.
    known = np.where(free, mobility * (force - constant), data.fixed_values)
    return operator, mobility, known


def solve_darcy(problem: DarcyProblem) -> FlowSolution:
    """
    Solves a Darcy problem through its pressure Schur complement.

    Parameters
    ----------
    problem : :py:class:`DarcyProblem`
        The problem to solve.

    Returns
    -------
    solution : :py:class:`~porous_adjoint.flow_problem.FlowSolution`
        Face velocities and cell pressures. Without any pressure boundary the pressure has zero mean and
        ``gauge_fixed`` is set.

    Errors
    ------
    CompatibilityError
        Raised for a pure-velocity problem whose prescribed fluxes do not balance.

    ConvergenceError
        Raised when the pressure system cannot be solved to the requested tolerance.
    """

    grid = problem.grid
    problem.check_compatible()

    operator, mobility, known = _schur_operators(problem)
    div = divergence_matrix(grid)

    pressure_matrix = -(div @ sp.diags(mobility) @ operator)
    rhs = problem.source_values() - div @ known

    singular = not problem.bc.has_pressure_boundary
    result = solve_pressure_system(pressure_matrix, rhs, problem.settings, singular)

    p = result.x
    v = known - mobility * (operator @ p)

    logger.info(
        f"Darcy solve on {grid} finished with scaled residual {result.residual:.3e} using {result.method} "
        f"({result.iterations} iterations)."
    )

    return FlowSolution(
        FaceField.from_flat(grid, v),
        CellField(grid, p),
        residual=result.residual,
        iterations=result.iterations,
        gauge_fixed=singular,
        method=result.method,
    )


def residuals_darcy(problem: DarcyProblem, solution: FlowSolution) -> Tuple[FaceField, CellField]:
    """
    Discrete residuals of a candidate solution.

    Returns
    -------
    momentum_residual : :py:class:`~porous_adjoint.grid.FaceField`
        ``(mu / k_f) v_f + (grad p)_f - rho b_f`` on faces without prescribed velocity and ``v_f - v^p_f`` on
        prescribed-velocity faces.

    continuity_residual : :py:class:`~porous_adjoint.grid.CellField`
        ``(div v)_c - s_c``.

    Errors
    ------
    InputError
        Raised if the solution lives on a different grid.
    """
    return saddle_residuals(problem, solution)


def darcy_channel_solution(
    nx: int,
    pressure_drop: float = 1.0,
    k: float = 1.0,
    mu: float = 1.0,
    length: float = 1.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form velocity and cell pressures of the one-dimensional pressure-driven channel with inlet pressure
    ``pressure_drop`` and outlet pressure 0.
    """
    centres = (np.arange(nx) + 0.5) * length / nx
    velocity = np.full(nx + 1, k * pressure_drop / (mu * length))
    pressure = pressure_drop * (1.0 - centres / length)
    return velocity, pressure

