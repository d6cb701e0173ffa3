"""
This module defines the abstract :py:class:`FlowProblem` base class shared by
:py:class:`~porous_adjoint.darcy.DarcyProblem` and :py:class:`~porous_adjoint.brinkman.BrinkmanProblem`, together with
the pieces both models carry around: the body force, the flow solution and the assembled saddle-point system.

Unknowns of an assembled system are ordered as all face velocities (x-faces then y-faces, see
:py:attr:`~porous_adjoint.grid.FaceField.flat`) followed by all cell pressures.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, NamedTuple, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from porous_adjoint.exceptions import CompatibilityError, InputError
from porous_adjoint.grid import (
    BoundaryKind,
    BoundarySpec,
    CellField,
    FaceField,
    StaggeredGrid,
    boundary_face_indices,
    divergence_matrix,
    face_permeability,
    side_axis,
    side_normal_sign,
)
from porous_adjoint.linear_solvers import SolverSettings, solve_saddle_system

logger = logging.getLogger(__name__)

MODEL_DARCY = "darcy"
MODEL_BRINKMAN_MAIN = "brinkman_main"
MODEL_BRINKMAN_TRACTION = "brinkman_traction"


class BodyForce():
    """
    The body force ``rho b`` either sampled at faces (normal component per face) or given through a cell-centred
    potential ``psi`` with ``rho b = -grad psi``.

    The potential form is differenced with the same two-point stencil as the pressure on interior faces. On boundary
    faces the gradient of the nearest interior face is reused, which is exact for affine potentials.
    """

    def __init__(self, face_values: Optional[FaceField] = None, potential: Optional[CellField] = None) -> None:
        if face_values is not None and potential is not None:
            raise InputError("A body force is either face-sampled or given by a potential, not both.")
        self._face_values = face_values
        self._potential = potential

    def __repr__(self) -> str:
        if self._potential is not None:
            return "BodyForce(potential)"
        if self._face_values is not None:
            return "BodyForce(face-sampled)"
        return "BodyForce(zero)"

    @classmethod
    def zero(cls) -> "BodyForce":
        return cls()

    @classmethod
    def from_faces(cls, face_values: FaceField) -> "BodyForce":
        return cls(face_values=face_values)

    @classmethod
    def from_potential(cls, potential: CellField) -> "BodyForce":
        return cls(potential=potential)

    @classmethod
    def uniform(cls, grid: StaggeredGrid, bx: float, by: float) -> "BodyForce":
        return cls(face_values=FaceField(grid, bx, by))

    @property
    def potential(self) -> Optional[CellField]:
        """
        :py:class:`~porous_adjoint.grid.CellField` or ``None`` : the potential ``psi`` when given in potential form.
        """
        return self._potential

    @property
    def is_potential(self) -> bool:
        """
        bool : whether the force is known to be conservative. A zero force counts, face-sampled or not, with
        ``psi = 0``.
        """
        return self._potential is not None or self.is_zero()

    def is_zero(self, tolerance: float = 1e-14) -> bool:
        if self._face_values is not None:
            return self._face_values.max_abs() <= tolerance
        if self._potential is not None:
            values = self._potential.values
            return float(values.max() - values.min()) <= tolerance
        return True

    def face_values(self, grid: StaggeredGrid) -> FaceField:
        """
        The force sampled as a normal component per face.
        """
        if self._face_values is not None:
            if self._face_values.grid != grid:
                raise InputError(f"Body force defined on {self._face_values.grid} does not match {grid}.")
            return self._face_values

        if self._potential is None:
            return FaceField.zeros(grid)

        psi = self._potential.values
        bx = np.zeros(grid.x_face_shape)
        by = np.zeros(grid.y_face_shape)

        if grid.nx > 1:
            bx[1:-1, :] = -np.diff(psi, axis=0) / grid.hx
            bx[0, :] = bx[1, :]
            bx[-1, :] = bx[-2, :]
        if grid.ny > 1:
            by[:, 1:-1] = -np.diff(psi, axis=1) / grid.hy
            by[:, 0] = by[:, 1]
            by[:, -1] = by[:, -2]

        return FaceField(grid, bx, by)

    def potential_values(self, grid: StaggeredGrid) -> CellField:
        """
        The potential ``psi``, zero for the zero force.

        Errors
        ------
        InputError
            Raised for a nonzero face-sampled force, whose potential is not inferred.
        """
        if self._potential is not None:
            return self._potential
        if self.is_zero():
            return CellField(grid, 0.0)
        raise InputError("The body force is face-sampled; no potential is available.")


class FlowSolution():
    """
    Velocity and pressure pair produced by a forward solve, together with solver diagnostics.
    """

    def __init__(
        self,
        v: FaceField,
        p: CellField,
        residual: float = 0.0,
        iterations: int = 0,
        gauge_fixed: bool = False,
        method: str = "direct",
    ) -> None:
        self._v = v
        self._p = p
        self._residual = residual
        self._iterations = iterations
        self._gauge_fixed = gauge_fixed
        self._method = method

    def __repr__(self) -> str:
        return (
            f"FlowSolution(max|v|={self._v.max_abs():.6g}, residual={self._residual:.3e}, "
            f"gauge_fixed={self._gauge_fixed})"
        )

    @property
    def v(self) -> FaceField:
        return self._v

    @property
    def p(self) -> CellField:
        return self._p

    @property
    def grid(self) -> StaggeredGrid:
        return self._v.grid

    @property
    def residual(self) -> float:
        """
        float : scaled residual of the final linear solve.
        """
        return self._residual

    @property
    def iterations(self) -> int:
        return self._iterations

    @property
    def gauge_fixed(self) -> bool:
        """
        bool : set when the pressure level was fixed by the mean-zero convention (no pressure boundary).
        """
        return self._gauge_fixed

    @property
    def method(self) -> str:
        return self._method

    def diagnostics(self) -> Dict[str, Any]:
        return {
            "residual": self._residual,
            "iterations": self._iterations,
            "gauge_fixed": self._gauge_fixed,
            "method": self._method,
            "max_velocity": self._v.max_abs(),
        }


class SaddleSystem(NamedTuple):
    """
    An assembled linear system ``K x = f`` over faces then cells.

    Attributes
    ----------
    matrix : :obj:`~scipy.sparse.csr_matrix`
        The full matrix ``K`` including the drag diagonal.

    rhs : :obj:`~numpy.ndarray`
        Right-hand side ``f``.

    drag_faces : :obj:`~numpy.ndarray` of bool
        Faces whose row carries the drag term ``mu / k_f``; these are the only entries of ``K`` depending on the
        permeability.

    gauge_mask : :obj:`~numpy.ndarray` of bool or ``None``
        Unknowns constrained to zero mean (all pressures) when no boundary fixes the pressure level.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    drag_faces: np.ndarray
    gauge_mask: Optional[np.ndarray]


class BoundaryFaceData():
    """
    Boundary data of a :py:class:`~porous_adjoint.grid.BoundarySpec` resolved onto flat face indices.
    """

    def __init__(self, grid: StaggeredGrid, bc: BoundarySpec) -> None:

        num_faces = grid.num_faces
        self.fixed = np.zeros(num_faces, dtype=bool)
        self.fixed_values = np.zeros(num_faces)
        self.pressure = np.zeros(num_faces, dtype=bool)
        self.pressure_values = np.zeros(num_faces)
        self.sign = np.zeros(num_faces)
        self.spacing = np.concatenate([np.full(grid.num_x_faces, grid.hx), np.full(grid.num_y_faces, grid.hy)])
        self.side_indices: Dict[str, np.ndarray] = {}

        for side, condition in bc.items():
            indices = boundary_face_indices(grid, side)
            self.side_indices[side] = indices
            sigma = side_normal_sign(side)
            self.sign[indices] = sigma

            if condition.kind == BoundaryKind.NORMAL_VELOCITY:
                self.fixed[indices] = True
                self.fixed_values[indices] = sigma * condition.values(grid, side)
            elif condition.kind == BoundaryKind.FULL_VELOCITY:
                self.fixed[indices] = True
                self.fixed_values[indices] = condition.values(grid, side)[:, side_axis(side)]
            elif condition.kind == BoundaryKind.PRESSURE:
                self.pressure[indices] = True
                self.pressure_values[indices] = condition.values(grid, side)
            else:
                # Normal traction acts as an effective boundary pressure -t.n.
                self.pressure[indices] = True
                self.pressure_values[indices] = -sigma * condition.values(grid, side)[:, side_axis(side)]


def gradient_operator(grid: StaggeredGrid, data: BoundaryFaceData) -> Tuple[sp.csr_matrix, np.ndarray]:
    """
    Face pressure-gradient operator ``G`` and its boundary constant ``g0`` so that the discrete gradient is
    ``G p + g0``.

    Interior rows are the negated transpose of the divergence. Rows of faces on a pressure-like side use the one-sided
    difference to the boundary pressure at distance ``h / 2`` (twice the interior weight, the boundary value entering
    through ``g0``). Rows of prescribed-velocity faces are empty.
    """
    weights = np.ones(grid.num_faces)
    boundary = np.zeros(grid.num_faces, dtype=bool)
    for indices in data.side_indices.values():
        boundary[indices] = True
    weights[boundary] = 0.0
    weights[data.pressure] = 2.0

    operator = (sp.diags(weights) @ (-divergence_matrix(grid).T)).tocsr()
    constant = np.zeros(grid.num_faces)
    constant[data.pressure] = (
        2.0 * data.sign[data.pressure] * data.pressure_values[data.pressure] / data.spacing[data.pressure]
    )
    return operator, constant


def solve_assembled(problem: "FlowProblem", system: Optional[SaddleSystem] = None) -> FlowSolution:
    """
    Solves the coupled system of ``problem`` and splits the unknowns into velocity and pressure.
    """
    grid = problem.grid
    if system is None:
        system = problem.assemble_system()

    result = solve_saddle_system(
        system.matrix, system.rhs, problem.settings, gauge_mask=system.gauge_mask, num_cells=grid.num_cells,
    )

    return FlowSolution(
        FaceField.from_flat(grid, result.x[:grid.num_faces]),
        CellField(grid, result.x[grid.num_faces:]),
        residual=result.residual,
        iterations=result.iterations,
        gauge_fixed=system.gauge_mask is not None,
        method=result.method,
    )


def saddle_residuals(problem: "FlowProblem", solution: FlowSolution) -> Tuple[FaceField, CellField]:
    """
    Momentum residual per face and continuity residual ``div v - s`` per cell of a candidate solution, evaluated
    through the assembled system of ``problem``.
    """
    grid = problem.grid
    if solution.grid != grid:
        raise InputError(f"Solution on {solution.grid} does not belong to the problem grid {grid}.")

    system = problem.assemble_system()
    state = np.concatenate([solution.v.flat, solution.p.flat])
    residual = system.matrix @ state - system.rhs

    momentum = FaceField.from_flat(grid, residual[:grid.num_faces])
    # Continuity rows are assembled as -(D v) = -s.
    continuity = CellField(grid, -residual[grid.num_faces:])
    return momentum, continuity


def net_prescribed_flux(grid: StaggeredGrid, bc: BoundarySpec) -> float:
    """
    Signed outward flux ``sum(v.n * face length)`` of the prescribed velocities over the velocity part of the
    boundary.
    """
    total = 0.0
    for side in bc.velocity_sides:
        total += float(np.sum(bc.outward_normal_velocity(grid, side)) * grid.side_face_length(side))
    return total


def boundary_velocity_scale(grid: StaggeredGrid, bc: BoundarySpec) -> float:
    """
    Boundary measure times the largest prescribed normal speed, the scale against which net fluxes are judged.
    """
    perimeter = 2.0 * (grid.lx + grid.ly)
    speed = 0.0
    for side in bc.velocity_sides:
        speed = max(speed, float(np.abs(bc.outward_normal_velocity(grid, side)).max(initial=0.0)))
    return perimeter * speed


class FlowProblem(ABC):
    """
    An abstract baseclass for the porous-flow models. It should not be instantiated directly; instead use
    :py:class:`~porous_adjoint.darcy.DarcyProblem` or :py:class:`~porous_adjoint.brinkman.BrinkmanProblem`.

    Problems are immutable: methods such as :py:meth:`with_permeability` return new instances.
    """

    allowed_kinds: Tuple[BoundaryKind, ...] = ()

    def __init__(
        self,
        grid: StaggeredGrid,
        k: CellField,
        mu: float,
        bc: BoundarySpec,
        body_force: Optional[BodyForce] = None,
        source: Optional[CellField] = None,
        settings: Optional[SolverSettings] = None,
        pressure_datum: float = 0.0,
    ) -> None:
        """
        Parameters
        ----------
        grid : :py:class:`~porous_adjoint.grid.StaggeredGrid`
            Grid the problem is discretized on.

        k : :py:class:`~porous_adjoint.grid.CellField`
            Permeability per cell. Must be positive.

        mu : float
            Dynamic viscosity. Must be positive.

        bc : :py:class:`~porous_adjoint.grid.BoundarySpec`
            Boundary conditions. The kinds allowed depend on the model.

        body_force : :py:class:`BodyForce`, optional
            The body force ``rho b``. Zero if not given.

        source : :py:class:`~porous_adjoint.grid.CellField`, optional
            Mass source added to the continuity equation, ``div v = source``. Only used to verify convergence
            against manufactured solutions.

        settings : :py:class:`~porous_adjoint.linear_solvers.SolverSettings`, optional
            Linear solver controls.

        pressure_datum : float, default 0.0
            Constant subtracted from the boundary pressures by
            :py:func:`~porous_adjoint.classify.shift_pressure_datum`; add it back to recover physical pressures.

        Errors
        ------
        InputError
            Raised for nonpositive ``mu`` or ``k``, a field on a different grid or a boundary kind the model does not
            accept.
        """

        if not np.isfinite(mu) or mu <= 0.0:
            raise InputError(f"Viscosity must be positive and finite. Received mu = {mu}.")

        if k.grid != grid:
            raise InputError(f"Permeability defined on {k.grid} does not match the problem grid {grid}.")

        if np.any(k.values <= 0.0):
            raise InputError(f"Permeability must be positive everywhere. Minimum received value is {k.values.min()}.")

        if source is not None and source.grid != grid:
            raise InputError(f"Source defined on {source.grid} does not match the problem grid {grid}.")

        for side, condition in bc.items():
            if condition.kind not in self.allowed_kinds:
                raise InputError(
                    f"The {side} boundary uses kind '{condition.kind.value}', which {type(self).__name__} does not "
                    f"accept. Allowed kinds are {[kind.value for kind in self.allowed_kinds]}."
                )

        if body_force is None:
            body_force = BodyForce.zero()

        if settings is None:
            settings = SolverSettings()

        self._grid = grid
        self._k = k
        self._mu = float(mu)
        self._bc = bc
        self._body_force = body_force
        self._source = source
        self._settings = settings
        self._pressure_datum = float(pressure_datum)

    @property
    def grid(self) -> StaggeredGrid:
        return self._grid

    @property
    def k(self) -> CellField:
        """
        :py:class:`~porous_adjoint.grid.CellField` : permeability per cell.
        """
        return self._k

    @property
    def mu(self) -> float:
        return self._mu

    @property
    def bc(self) -> BoundarySpec:
        return self._bc

    @property
    def body_force(self) -> BodyForce:
        return self._body_force

    @property
    def source(self) -> Optional[CellField]:
        return self._source

    @property
    def settings(self) -> SolverSettings:
        return self._settings

    @property
    def pressure_datum(self) -> float:
        return self._pressure_datum

    @property
    @abstractmethod
    def model_form(self) -> str:
        """
        str : one of ``"darcy"``, ``"brinkman_main"`` or ``"brinkman_traction"``.
        """
        pass  # pragma: no cover

    @property
    def includes_strain(self) -> bool:
        """
        bool : whether the dissipation functional carries the viscous ``2 mu D:D`` term.
        """
        return self.model_form != MODEL_DARCY

    def _replace(self, **changes: Any) -> "FlowProblem":
        arguments = self._constructor_arguments()
        arguments.update(changes)
        return type(self)(**arguments)

    def _constructor_arguments(self) -> Dict[str, Any]:
        return {
            "grid": self._grid,
            "k": self._k,
            "mu": self._mu,
            "bc": self._bc,
            "body_force": self._body_force,
            "source": self._source,
            "settings": self._settings,
            "pressure_datum": self._pressure_datum,
        }

    def with_permeability(self, k: CellField) -> "FlowProblem":
        return self._replace(k=k)

    def with_boundary(self, bc: BoundarySpec, body_force: Optional[BodyForce] = None, **changes: Any) -> "FlowProblem":
        """
        Returns a copy with new boundary data and, optionally, a new body force.
        """
        if body_force is not None:
            changes["body_force"] = body_force
        return self._replace(bc=bc, **changes)

    def boundary_data(self) -> BoundaryFaceData:
        return BoundaryFaceData(self._grid, self._bc)

    def face_drag(self) -> np.ndarray:
        """
        Drag coefficient ``mu / k_f`` per face (flat layout) using the harmonic face permeability.
        """
        return self._mu / face_permeability(self._grid, self._k).flat

    def source_values(self) -> np.ndarray:
        if self._source is None:
            return np.zeros(self._grid.num_cells)
        return self._source.flat

    @abstractmethod
    def assemble_system(self) -> SaddleSystem:
        """
        Assembles the coupled velocity-pressure system of this problem.
        """
        pass  # pragma: no cover

    @abstractmethod
    def solve(self) -> FlowSolution:
        """
        Solves the forward problem.

        Errors
        ------
        CompatibilityError
            Raised when velocity is prescribed on the entire boundary and the prescribed flux does not balance.

        ConvergenceError
            Raised when the linear solve misses its tolerance.
        """
        pass  # pragma: no cover

    @abstractmethod
    def momentum_face_mask(self) -> np.ndarray:
        """
        Flat boolean mask of the faces whose momentum row carries the drag term.
        """
        pass  # pragma: no cover

    @abstractmethod
    def adjoint_problem(self, forward: FlowSolution) -> "FlowProblem":
        """
        The adjoint problem, written as a problem of the same model with pseudo loads built from ``forward``.
        """
        pass  # pragma: no cover

    def check_compatible(self, tolerance: float = 1e-10) -> float:
        """
        Verifies the compatibility condition of a problem with velocity prescribed on the whole boundary: the net
        outward flux must balance the integrated source.

        Returns
        -------
        imbalance : float
            Net prescribed outward flux minus the integrated source. Zero when a pressure boundary exists.

        Errors
        ------
        CompatibilityError
            Raised when ``|imbalance|`` exceeds ``tolerance`` times the boundary velocity scale.
        """
        if self._bc.has_pressure_boundary:
            return 0.0

        source_total = float(np.sum(self.source_values()) * self._grid.cell_area)
        imbalance = net_prescribed_flux(self._grid, self._bc) - source_total
        scale = boundary_velocity_scale(self._grid, self._bc) + float(
            np.sum(np.abs(self.source_values())) * self._grid.cell_area
        )

        if abs(imbalance) > tolerance * scale:
            raise CompatibilityError(
                f"Velocity is prescribed on the entire boundary but the net outward flux {imbalance:.6e} does not "
                f"vanish (tolerance {tolerance:.1e} x scale {scale:.6e})."
            )
        return imbalance

    def total_dissipation(self, v: FaceField) -> float:
        """
        Total dissipation rate of the velocity ``v`` under this model.
        """
        # Imported here; the dissipation module depends on the solver modules built on this class.
        from porous_adjoint.dissipation import total_dissipation

        return total_dissipation(self, v)

    def solve_adjoint(self, forward: Optional[FlowSolution] = None):
        """
        Solves the adjoint problem, running the forward solve first if ``forward`` is not given.

        Returns
        -------
        adjoint : :py:class:`~porous_adjoint.adjoint.AdjointSolution`
        """
        from porous_adjoint.adjoint import solve_adjoint

        if forward is None:
            forward = self.solve()
        return solve_adjoint(self, forward)
