"""
Recognition of the four boundary value problem classes for which the adjoint of the total dissipation rate is known
in closed form:

* **A** pressure (or traction) loading on the entire boundary,
* **B** pressure (or traction) loading on part of the boundary and homogeneous velocity on the rest,
* **C** compatible velocity on the entire boundary with a conservative body force,
* **D** zero pressure (or traction) loading on part of the boundary, any velocity on the rest and no body force.

Anything else is ``General``. Under the main Darcy-Brinkman form classes A, B and D also need a zero tangential
velocity on the pressure sides.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Tuple

import numpy as np

from porous_adjoint.exceptions import MisuseError, NotShiftable
from porous_adjoint.flow_problem import (
    MODEL_BRINKMAN_MAIN,
    FlowProblem,
    FlowSolution,
    boundary_velocity_scale,
    net_prescribed_flux,
)
from porous_adjoint.grid import (
    BoundaryCondition,
    BoundaryKind,
    BoundarySpec,
    CellField,
    StaggeredGrid,
    side_axis,
    side_normal_sign,
)

logger = logging.getLogger(__name__)

HOMOGENEOUS_TOLERANCE = 1e-14
COMPATIBILITY_TOLERANCE = 1e-10


class ClassTag(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    GENERAL = "General"


PRESSURE_DRIVEN = (ClassTag.A, ClassTag.B)
VELOCITY_DRIVEN = (ClassTag.C, ClassTag.D)


@dataclass(frozen=True)
class BvpClass:
    """
    Outcome of :py:func:`classify_bvp`.

    Attributes
    ----------
    tag : :py:class:`ClassTag`
        The detected class.

    model_form : str
        ``"darcy"``, ``"brinkman_main"`` or ``"brinkman_traction"``.

    notes : tuple of str
        One line per clause checked, stating whether it held.
    """

    tag: ClassTag
    model_form: str
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def is_pressure_driven(self) -> bool:
        return self.tag in PRESSURE_DRIVEN

    @property
    def is_velocity_driven(self) -> bool:
        return self.tag in VELOCITY_DRIVEN

    def to_dict(self) -> Dict[str, Any]:
        return {"class": self.tag.value, "model_form": self.model_form, "notes": list(self.notes)}


def _max_abs(values: np.ndarray) -> float:
    return float(np.abs(values).max(initial=0.0))


def _pressure_load(grid: StaggeredGrid, condition: BoundaryCondition, side: str) -> np.ndarray:
    """
    Effective boundary pressure of a pressure-like side: ``p^p`` or ``-t.n``.
    """
    if condition.kind == BoundaryKind.PRESSURE:
        return condition.values(grid, side)
    return -side_normal_sign(side) * condition.values(grid, side)[:, side_axis(side)]


def _velocity_homogeneous(grid: StaggeredGrid, bc: BoundarySpec, notes: List[str]) -> bool:
    result = True
    for side in bc.velocity_sides:
        size = _max_abs(bc[side].values(grid, side))
        holds = size <= HOMOGENEOUS_TOLERANCE
        notes.append(f"velocity data on the {side} side {'is' if holds else 'is not'} zero (max |v^p| = {size:.3e})")
        result = result and holds
    return result


def _pressure_homogeneous(grid: StaggeredGrid, bc: BoundarySpec, notes: List[str]) -> bool:
    result = True
    for side in bc.pressure_sides:
        size = _max_abs(bc[side].values(grid, side))
        holds = size <= HOMOGENEOUS_TOLERANCE
        notes.append(f"loading on the {side} side {'is' if holds else 'is not'} zero (max = {size:.3e})")
        result = result and holds
    return result


def _tangential_zero(grid: StaggeredGrid, bc: BoundarySpec, notes: List[str]) -> bool:
    result = True
    for side in bc.sides_of_kind(BoundaryKind.PRESSURE):
        size = _max_abs(bc[side].tangential_values(grid, side))
        holds = size <= HOMOGENEOUS_TOLERANCE
        notes.append(f"tangential velocity on the {side} side {'is' if holds else 'is not'} zero")
        result = result and holds
    return result


def classify_bvp(problem: FlowProblem) -> BvpClass:
    """
    Detects the class of a boundary value problem.

    The classes are tested in the order A, B, C, D; the first whose clauses all hold is returned. Homogeneity is
    judged to 1e-14 and the class C compatibility to 1e-10 times the boundary velocity scale.

    Parameters
    ----------
    problem : :py:class:`~porous_adjoint.flow_problem.FlowProblem`
        A Darcy or Darcy-Brinkman problem.

    Returns
    -------
    bvp_class : :py:class:`BvpClass`
    """

    grid, bc = problem.grid, problem.bc
    form = problem.model_form
    notes: List[str] = []

    needs_zero_tangential = form == MODEL_BRINKMAN_MAIN
    tangential_ok = _tangential_zero(grid, bc, notes) if needs_zero_tangential else True

    has_pressure = bc.has_pressure_boundary
    has_velocity = len(bc.velocity_sides) > 0

    if has_pressure and not has_velocity and tangential_ok:
        notes.append("pressure loading covers the entire boundary")
        return _report(ClassTag.A, form, notes)

    if has_pressure and tangential_ok and _velocity_homogeneous(grid, bc, notes):
        notes.append("pressure loading on part of the boundary, homogeneous velocity on the rest")
        return _report(ClassTag.B, form, notes)

    body_force = problem.body_force
    force_zero = body_force.is_zero(HOMOGENEOUS_TOLERANCE)

    if not has_pressure:
        flux = net_prescribed_flux(grid, bc)
        scale = boundary_velocity_scale(grid, bc)
        compatible = abs(flux) <= COMPATIBILITY_TOLERANCE * scale
        notes.append(f"net prescribed flux {flux:.3e} {'is' if compatible else 'is not'} balanced")
        notes.append(f"body force {'is' if body_force.is_potential else 'is not'} given by a potential")
        if compatible and body_force.is_potential:
            return _report(ClassTag.C, form, notes)
        return _report(ClassTag.GENERAL, form, notes)

    notes.append(f"body force {'is' if force_zero else 'is not'} zero")
    if tangential_ok and force_zero and _pressure_homogeneous(grid, bc, notes):
        notes.append("zero loading on the pressure part, no body force")
        return _report(ClassTag.D, form, notes)

    return _report(ClassTag.GENERAL, form, notes)


def _report(tag: ClassTag, form: str, notes: List[str]) -> BvpClass:
    logger.info(f"Boundary value problem ({form}) classified as {tag.value}.")
    for note in notes:
        logger.debug(f"  {note}")
    return BvpClass(tag, form, tuple(notes))


def check_compatibility(grid: StaggeredGrid, bc: BoundarySpec) -> float:
    """
    Net outward flux ``sum(v^p.n * face length)`` of a boundary where velocity is prescribed everywhere.

    Errors
    ------
    MisuseError
        Raised when part of the boundary carries a pressure or traction condition; the compatibility condition only
        applies to pure-velocity problems.
    """
    if bc.has_pressure_boundary:
        raise MisuseError(
            f"The compatibility sum applies only when velocity is prescribed on the entire boundary; sides "
            f"{bc.pressure_sides} carry pressure-like conditions."
        )
    return net_prescribed_flux(grid, bc)


def shift_pressure_datum(problem: FlowProblem) -> FlowProblem:
    """
    Subtracts a constant pressure datum ``c`` from the boundary loading so that it becomes zero.

    The returned problem records ``c`` in its ``pressure_datum``; use :py:func:`restore_pressure` to map its pressures
    back. Velocities are unchanged.

    Errors
    ------
    NotShiftable
        Raised when there is no pressure-like side, when the loading is not one constant over all such sides or when
        a body force is present.
    """
    grid, bc = problem.grid, problem.bc

    if not bc.has_pressure_boundary:
        raise NotShiftable("The problem has no pressure or traction side whose datum could be shifted.")

    if not problem.body_force.is_zero(HOMOGENEOUS_TOLERANCE):
        raise NotShiftable("Shifting the pressure datum requires a zero body force.")

    loads = np.concatenate([_pressure_load(grid, bc[side], side) for side in bc.pressure_sides])
    datum = float(loads[0])
    spread = float(loads.max() - loads.min())
    if spread > HOMOGENEOUS_TOLERANCE * max(1.0, abs(datum)):
        raise NotShiftable(
            f"The boundary loading is not a single constant (values range over {loads.min():.6g} to "
            f"{loads.max():.6g}); only a constant datum can be shifted."
        )

    if datum == 0.0:
        return problem

    conditions = {}
    for side in bc.pressure_sides:
        condition = bc[side]
        if condition.kind == BoundaryKind.PRESSURE:
            conditions[side] = BoundaryCondition(
                BoundaryKind.PRESSURE, condition.values(grid, side) - datum, tangential=condition.raw_tangential,
            )
        else:
            traction = condition.values(grid, side)
            traction[:, side_axis(side)] += side_normal_sign(side) * datum
            conditions[side] = BoundaryCondition(BoundaryKind.TRACTION, traction)

    logger.info(f"Shifted the pressure datum by {datum:.6g}.")
    return problem.with_boundary(bc.replace(**conditions), pressure_datum=problem.pressure_datum + datum)


def restore_pressure(solution: FlowSolution, datum: float) -> FlowSolution:
    """
    Adds the datum removed by :py:func:`shift_pressure_datum` back to the pressure of ``solution``.
    """
    return FlowSolution(
        solution.v,
        CellField(solution.grid, solution.p.values + datum),
        residual=solution.residual,
        iterations=solution.iterations,
        gauge_fixed=solution.gauge_fixed,
        method=solution.method,
    )
