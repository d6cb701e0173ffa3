"""
Forward solver for the Darcy-Brinkman equations

    mu / k v + grad p - div(2 mu D[v]) = rho b,    div v = 0

in the main form (pressure and full-velocity boundaries) and the traction form (traction and full-velocity
boundaries).

The viscous term is the Hessian of the discrete strain energy of :py:func:`strain_energy`: normal strain rates at cell
centres and shear rates at vertices, with the shear next to full-velocity and pressure sides taken against the
prescribed tangential velocity at half a cell. On a divergence-free field it reduces to the component-wise vector
Laplacian in the interior. Boundary faces of a pressure or traction side carry the normal stress balance
``n.(-p I + 2 mu D[v]).n = -p_eff`` over the half cell next to the boundary, where ``p_eff`` is the prescribed
pressure or ``-t.n``; the tangential traction enters as a load on the faces next to a traction side.
"""

import logging
from typing import Any, Dict, NamedTuple, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from porous_adjoint.exceptions import InputError
from porous_adjoint.flow_problem import (
    MODEL_BRINKMAN_MAIN,
    MODEL_BRINKMAN_TRACTION,
    BodyForce,
    FlowProblem,
    FlowSolution,
    SaddleSystem,
    gradient_operator,
    saddle_residuals,
    solve_assembled,
)
from porous_adjoint.grid import (
    BOTTOM,
    LEFT,
    RIGHT,
    TOP,
    BoundaryCondition,
    BoundaryKind,
    BoundarySpec,
    CellField,
    FaceField,
    StaggeredGrid,
    boundary_face_indices,
    divergence_matrix,
    side_axis,
    side_normal_sign,
)

logger = logging.getLogger(__name__)

FORM_MAIN = "main"
FORM_TRACTION = "traction"
BRINKMAN_FORMS = (FORM_MAIN, FORM_TRACTION)

# Sides that prescribe the tangential velocity.
WALL_KINDS = (BoundaryKind.FULL_VELOCITY, BoundaryKind.PRESSURE)


class BrinkmanOperators(NamedTuple):
    """
    The pieces of the discrete Darcy-Brinkman momentum equation

        drag * v + V v + c + N v + G p + g0 = rho b

    on momentum faces, with ``v = v^p`` on full-velocity faces.

    Attributes
    ----------
    drag : :obj:`~numpy.ndarray`
        ``mu / k_f`` per face.

    momentum_faces : :obj:`~numpy.ndarray` of bool
        Faces carrying a momentum row (every face not on a full-velocity side).

    viscous : :obj:`~scipy.sparse.csr_matrix`
        ``V``: the viscous operator ``-div(2 mu D[v])`` without the normal-stress rows ``N``, zero rows on
        full-velocity faces.

    viscous_constant : :obj:`~numpy.ndarray`
        ``c``: contribution of the prescribed tangential wall velocity and tangential traction.

    normal_stress : :obj:`~scipy.sparse.csr_matrix`
        ``N``: the ``4 mu (v_b - v_inner) / h**2`` normal-stress part of boundary rows on pressure and traction sides.

    gradient : :obj:`~scipy.sparse.csr_matrix`
        ``G`` from :py:func:`~porous_adjoint.flow_problem.gradient_operator`.

    gradient_constant : :obj:`~numpy.ndarray`
        ``g0``.

    fixed_values : :obj:`~numpy.ndarray`
        Prescribed normal velocity on full-velocity faces.
    """

    drag: np.ndarray
    momentum_faces: np.ndarray
    viscous: sp.csr_matrix
    viscous_constant: np.ndarray
    normal_stress: sp.csr_matrix
    gradient: sp.csr_matrix
    gradient_constant: np.ndarray
    fixed_values: np.ndarray


class BrinkmanProblem(FlowProblem):
    """
    A Darcy-Brinkman boundary value problem in the main or traction form.

    The main form accepts ``PRESSURE`` (with a tangential velocity profile) and ``FULL_VELOCITY`` sides; the traction
    form accepts ``TRACTION`` and ``FULL_VELOCITY`` sides.
    """

    def __init__(self, *args: Any, form: str = FORM_MAIN, **kwargs: Any) -> None:
        if form not in BRINKMAN_FORMS:
            raise InputError(f"Unknown Darcy-Brinkman form '{form}'. Expected one of {BRINKMAN_FORMS}.")
        self._form = form
        super().__init__(*args, **kwargs)

    def __repr__(self) -> str:
        return f"BrinkmanProblem(grid={self.grid}, mu={self.mu}, form={self._form}, bc={self.bc})"

    @property
    def allowed_kinds(self) -> Tuple[BoundaryKind, ...]:
        if self._form == FORM_MAIN:
            return (BoundaryKind.PRESSURE, BoundaryKind.FULL_VELOCITY)
        return (BoundaryKind.TRACTION, BoundaryKind.FULL_VELOCITY)

    @property
    def form(self) -> str:
        return self._form

    @property
    def model_form(self) -> str:
        return MODEL_BRINKMAN_MAIN if self._form == FORM_MAIN else MODEL_BRINKMAN_TRACTION

    def _constructor_arguments(self) -> Dict[str, Any]:
        arguments = super()._constructor_arguments()
        arguments["form"] = self._form
        return arguments

    def momentum_face_mask(self) -> np.ndarray:
        return ~self.boundary_data().fixed

    def operators(self) -> BrinkmanOperators:
        """
        Assembles the separate pieces of the momentum equation, see :py:class:`BrinkmanOperators`.
        """
        grid = self.grid
        data = self.boundary_data()
        momentum_faces = ~data.fixed

        viscous, constant = _viscous_operator(grid, self.mu, self.bc)
        keep = sp.diags(momentum_faces.astype(float))
        viscous = (keep @ viscous).tocsr()
        constant = np.where(momentum_faces, constant, 0.0)

        normal_stress = _normal_stress_operator(grid, self.mu, self.bc)
        operator, gradient_constant = gradient_operator(grid, data)

        return BrinkmanOperators(
            drag=self.face_drag(),
            momentum_faces=momentum_faces,
            viscous=viscous,
            viscous_constant=constant,
            normal_stress=normal_stress,
            gradient=operator,
            gradient_constant=gradient_constant,
            fixed_values=data.fixed_values,
        )

    def assemble_system(self) -> SaddleSystem:
        """
        Coupled saddle-point form. Momentum rows on faces off full-velocity sides, identity rows on full-velocity
        faces and continuity rows ``-(D v)_c = -s_c``.
        """
        grid = self.grid
        ops = self.operators()
        momentum = ops.momentum_faces

        diagonal = np.where(momentum, ops.drag, 1.0)
        velocity_block = sp.diags(diagonal) + ops.viscous + ops.normal_stress

        matrix = sp.bmat([[velocity_block, ops.gradient], [-divergence_matrix(grid), None]], format="csr")

        force = self.body_force.face_values(grid).flat
        face_rhs = np.where(momentum, force - ops.gradient_constant - ops.viscous_constant, ops.fixed_values)
        rhs = np.concatenate([face_rhs, -self.source_values()])

        gauge_mask = None
        if not self.bc.has_pressure_boundary:
            gauge_mask = np.concatenate([np.zeros(grid.num_faces, dtype=bool), np.ones(grid.num_cells, dtype=bool)])

        return SaddleSystem(matrix, rhs, momentum, gauge_mask)

    def solve(self) -> FlowSolution:
        return solve_brinkman(self)

    def adjoint_problem(self, forward: FlowSolution) -> "BrinkmanProblem":
        """
        The adjoint Darcy-Brinkman problem.

        The pseudo body force is ``mu v / k_f - div(2 mu D[v])`` on momentum faces, evaluated with the forward wall
        data. Pressure sides carry the pseudo pressure ``-n.(2 mu D[v]).n`` with zero tangential velocity; traction
        sides carry the matching normal traction and the forward tangential traction. Full-velocity sides become
        no-slip.
        """
        grid = self.grid
        if forward.grid != grid:
            raise InputError(f"Forward solution on {forward.grid} does not belong to the problem grid {grid}.")

        ops = self.operators()
        v = forward.v.flat
        pseudo_force = np.where(ops.momentum_faces, ops.drag * v + ops.viscous @ v + ops.viscous_constant, 0.0)

        conditions = {}
        for side, condition in self.bc.items():
            if condition.kind == BoundaryKind.FULL_VELOCITY:
                conditions[side] = BoundaryCondition(BoundaryKind.FULL_VELOCITY, (0.0, 0.0))
                continue

            pseudo_pressure = -2.0 * self.mu * normal_strain_rate(grid, forward.v, side)
            if condition.kind == BoundaryKind.PRESSURE:
                conditions[side] = BoundaryCondition(BoundaryKind.PRESSURE, pseudo_pressure, tangential=0.0)
            else:
                axis = side_axis(side)
                traction = condition.values(grid, side).copy()
                traction[:, axis] = -side_normal_sign(side) * pseudo_pressure
                conditions[side] = BoundaryCondition(BoundaryKind.TRACTION, traction)

        return self._replace(
            bc=self.bc.replace(**conditions),
            body_force=BodyForce.from_faces(FaceField.from_flat(grid, pseudo_force)),
            source=None,
            pressure_datum=0.0,
        )


def normal_strain_rate(grid: StaggeredGrid, v: FaceField, side: str) -> np.ndarray:
    """
    Outward normal strain rate ``n.D[v].n`` at the boundary faces of ``side``, one-sided over the first cell.
    """
    sigma = side_normal_sign(side)
    faces = boundary_face_indices(grid, side)
    inner = faces + _inward_offset(grid, side)
    h = grid.hx if side_axis(side) == 0 else grid.hy
    values = v.flat
    return sigma * (values[faces] - values[inner]) / h


def _inward_offset(grid: StaggeredGrid, side: str) -> int:
    if side == LEFT:
        return grid.ny
    if side == RIGHT:
        return -grid.ny
    if side == BOTTOM:
        return 1
    return -1


def _tangential_rows(grid: StaggeredGrid, side: str) -> np.ndarray:
    """
    Flat indices of the tangential-component faces next to ``side``, one per boundary vertex in order of increasing
    tangential coordinate.
    """
    nx, ny = grid.nx, grid.ny
    if side == BOTTOM:
        return np.arange(nx + 1) * ny
    if side == TOP:
        return np.arange(nx + 1) * ny + ny - 1
    offset = grid.num_x_faces
    if side == LEFT:
        return offset + np.arange(ny + 1)
    return offset + (nx - 1) * (ny + 1) + np.arange(ny + 1)


def _vertex_average(values: np.ndarray) -> np.ndarray:
    """
    Face values of one side averaged to its vertices; the end vertices take the end faces.
    """
    vertex = np.empty(values.size + 1)
    vertex[1:-1] = 0.5 * (values[:-1] + values[1:])
    vertex[0] = values[0]
    vertex[-1] = values[-1]
    return vertex


def _tangential_profile(grid: StaggeredGrid, condition: BoundaryCondition, side: str) -> np.ndarray:
    tangential_axis = 1 - side_axis(side)
    if condition.kind == BoundaryKind.PRESSURE:
        return condition.tangential_values(grid, side)
    return condition.values(grid, side)[:, tangential_axis]


class StrainEnergy(NamedTuple):
    """
    Discrete strain-rate samples ``s = B v + b0`` of a face velocity: the normal rates ``D_xx`` and ``D_yy`` at cell
    centres followed by the engineering shear rate ``u_y + w_x`` at every vertex.

    The viscous dissipation is ``mu * sum(weights * s**2)``, the discrete ``2 mu D:D`` integrated over the domain. Its
    Hessian is the viscous part of the Darcy-Brinkman momentum equation, so the discrete dissipation is the energy of
    the discrete operator.

    Attributes
    ----------
    samples : :obj:`~scipy.sparse.csr_matrix`
        ``B``, shape ``(2 num_cells + (nx + 1) (ny + 1), num_faces)``.

    offset : :obj:`~numpy.ndarray`
        ``b0``, the contribution of prescribed tangential wall velocities.

    weights : :obj:`~numpy.ndarray`
        ``2 * cell area`` for the normal rates and the vertex control area for the shear rates.
    """

    samples: sp.csr_matrix
    offset: np.ndarray
    weights: np.ndarray

    def rates(self, flat: np.ndarray) -> np.ndarray:
        return self.samples @ flat + self.offset

    def dissipation(self, mu: float, flat: np.ndarray) -> float:
        return float(mu * np.sum(self.weights * self.rates(flat) ** 2))

    def dissipation_gradient(self, mu: float, flat: np.ndarray) -> np.ndarray:
        """
        Derivative of :py:meth:`dissipation` with respect to the flat face velocities.
        """
        return np.asarray(2.0 * mu * (self.samples.T @ (self.weights * self.rates(flat)))).ravel()

    def hessian(self, mu: float) -> sp.csr_matrix:
        """
        Half the Hessian of :py:meth:`dissipation`, ``mu B^T diag(weights) B``.
        """
        return (mu * (self.samples.T @ sp.diags(self.weights) @ self.samples)).tocsr()

    def load(self, mu: float) -> np.ndarray:
        """
        ``mu B^T diag(weights) b0``, the linear term contributed by the wall data.
        """
        return np.asarray(mu * (self.samples.T @ (self.weights * self.offset))).ravel()


def _vertex_difference(n: int, h: float, closed_start: bool, closed_end: bool) -> sp.csr_matrix:
    """
    Differences of ``n`` face values at the ``n + 1`` vertices between and around them. An end vertex on a closed side
    differences its face against the wall at distance ``h / 2``; on an open side the end row is empty.
    """
    upper = np.full(n, 1.0 / h)
    lower = np.full(n, -1.0 / h)
    upper[0] = 2.0 / h if closed_start else 0.0
    lower[-1] = -2.0 / h if closed_end else 0.0
    return sp.diags([upper, lower], [0, -1], shape=(n + 1, n), format="csr")


def _wall_velocity(grid: StaggeredGrid, bc: Optional[BoundarySpec], side: str) -> Optional[np.ndarray]:
    """
    Tangential velocity at the vertices of ``side``, or ``None`` if the side does not prescribe it.
    """
    if bc is None or bc[side].kind not in WALL_KINDS:
        return None
    return _vertex_average(_tangential_profile(grid, bc[side], side))


def strain_energy(grid: StaggeredGrid, bc: Optional[BoundarySpec] = None) -> StrainEnergy:
    """
    Builds the :py:class:`StrainEnergy` of ``grid``.

    Shear rates at boundary vertices of full-velocity and pressure sides difference the adjacent face against the
    prescribed tangential velocity. Traction sides prescribe no tangential velocity; the part of the shear rate
    across them is left out and the tangential traction enters the momentum equation as a load instead. Without
    ``bc`` every side is treated that way.
    """
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    area = grid.cell_area

    bottom = _wall_velocity(grid, bc, BOTTOM)
    top = _wall_velocity(grid, bc, TOP)
    left = _wall_velocity(grid, bc, LEFT)
    right = _wall_velocity(grid, bc, RIGHT)

    diff_x = sp.diags([-np.ones(nx), np.ones(nx)], [0, 1], shape=(nx, nx + 1)) / hx
    diff_y = sp.diags([-np.ones(ny), np.ones(ny)], [0, 1], shape=(ny, ny + 1)) / hy
    strain_xx = sp.hstack([sp.kron(diff_x, sp.identity(ny)), sp.csr_matrix((grid.num_cells, grid.num_y_faces))])
    strain_yy = sp.hstack([sp.csr_matrix((grid.num_cells, grid.num_x_faces)), sp.kron(sp.identity(nx), diff_y)])

    du_dy = sp.kron(sp.identity(nx + 1), _vertex_difference(ny, hy, bottom is not None, top is not None))
    dw_dx = sp.kron(_vertex_difference(nx, hx, left is not None, right is not None), sp.identity(ny + 1))
    shear = sp.hstack([du_dy, dw_dx])

    # Vertices are ordered i * (ny + 1) + j.
    offset = np.zeros((nx + 1, ny + 1))
    if bottom is not None:
        offset[:, 0] -= 2.0 * bottom / hy
    if top is not None:
        offset[:, -1] += 2.0 * top / hy
    if left is not None:
        offset[0, :] -= 2.0 * left / hx
    if right is not None:
        offset[-1, :] += 2.0 * right / hx

    vertex_area = np.full((nx + 1, ny + 1), area)
    vertex_area[[0, -1], :] *= 0.5
    vertex_area[:, [0, -1]] *= 0.5

    return StrainEnergy(
        samples=sp.vstack([strain_xx, strain_yy, shear], format="csr"),
        offset=np.concatenate([np.zeros(2 * grid.num_cells), offset.ravel()]),
        weights=np.concatenate([np.full(2 * grid.num_cells, 2.0 * area), vertex_area.ravel()]),
    )


def _viscous_operator(grid: StaggeredGrid, mu: float, bc: BoundarySpec) -> Tuple[sp.csr_matrix, np.ndarray]:
    """
    ``V`` and ``c`` of :py:class:`BrinkmanOperators`: the strain energy Hessian per unit face volume without the
    normal-stress rows of :py:func:`_normal_stress_operator`, so that ``V + N`` is the full Hessian.
    """
    energy = strain_energy(grid, bc)
    inverse_volume = sp.diags(1.0 / grid.face_volumes().flat)

    viscous = inverse_volume @ energy.hessian(mu) - _normal_stress_operator(grid, mu, bc)
    constant = inverse_volume @ energy.load(mu)

    for side in bc.sides_of_kind(BoundaryKind.TRACTION):
        normal_spacing = grid.hx if side_axis(side) == 0 else grid.hy
        traction = _vertex_average(_tangential_profile(grid, bc[side], side))
        constant[_tangential_rows(grid, side)] -= traction / normal_spacing

    return viscous.tocsr(), np.asarray(constant).ravel()


def _normal_stress_operator(grid: StaggeredGrid, mu: float, bc) -> sp.csr_matrix:

    rows, cols, data = [], [], []
    for side in bc.pressure_sides:
        faces = boundary_face_indices(grid, side)
        h = grid.hx if side_axis(side) == 0 else grid.hy
        weight = 4.0 * mu / h ** 2
        rows.extend([faces, faces])
        cols.extend([faces, faces + _inward_offset(grid, side)])
        data.extend([np.full(faces.size, weight), np.full(faces.size, -weight)])

    if not rows:
        return sp.csr_matrix((grid.num_faces, grid.num_faces))

    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(grid.num_faces, grid.num_faces)
    )


def solve_brinkman(problem: BrinkmanProblem) -> FlowSolution:
    """
    Solves a Darcy-Brinkman problem through its coupled saddle-point system.

    Errors
    ------
    CompatibilityError
        Raised when velocity is prescribed on the entire boundary and the prescribed flux does not balance.

    ConvergenceError
        Raised when the saddle-point system cannot be solved to the requested tolerance.
    """
    problem.check_compatible()
    solution = solve_assembled(problem)
    logger.info(
        f"Darcy-Brinkman ({problem.form} form) solve on {problem.grid} finished with scaled residual "
        f"{solution.residual:.3e} using {solution.method}."
    )
    return solution


def residuals_brinkman(problem: BrinkmanProblem, solution: FlowSolution) -> Tuple[FaceField, CellField]:
    """
    Momentum residual per face and continuity residual per cell of a candidate solution.
    """
    return saddle_residuals(problem, solution)


def _gradient_1d(n: int, h: float) -> sp.csr_matrix:
    """
    First derivative of values at ``n`` equally spaced points: central differences inside, one-sided at the ends,
    zero for a single point.
    """
    if n == 1:
        return sp.csr_matrix((1, 1))
    matrix = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        matrix[i, i - 1] = -0.5 / h
        matrix[i, i + 1] = 0.5 / h
    matrix[0, 0], matrix[0, 1] = -1.0 / h, 1.0 / h
    matrix[n - 1, n - 2], matrix[n - 1, n - 1] = -1.0 / h, 1.0 / h
    return matrix.tocsr()


def strain_rate_matrices(grid: StaggeredGrid) -> Tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """
    Sparse operators of shape ``(num_cells, num_faces)`` returning the cell-centred strain-rate components ``D_xx``,
    ``D_yy`` and ``D_xy``.

    The normal components difference the two faces of each cell. The shear component differences the cell-centred
    averages of each velocity component across neighbouring cells.
    """
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy

    diff_x = sp.diags([-np.ones(nx), np.ones(nx)], [0, 1], shape=(nx, nx + 1)) / hx
    diff_y = sp.diags([-np.ones(ny), np.ones(ny)], [0, 1], shape=(ny, ny + 1)) / hy
    mean_x = sp.diags([0.5 * np.ones(nx), 0.5 * np.ones(nx)], [0, 1], shape=(nx, nx + 1))
    mean_y = sp.diags([0.5 * np.ones(ny), 0.5 * np.ones(ny)], [0, 1], shape=(ny, ny + 1))

    du_dx = sp.kron(diff_x, sp.identity(ny))
    dw_dy = sp.kron(sp.identity(nx), diff_y)
    du_dy = sp.kron(sp.identity(nx), _gradient_1d(ny, hy)) @ sp.kron(mean_x, sp.identity(ny))
    dw_dx = sp.kron(_gradient_1d(nx, hx), sp.identity(ny)) @ sp.kron(sp.identity(nx), mean_y)

    zero_x = sp.csr_matrix((grid.num_cells, grid.num_y_faces))
    zero_y = sp.csr_matrix((grid.num_cells, grid.num_x_faces))

    strain_xx = sp.hstack([du_dx, zero_x]).tocsr()
    strain_yy = sp.hstack([zero_y, dw_dy]).tocsr()
    strain_xy = (0.5 * sp.hstack([du_dy, dw_dx])).tocsr()
    return strain_xx, strain_yy, strain_xy


def strain_rate(grid: StaggeredGrid, v: FaceField) -> np.ndarray:
    """
    Symmetric strain-rate tensor ``D[v] = (grad v + grad v^T) / 2`` at cell centres.

    Returns
    -------
    tensor : :obj:`~numpy.ndarray`
        Shape ``(nx, ny, 2, 2)``.

    Errors
    ------
    InputError
        Raised if ``v`` lives on a different grid.
    """
    if v.grid != grid:
        raise InputError(f"Field defined on {v.grid} does not match {grid}.")

    strain_xx, strain_yy, strain_xy = strain_rate_matrices(grid)
    flat = v.flat

    tensor = np.empty(grid.cell_shape + (2, 2))
    tensor[..., 0, 0] = (strain_xx @ flat).reshape(grid.cell_shape)
    tensor[..., 1, 1] = (strain_yy @ flat).reshape(grid.cell_shape)
    tensor[..., 0, 1] = (strain_xy @ flat).reshape(grid.cell_shape)
    tensor[..., 1, 0] = tensor[..., 0, 1]
    return tensor


def _interior_face_masks(grid: StaggeredGrid) -> Tuple[np.ndarray, np.ndarray]:
    """
    Faces whose five-point stencils stay inside the field: not on the boundary and not in the first or last
    tangential row.
    """
    mask_x = np.zeros(grid.x_face_shape, dtype=bool)
    mask_y = np.zeros(grid.y_face_shape, dtype=bool)
    mask_x[1:-1, 1:-1] = True
    mask_y[1:-1, 1:-1] = True
    return mask_x, mask_y


def vector_laplacian(grid: StaggeredGrid, v: FaceField, mu: float = 1.0) -> FaceField:
    """
    ``mu lap v`` component-wise at interior faces. Faces next to the boundary are set to zero and flagged.
    """
    if v.grid != grid:
        raise InputError(f"Field defined on {v.grid} does not match {grid}.")

    u, w = v.x_values, v.y_values
    hx, hy = grid.hx, grid.hy
    mask_x, mask_y = _interior_face_masks(grid)

    lap_x = np.zeros(grid.x_face_shape)
    lap_y = np.zeros(grid.y_face_shape)

    lap_x[1:-1, 1:-1] = (
        (u[2:, 1:-1] - 2.0 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / hx ** 2
        + (u[1:-1, 2:] - 2.0 * u[1:-1, 1:-1] + u[1:-1, :-2]) / hy ** 2
    )
    lap_y[1:-1, 1:-1] = (
        (w[2:, 1:-1] - 2.0 * w[1:-1, 1:-1] + w[:-2, 1:-1]) / hx ** 2
        + (w[1:-1, 2:] - 2.0 * w[1:-1, 1:-1] + w[1:-1, :-2]) / hy ** 2
    )

    return FaceField(grid, mu * lap_x, mu * lap_y, flagged=(~mask_x, ~mask_y))


def stress_divergence(grid: StaggeredGrid, v: FaceField, mu: float = 1.0) -> FaceField:
    """
    ``div(2 mu D[v])`` at interior faces, with normal stresses at cell centres and shear stresses at vertices. Faces
    next to the boundary are set to zero and flagged.

    On a discretely divergence-free field this agrees with :py:func:`vector_laplacian` to rounding error.
    """
    if v.grid != grid:
        raise InputError(f"Field defined on {v.grid} does not match {grid}.")

    u, w = v.x_values, v.y_values
    hx, hy = grid.hx, grid.hy
    mask_x, mask_y = _interior_face_masks(grid)

    # Normal strain rates at cell centres.
    u_x = np.diff(u, axis=0) / hx
    w_y = np.diff(w, axis=1) / hy

    # Engineering shear rate u_y + w_x at interior vertices (i = 1..nx-1, j = 1..ny-1).
    shear = np.diff(u[1:-1, :], axis=1) / hy + np.diff(w[:, 1:-1], axis=0) / hx

    div_x = np.zeros(grid.x_face_shape)
    div_y = np.zeros(grid.y_face_shape)

    # x-faces (i, j) with i = 1..nx-1 and j = 1..ny-2 see vertices j and j + 1.
    div_x[1:-1, 1:-1] = 2.0 * np.diff(u_x, axis=0)[:, 1:-1] / hx + np.diff(shear, axis=1) / hy
    # y-faces (i, j) with i = 1..nx-2 and j = 1..ny-1 see vertices i and i + 1.
    div_y[1:-1, 1:-1] = 2.0 * np.diff(w_y, axis=1)[1:-1, :] / hy + np.diff(shear, axis=0) / hx

    return FaceField(grid, mu * div_x, mu * div_y, flagged=(~mask_x, ~mask_y))
