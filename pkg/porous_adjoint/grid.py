"""
Staggered (marker-and-cell) grid geometry, the discrete fields living on it and the boundary specification that closes
the flow problems.

Layout
------
Pressure-like scalars live at cell centres and are stored as arrays of shape ``(nx, ny)`` indexed ``[i, j]``.  The
normal velocity lives on faces: x-faces are stored with shape ``(nx + 1, ny)`` (face ``i`` sits at ``x = i * hx``) and
y-faces with shape ``(nx, ny + 1)`` (face ``j`` sits at ``y = j * hy``).  When fields are flattened the C ordering of
these arrays is used, so cell ``(i, j)`` has flat index ``i * ny + j``.

The divergence stencil is outward-positive on the east and north faces, ``(v_E - v_W) / hx + (v_N - v_S) / hy``.
"""

import logging
from enum import Enum
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from porous_adjoint.exceptions import InputError

logger = logging.getLogger(__name__)

LEFT = "left"
RIGHT = "right"
BOTTOM = "bottom"
TOP = "top"
SIDES = (LEFT, RIGHT, BOTTOM, TOP)

ProfileLike = Union[float, Iterable[float], np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


class StaggeredGrid():
    """
    Geometry of a uniform 2D MAC grid on ``[0, lx] x [0, ly]``.
    """

    def __init__(self, nx: int, ny: int, lx: float, ly: float) -> None:
        """
        Parameters
        ----------
        nx, ny : int
            Number of cells in the x and y directions. Both must be at least 1.

        lx, ly : float
            Extents of the domain. Both must be positive.

        Errors
        ------
        InputError
            Raised if any of the dimensions is nonpositive.
        """

        if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
            raise InputError(f"Grid cell counts must be integers of at least 1. Received nx = {nx}, ny = {ny}.")

        if not (np.isfinite(lx) and np.isfinite(ly)) or lx <= 0.0 or ly <= 0.0:
            raise InputError(f"Grid extents must be positive and finite. Received lx = {lx}, ly = {ly}.")

        self._nx = int(nx)
        self._ny = int(ny)
        self._lx = float(lx)
        self._ly = float(ly)

    def __repr__(self) -> str:
        return f"StaggeredGrid(nx={self.nx}, ny={self.ny}, lx={self.lx}, ly={self.ly})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StaggeredGrid):
            return NotImplemented
        return (self.nx, self.ny, self.lx, self.ly) == (other.nx, other.ny, other.lx, other.ly)

    def __hash__(self) -> int:
        return hash((self.nx, self.ny, self.lx, self.ly))

    @property
    def nx(self) -> int:
        """
        int : number of cells in the x direction.
        """
        return self._nx

    @property
    def ny(self) -> int:
        """
        int : number of cells in the y direction.
        """
        return self._ny

    @property
    def lx(self) -> float:
        """
        float : extent of the domain in the x direction.
        """
        return self._lx

    @property
    def ly(self) -> float:
        """
        float : extent of the domain in the y direction.
        """
        return self._ly

    @property
    def hx(self) -> float:
        """
        float : cell spacing in the x direction.
        """
        return self._lx / self._nx

    @property
    def hy(self) -> float:
        """
        float : cell spacing in the y direction.
        """
        return self._ly / self._ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def domain_area(self) -> float:
        return self._lx * self._ly

    @property
    def cell_shape(self) -> Tuple[int, int]:
        return (self._nx, self._ny)

    @property
    def x_face_shape(self) -> Tuple[int, int]:
        return (self._nx + 1, self._ny)

    @property
    def y_face_shape(self) -> Tuple[int, int]:
        return (self._nx, self._ny + 1)

    @property
    def num_cells(self) -> int:
        return self._nx * self._ny

    @property
    def num_x_faces(self) -> int:
        return (self._nx + 1) * self._ny

    @property
    def num_y_faces(self) -> int:
        return self._nx * (self._ny + 1)

    @property
    def num_faces(self) -> int:
        return self.num_x_faces + self.num_y_faces

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Coordinates of the cell centres.

        Returns
        -------
        x, y : :obj:`~numpy.ndarray`
            Arrays of shape ``(nx, ny)``.
        """
        x = (np.arange(self._nx) + 0.5) * self.hx
        y = (np.arange(self._ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def x_face_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        x = np.arange(self._nx + 1) * self.hx
        y = (np.arange(self._ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def y_face_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        x = (np.arange(self._nx) + 0.5) * self.hx
        y = np.arange(self._ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def face_volumes(self) -> "FaceField":
        """
        Control volume attached to each face: a full cell area for interior faces and half of it for boundary faces.
        Sums of a face quantity against these weights are the face analogue of :py:func:`integrate_cells`.
        """
        vx = np.full(self.x_face_shape, self.cell_area)
        vx[[0, -1], :] *= 0.5
        vy = np.full(self.y_face_shape, self.cell_area)
        vy[:, [0, -1]] *= 0.5
        return FaceField(self, vx, vy)

    def side_face_count(self, side: str) -> int:
        """
        Number of boundary faces lying on ``side``.
        """
        return self._ny if side in (LEFT, RIGHT) else self._nx

    def side_face_length(self, side: str) -> float:
        return self.hy if side in (LEFT, RIGHT) else self.hx

    def side_coordinates(self, side: str) -> Tuple[np.ndarray, np.ndarray]:
        """
        Coordinates of the centres of the boundary faces on ``side``, ordered by increasing tangential coordinate.
        """
        _check_side(side)
        if side in (LEFT, RIGHT):
            y = (np.arange(self._ny) + 0.5) * self.hy
            x = np.full_like(y, 0.0 if side == LEFT else self._lx)
        else:
            x = (np.arange(self._nx) + 0.5) * self.hx
            y = np.full_like(x, 0.0 if side == BOTTOM else self._ly)
        return x, y


def make_grid(nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> StaggeredGrid:
    """
    Builds a :py:class:`StaggeredGrid`. See the class for the meaning and validation of the arguments.
    """
    grid = StaggeredGrid(nx, ny, lx, ly)
    logger.debug(f"Created {grid} with hx = {grid.hx}, hy = {grid.hy}.")
    return grid


def side_normal_sign(side: str) -> int:
    """
    Sign of the outward normal along its axis: -1 on the left and bottom sides, +1 on the right and top sides.
    """
    _check_side(side)
    return -1 if side in (LEFT, BOTTOM) else 1


def side_axis(side: str) -> int:
    """
    Axis the outward normal of ``side`` points along (0 for x, 1 for y).
    """
    _check_side(side)
    return 0 if side in (LEFT, RIGHT) else 1


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise InputError(f"Unknown boundary side '{side}'. Expected one of {SIDES}.")


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float, copy=True)
    values.flags.writeable = False
    return values


class CellField():
    """
    One scalar per cell (pressure, permeability, adjoint pressure, sensitivity density, design variable). Values are
    stored with shape ``(nx, ny)`` and are read-only after construction.
    """

    def __init__(self, grid: StaggeredGrid, values: Union[float, np.ndarray]) -> None:
        values = np.asarray(values, dtype=float)

        if values.ndim == 0:
            values = np.full(grid.cell_shape, float(values))
        elif values.ndim == 1 and values.size == grid.num_cells:
            values = values.reshape(grid.cell_shape)

        if values.shape != grid.cell_shape:
            raise InputError(
                f"A cell field on {grid} needs {grid.cell_shape} values. Received an array of shape {values.shape}."
            )

        if not np.all(np.isfinite(values)):
            raise InputError("Cell field values must all be finite.")

        self._grid = grid
        self._values = _frozen(values)

    def __repr__(self) -> str:
        return f"CellField(grid={self._grid}, min={self._values.min():.6g}, max={self._values.max():.6g})"

    @property
    def grid(self) -> StaggeredGrid:
        return self._grid

    @property
    def values(self) -> np.ndarray:
        """
        :obj:`~numpy.ndarray` : read-only array of shape ``(nx, ny)``.
        """
        return self._values

    @property
    def flat(self) -> np.ndarray:
        return self._values.ravel()

    @classmethod
    def from_function(cls, grid: StaggeredGrid, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "CellField":
        """
        Samples ``func(x, y)`` at the cell centres.
        """
        x, y = grid.cell_centers()
        return cls(grid, np.broadcast_to(func(x, y), grid.cell_shape))

    def mean(self) -> float:
        return float(self._values.mean())


class FaceField():
    """
    One normal-component scalar per face. ``x_values`` has shape ``(nx + 1, ny)`` and ``y_values`` has shape
    ``(nx, ny + 1)``.

    Faces on which a quantity is not defined (for example the pressure gradient on a velocity boundary) hold zero
    and are marked in :py:attr:`flagged`.
    """

    def __init__(
        self,
        grid: StaggeredGrid,
        x_values: Union[float, np.ndarray],
        y_values: Union[float, np.ndarray],
        flagged: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    ) -> None:

        x_values = np.asarray(x_values, dtype=float)
        y_values = np.asarray(y_values, dtype=float)

        if x_values.ndim == 0:
            x_values = np.full(grid.x_face_shape, float(x_values))
        if y_values.ndim == 0:
            y_values = np.full(grid.y_face_shape, float(y_values))

        if x_values.shape != grid.x_face_shape or y_values.shape != grid.y_face_shape:
            raise InputError(
                f"A face field on {grid} needs x-values of shape {grid.x_face_shape} and y-values of shape "
                f"{grid.y_face_shape}. Received {x_values.shape} and {y_values.shape}."
            )

        if not (np.all(np.isfinite(x_values)) and np.all(np.isfinite(y_values))):
            raise InputError("Face field values must all be finite.")

        if flagged is None:
            flagged = (np.zeros(grid.x_face_shape, dtype=bool), np.zeros(grid.y_face_shape, dtype=bool))

        self._grid = grid
        self._x_values = _frozen(x_values)
        self._y_values = _frozen(y_values)
        self._flagged = (np.asarray(flagged[0], dtype=bool), np.asarray(flagged[1], dtype=bool))

    def __repr__(self) -> str:
        return f"FaceField(grid={self._grid}, max_abs={self.max_abs():.6g})"

    @property
    def grid(self) -> StaggeredGrid:
        return self._grid

    @property
    def x_values(self) -> np.ndarray:
        return self._x_values

    @property
    def y_values(self) -> np.ndarray:
        return self._y_values

    @property
    def flagged(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        tuple of :obj:`~numpy.ndarray` : boolean masks (x-faces, y-faces) of faces whose value was not computed.
        """
        return self._flagged

    @property
    def flat(self) -> np.ndarray:
        """
        :obj:`~numpy.ndarray` : x-face values followed by y-face values, each in C order.
        """
        return np.concatenate([self._x_values.ravel(), self._y_values.ravel()])

    @classmethod
    def from_flat(cls, grid: StaggeredGrid, values: np.ndarray) -> "FaceField":
        values = np.asarray(values, dtype=float)
        if values.size != grid.num_faces:
            raise InputError(f"Expected {grid.num_faces} face values for {grid}, received {values.size}.")
        split = grid.num_x_faces
        return cls(grid, values[:split].reshape(grid.x_face_shape), values[split:].reshape(grid.y_face_shape))

    @classmethod
    def zeros(cls, grid: StaggeredGrid) -> "FaceField":
        return cls(grid, 0.0, 0.0)

    @classmethod
    def from_function(
        cls,
        grid: StaggeredGrid,
        func_x: Callable[[np.ndarray, np.ndarray], np.ndarray],
        func_y: Callable[[np.ndarray, np.ndarray], np.ndarray],
    ) -> "FaceField":
        """
        Samples the x component ``func_x(x, y)`` at x-face centres and the y component ``func_y(x, y)`` at y-face
        centres.
        """
        xx, xy = grid.x_face_centers()
        yx, yy = grid.y_face_centers()
        return cls(
            grid,
            np.broadcast_to(func_x(xx, xy), grid.x_face_shape),
            np.broadcast_to(func_y(yx, yy), grid.y_face_shape),
        )

    def max_abs(self) -> float:
        return float(max(np.abs(self._x_values).max(), np.abs(self._y_values).max()))


class BoundaryKind(str, Enum):
    """
    Boundary condition kinds. ``NORMAL_VELOCITY`` prescribes the outward normal velocity ``v.n`` (Darcy);
    ``FULL_VELOCITY`` prescribes both Cartesian velocity components; ``PRESSURE`` prescribes ``p`` (plus a tangential
    velocity under Darcy-Brinkman); ``TRACTION`` prescribes the Cartesian traction vector.
    """

    PRESSURE = "pressure"
    NORMAL_VELOCITY = "normal_velocity"
    FULL_VELOCITY = "full_velocity"
    TRACTION = "traction"


VECTOR_KINDS = (BoundaryKind.FULL_VELOCITY, BoundaryKind.TRACTION)
PRESSURE_LIKE_KINDS = (BoundaryKind.PRESSURE, BoundaryKind.TRACTION)


class BoundaryCondition():
    """
    Boundary condition on one side of the domain.

    A profile is either a constant, an array tabulated per boundary face (ordered by increasing tangential coordinate)
    or a callable ``f(x, y)`` evaluated at the face centres. Vector kinds take 2-vectors: a pair of constants, an
    array of shape ``(n, 2)`` or a callable returning ``(fx, fy)``.
    """

    def __init__(self, kind: Union[str, BoundaryKind], value: ProfileLike = 0.0, tangential: ProfileLike = 0.0) -> None:
        """
        Parameters
        ----------
        kind : str or :py:class:`BoundaryKind`
            The kind of condition.

        value : profile, default 0.0
            Pressure, outward normal velocity, Cartesian velocity or Cartesian traction depending on ``kind``.

        tangential : profile, default 0.0
            Tangential (Cartesian) velocity component prescribed alongside ``PRESSURE`` in Darcy-Brinkman problems.
            Ignored by the other kinds.
        """

        try:
            self._kind = BoundaryKind(kind)
        except ValueError:
            raise InputError(
                f"Unknown boundary condition kind '{kind}'. Expected one of {[k.value for k in BoundaryKind]}."
            )

        self._value = value
        self._tangential = tangential

    def __repr__(self) -> str:
        return f"BoundaryCondition(kind={self._kind.value}, value={self._value!r})"

    @property
    def kind(self) -> BoundaryKind:
        return self._kind

    @property
    def is_vector(self) -> bool:
        return self._kind in VECTOR_KINDS

    @property
    def raw_value(self) -> ProfileLike:
        return self._value

    @property
    def raw_tangential(self) -> ProfileLike:
        return self._tangential

    def values(self, grid: StaggeredGrid, side: str) -> np.ndarray:
        """
        Resolves the value profile on the boundary faces of ``side``.

        Returns
        -------
        values : :obj:`~numpy.ndarray`
            Shape ``(n,)`` for scalar kinds and ``(n, 2)`` for vector kinds, where ``n`` is the number of faces on
            ``side``.
        """
        return _resolve_profile(self._value, grid, side, vector=self.is_vector)

    def tangential_values(self, grid: StaggeredGrid, side: str) -> np.ndarray:
        return _resolve_profile(self._tangential, grid, side, vector=False)


def _resolve_profile(profile: ProfileLike, grid: StaggeredGrid, side: str, vector: bool) -> np.ndarray:

    n = grid.side_face_count(side)
    shape = (n, 2) if vector else (n,)

    if callable(profile):
        x, y = grid.side_coordinates(side)
        result = profile(x, y)
        if vector:
            result = np.stack([np.broadcast_to(result[0], (n,)), np.broadcast_to(result[1], (n,))], axis=1)
        values = np.broadcast_to(np.asarray(result, dtype=float), shape)
    else:
        values = np.asarray(profile, dtype=float)
        try:
            values = np.broadcast_to(values, shape)
        except ValueError:
            raise InputError(
                f"Boundary profile on the {side} side must be a constant or tabulated with shape {shape}. "
                f"Received shape {values.shape}."
            )

    if not np.all(np.isfinite(values)):
        raise InputError(f"Boundary profile on the {side} side contains non-finite values.")

    return np.array(values, dtype=float)


class BoundarySpec():
    """
    Assignment of one :py:class:`BoundaryCondition` to each of the four sides, so every boundary face carries
    exactly one kind.
    """

    def __init__(self, conditions: Dict[str, BoundaryCondition]) -> None:

        missing = [side for side in SIDES if side not in conditions]
        unknown = [side for side in conditions if side not in SIDES]

        if missing or unknown:
            raise InputError(
                f"A boundary specification needs exactly the sides {SIDES}. Missing: {missing}, unknown: {unknown}."
            )

        for side, condition in conditions.items():
            if not isinstance(condition, BoundaryCondition):
                raise InputError(f"The {side} boundary must be a BoundaryCondition, received {type(condition)}.")

        self._conditions = dict(conditions)

    def __repr__(self) -> str:
        inner = ", ".join(f"{side}={self._conditions[side].kind.value}" for side in SIDES)
        return f"BoundarySpec({inner})"

    def __getitem__(self, side: str) -> BoundaryCondition:
        _check_side(side)
        return self._conditions[side]

    def items(self):
        return ((side, self._conditions[side]) for side in SIDES)

    def kind(self, side: str) -> BoundaryKind:
        return self[side].kind

    def sides_of_kind(self, *kinds: BoundaryKind) -> Tuple[str, ...]:
        return tuple(side for side in SIDES if self._conditions[side].kind in kinds)

    @property
    def pressure_sides(self) -> Tuple[str, ...]:
        """
        tuple of str : sides belonging to the pressure/traction part of the boundary.
        """
        return self.sides_of_kind(*PRESSURE_LIKE_KINDS)

    @property
    def velocity_sides(self) -> Tuple[str, ...]:
        return self.sides_of_kind(BoundaryKind.NORMAL_VELOCITY, BoundaryKind.FULL_VELOCITY)

    @property
    def has_pressure_boundary(self) -> bool:
        return len(self.pressure_sides) > 0

    def replace(self, **conditions: BoundaryCondition) -> "BoundarySpec":
        """
        Returns a new specification with the given sides replaced.
        """
        updated = dict(self._conditions)
        updated.update(conditions)
        return BoundarySpec(updated)

    def outward_normal_velocity(self, grid: StaggeredGrid, side: str) -> np.ndarray:
        """
        Prescribed outward normal velocity ``v.n`` on the faces of a velocity side.
        """
        condition = self[side]
        if condition.kind == BoundaryKind.NORMAL_VELOCITY:
            return condition.values(grid, side)
        if condition.kind == BoundaryKind.FULL_VELOCITY:
            return side_normal_sign(side) * condition.values(grid, side)[:, side_axis(side)]
        raise InputError(f"The {side} side is a {condition.kind.value} boundary and prescribes no velocity.")


def uniform_boundary(**conditions: BoundaryCondition) -> BoundarySpec:
    return BoundarySpec(conditions)


def boundary_face_slices(grid: StaggeredGrid, side: str) -> Tuple[int, Tuple]:
    """
    Locates the boundary faces of ``side``.

    Returns
    -------
    axis : int
        0 if the faces are x-faces, 1 if they are y-faces.

    index : tuple
        Index into the corresponding face array selecting the faces in order of increasing tangential coordinate.
    """
    _check_side(side)
    if side == LEFT:
        return 0, (0, slice(None))
    if side == RIGHT:
        return 0, (grid.nx, slice(None))
    if side == BOTTOM:
        return 1, (slice(None), 0)
    return 1, (slice(None), grid.ny)


def boundary_face_indices(grid: StaggeredGrid, side: str) -> np.ndarray:
    """
    Flat indices (in the :py:attr:`FaceField.flat` layout) of the boundary faces of ``side``.
    """
    axis, index = boundary_face_slices(grid, side)
    if axis == 0:
        flat = np.arange(grid.num_x_faces).reshape(grid.x_face_shape)
    else:
        flat = grid.num_x_faces + np.arange(grid.num_y_faces).reshape(grid.y_face_shape)
    return flat[index]


def _check_grid(grid: StaggeredGrid, *fields) -> None:
    for field in fields:
        if field.grid != grid:
            raise InputError(f"Field defined on {field.grid} does not match {grid}.")


def divergence_matrix(grid: StaggeredGrid) -> sp.csr_matrix:
    """
    Sparse matrix of shape ``(num_cells, num_faces)`` mapping flat face values to the cell divergence.
    """
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy

    ex = sp.diags([-np.ones(nx), np.ones(nx)], [0, 1], shape=(nx, nx + 1)) / hx
    ey = sp.diags([-np.ones(ny), np.ones(ny)], [0, 1], shape=(ny, ny + 1)) / hy

    dx = sp.kron(ex, sp.identity(ny))
    dy = sp.kron(sp.identity(nx), ey)
    return sp.hstack([dx, dy]).tocsr()


def cell_average_matrices(grid: StaggeredGrid) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """
    Face-to-centre averaging operators.

    Returns
    -------
    avg_x : :obj:`~scipy.sparse.csr_matrix`
        Shape ``(num_cells, num_faces)``; the arithmetic mean of the west and east faces of each cell.

    avg_y : :obj:`~scipy.sparse.csr_matrix`
        Shape ``(num_cells, num_faces)``; the arithmetic mean of the south and north faces of each cell.
    """
    nx, ny = grid.nx, grid.ny

    mx = sp.diags([0.5 * np.ones(nx), 0.5 * np.ones(nx)], [0, 1], shape=(nx, nx + 1))
    my = sp.diags([0.5 * np.ones(ny), 0.5 * np.ones(ny)], [0, 1], shape=(ny, ny + 1))

    zero_x = sp.csr_matrix((grid.num_cells, grid.num_y_faces))
    zero_y = sp.csr_matrix((grid.num_cells, grid.num_x_faces))

    avg_x = sp.hstack([sp.kron(mx, sp.identity(ny)), zero_x]).tocsr()
    avg_y = sp.hstack([zero_y, sp.kron(sp.identity(nx), my)]).tocsr()
    return avg_x, avg_y


def cell_velocity(grid: StaggeredGrid, v: FaceField) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cell-centred velocity components obtained by averaging each component over the two faces normal to it.
    """
    _check_grid(grid, v)
    u = 0.5 * (v.x_values[:-1, :] + v.x_values[1:, :])
    w = 0.5 * (v.y_values[:, :-1] + v.y_values[:, 1:])
    return u, w


def divergence(grid: StaggeredGrid, v: FaceField) -> CellField:
    """
    Discrete divergence ``(v_E - v_W) / hx + (v_N - v_S) / hy`` of a face field.

    Errors
    ------
    InputError
        Raised if ``v`` lives on a different grid.
    """
    _check_grid(grid, v)
    div = np.diff(v.x_values, axis=0) / grid.hx + np.diff(v.y_values, axis=1) / grid.hy
    return CellField(grid, div)


def gradient(grid: StaggeredGrid, p: CellField, bc: BoundarySpec) -> FaceField:
    """
    Face-normal gradient of a cell field.

    Interior faces use the two-point difference across the face. Boundary faces on a ``PRESSURE`` side use the
    one-sided difference to the prescribed boundary value at distance ``h / 2``. Faces on any other side carry no
    gradient; they are set to zero and marked in :py:attr:`FaceField.flagged`.
    """
    _check_grid(grid, p)
    values = p.values

    gx = np.zeros(grid.x_face_shape)
    gy = np.zeros(grid.y_face_shape)
    gx[1:-1, :] = np.diff(values, axis=0) / grid.hx
    gy[:, 1:-1] = np.diff(values, axis=1) / grid.hy

    flag_x = np.zeros(grid.x_face_shape, dtype=bool)
    flag_y = np.zeros(grid.y_face_shape, dtype=bool)

    for side, condition in bc.items():
        axis, index = boundary_face_slices(grid, side)
        h = grid.hx if axis == 0 else grid.hy
        target, flags = (gx, flag_x) if axis == 0 else (gy, flag_y)

        if condition.kind != BoundaryKind.PRESSURE:
            flags[index] = True
            logger.debug(f"Gradient not computed on the {side} side ({condition.kind.value} boundary).")
            continue

        boundary = condition.values(grid, side)
        if side == LEFT:
            adjacent = values[0, :]
        elif side == RIGHT:
            adjacent = values[-1, :]
        elif side == BOTTOM:
            adjacent = values[:, 0]
        else:
            adjacent = values[:, -1]

        # Outward sign turns (adjacent - boundary) into a difference along the axis.
        target[index] = -side_normal_sign(side) * (adjacent - boundary) / (0.5 * h)

    return FaceField(grid, gx, gy, flagged=(flag_x, flag_y))


def integrate_cells(grid: StaggeredGrid, f: CellField) -> float:
    """
    Midpoint-rule integral ``sum(f_c) * hx * hy``.
    """
    _check_grid(grid, f)
    return float(np.sum(f.values) * grid.cell_area)


def boundary_flux(grid: StaggeredGrid, v: FaceField) -> float:
    """
    Signed outward flux of ``v`` through the boundary, ``sum(v.n * face length)``.
    """
    _check_grid(grid, v)
    flux_x = (v.x_values[-1, :].sum() - v.x_values[0, :].sum()) * grid.hy
    flux_y = (v.y_values[:, -1].sum() - v.y_values[:, 0].sum()) * grid.hx
    return float(flux_x + flux_y)


def face_permeability(grid: StaggeredGrid, k: CellField) -> FaceField:
    """
    Face permeability: harmonic mean of the two adjacent cells on interior faces, the adjacent cell value on boundary
    faces.

    Errors
    ------
    InputError
        Raised if any permeability is nonpositive.
    """
    _check_grid(grid, k)
    values = k.values
    if np.any(values <= 0.0):
        raise InputError(f"Permeability must be positive everywhere. Minimum received value is {values.min()}.")

    kx = np.empty(grid.x_face_shape)
    kx[1:-1, :] = 2.0 / (1.0 / values[:-1, :] + 1.0 / values[1:, :])
    kx[0, :] = values[0, :]
    kx[-1, :] = values[-1, :]

    ky = np.empty(grid.y_face_shape)
    ky[:, 1:-1] = 2.0 / (1.0 / values[:, :-1] + 1.0 / values[:, 1:])
    ky[:, 0] = values[:, 0]
    ky[:, -1] = values[:, -1]

    return FaceField(grid, kx, ky)


def face_permeability_jacobian(grid: StaggeredGrid, k: CellField) -> sp.csr_matrix:
    """
    Derivative of :py:func:`face_permeability` with respect to the cell permeabilities, as a sparse matrix of shape
    ``(num_faces, num_cells)``. For a harmonic mean ``2 k1 k2 / (k1 + k2)`` the derivative with respect to ``k1`` is
    ``2 k2**2 / (k1 + k2)**2``.
    """
    _check_grid(grid, k)
    values = k.values
    nx, ny = grid.nx, grid.ny
    cell = np.arange(grid.num_cells).reshape(grid.cell_shape)
    xface = np.arange(grid.num_x_faces).reshape(grid.x_face_shape)
    yface = grid.num_x_faces + np.arange(grid.num_y_faces).reshape(grid.y_face_shape)

    rows, cols, data = [], [], []

    def add(face_idx, cell_idx, vals):
        rows.append(np.ravel(face_idx))
        cols.append(np.ravel(cell_idx))
        data.append(np.ravel(vals))

    # x-faces
    kw, ke = values[:-1, :], values[1:, :]
    denom = (kw + ke) ** 2
    add(xface[1:nx, :], cell[:-1, :], 2.0 * ke ** 2 / denom)
    add(xface[1:nx, :], cell[1:, :], 2.0 * kw ** 2 / denom)
    add(xface[0, :], cell[0, :], np.ones(ny))
    add(xface[nx, :], cell[-1, :], np.ones(ny))

    # y-faces
    ks, kn = values[:, :-1], values[:, 1:]
    denom = (ks + kn) ** 2
    add(yface[:, 1:ny], cell[:, :-1], 2.0 * kn ** 2 / denom)
    add(yface[:, 1:ny], cell[:, 1:], 2.0 * ks ** 2 / denom)
    add(yface[:, 0], cell[:, 0], np.ones(nx))
    add(yface[:, ny], cell[:, -1], np.ones(nx))

    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.num_faces, grid.num_cells),
    )
