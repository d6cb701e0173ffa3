"""
Writers for solved fields.

Three formats are supported:

* ``csv``: one file per field. Cell fields have the header ``i,j,x,y,value``; face fields are averaged to the cell
  centres and written with the header ``i,j,x,y,component,value``. Values carry 17 significant digits so a
  re-read reproduces them exactly.
* ``vtk``: one legacy ASCII ``STRUCTURED_POINTS`` file whose points are the cell centres; cell fields become
  ``SCALARS`` and face fields ``VECTORS``.
* ``hdf5``: one file with a dataset per field and the grid geometry as attributes.
"""

import json
import logging
import os
from typing import Any, Dict, List, Mapping, Union

import h5py
import numpy as np

from porous_adjoint.exceptions import InputError
from porous_adjoint.grid import CellField, FaceField, StaggeredGrid, cell_velocity

logger = logging.getLogger(__name__)

FIELD_FORMATS = ("csv", "vtk", "hdf5")
VTK_HEADER = "# vtk DataFile Version 3.0"
VALUE_FORMAT = "{:.16e}"
CSV_FORMAT = "%.16e"

Field = Union[CellField, FaceField]


def _cell_vectors(field: FaceField) -> np.ndarray:
    u, w = cell_velocity(field.grid, field)
    return np.stack([u, w], axis=-1)


def _common_grid(fields: Mapping[str, Field]) -> StaggeredGrid:
    grids = {field.grid for field in fields.values()}
    if len(grids) != 1:
        raise InputError(f"All fields written together must share one grid, found {len(grids)} grids.")
    return grids.pop()


def _prepare_directory(out_dir: str) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as error:
        raise InputError(f"Cannot create the output directory '{out_dir}': {error}")


def _cell_indices(grid: StaggeredGrid) -> np.ndarray:
    i, j = np.meshgrid(np.arange(grid.nx), np.arange(grid.ny), indexing="ij")
    return np.column_stack([i.ravel(), j.ravel()])


def write_cell_csv(path: str, field: CellField) -> None:
    grid = field.grid
    x, y = grid.cell_centers()
    table = np.column_stack([_cell_indices(grid), x.ravel(), y.ravel(), field.values.ravel()])
    np.savetxt(path, table, delimiter=",", header="i,j,x,y,value", comments="", fmt=["%d", "%d"] + 3 * [CSV_FORMAT])


def write_face_csv(path: str, field: FaceField) -> None:
    grid = field.grid
    x, y = grid.cell_centers()
    # Two rows per cell, component running fastest.
    table = np.column_stack([
        np.repeat(_cell_indices(grid), 2, axis=0),
        np.repeat(x.ravel(), 2),
        np.repeat(y.ravel(), 2),
        np.tile([0, 1], grid.num_cells),
        _cell_vectors(field).ravel(),
    ])
    np.savetxt(
        path,
        table,
        delimiter=",",
        header="i,j,x,y,component,value",
        comments="",
        fmt=["%d", "%d", CSV_FORMAT, CSV_FORMAT, "%d", CSV_FORMAT],
    )


def read_cell_csv(path: str, grid: StaggeredGrid) -> np.ndarray:
    """
    Reads a cell field written by :py:func:`write_cell_csv` into an array of shape ``(nx, ny)``.

    Errors
    ------
    InputError
        Raised when the file does not hold exactly one value per cell of ``grid``.
    """
    data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
    if data.shape[1] != 5 or data.shape[0] != grid.num_cells:
        raise InputError(
            f"'{path}' does not hold a cell field on {grid}: found {data.shape[0]} rows of {data.shape[1]} columns."
        )

    values = np.full(grid.cell_shape, np.nan)
    values[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 4]
    if np.any(np.isnan(values)):
        raise InputError(f"'{path}' does not cover every cell of {grid}.")
    return values


def read_face_csv(path: str, grid: StaggeredGrid) -> np.ndarray:
    """
    Reads the cell-centred vectors written by :py:func:`write_face_csv`, shape ``(nx, ny, 2)``.
    """
    data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
    if data.shape[1] != 6 or data.shape[0] != 2 * grid.num_cells:
        raise InputError(
            f"'{path}' does not hold a vector field on {grid}: found {data.shape[0]} rows of {data.shape[1]} columns."
        )

    values = np.full(grid.cell_shape + (2,), np.nan)
    values[data[:, 0].astype(int), data[:, 1].astype(int), data[:, 4].astype(int)] = data[:, 5]
    return values


def write_vtk(path: str, fields: Mapping[str, Field], title: str = "porous_adjoint fields") -> None:
    """
    Writes all ``fields`` into one legacy ASCII VTK file. Points are the cell centres, ordered with ``x`` running
    fastest.
    """
    grid = _common_grid(fields)
    lines = [
        VTK_HEADER,
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {grid.nx} {grid.ny} 1",
        f"ORIGIN {VALUE_FORMAT.format(0.5 * grid.hx)} {VALUE_FORMAT.format(0.5 * grid.hy)} 0",
        f"SPACING {VALUE_FORMAT.format(grid.hx)} {VALUE_FORMAT.format(grid.hy)} 1",
        f"POINT_DATA {grid.num_cells}",
    ]

    for name, field in fields.items():
        if isinstance(field, CellField):
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(VALUE_FORMAT.format(value) for value in field.values.T.ravel())
        else:
            vectors = _cell_vectors(field)
            lines.append(f"VECTORS {name} double")
            for u, w in zip(vectors[..., 0].T.ravel(), vectors[..., 1].T.ravel()):
                lines.append(f"{VALUE_FORMAT.format(u)} {VALUE_FORMAT.format(w)} 0")

    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def write_hdf5(path: str, fields: Mapping[str, Field]) -> None:
    """
    Writes each cell field as an ``(nx, ny)`` dataset and each face field as its ``x`` and ``y`` face datasets in a
    group of the field's name.
    """
    grid = _common_grid(fields)
    with h5py.File(path, "w") as f:
        for attribute in ("nx", "ny", "lx", "ly", "hx", "hy"):
            f.attrs[attribute] = getattr(grid, attribute)

        for name, field in fields.items():
            if isinstance(field, CellField):
                f.create_dataset(name, data=field.values)
            else:
                group = f.create_group(name)
                group.create_dataset("x_faces", data=field.x_values)
                group.create_dataset("y_faces", data=field.y_values)
                group.create_dataset("cell_centred", data=_cell_vectors(field))


def write_fields(out_dir: str, fields: Mapping[str, Field], fmt: str = "csv", prefix: str = "") -> List[str]:
    """
    Writes ``fields`` into ``out_dir``.

    Parameters
    ----------
    out_dir : str
        Output directory, created if missing.

    fields : dict [str, :py:class:`~porous_adjoint.grid.CellField` or :py:class:`~porous_adjoint.grid.FaceField`]
        Fields keyed by name, all on the same grid.

    fmt : str, default "csv"
        One of ``"csv"``, ``"vtk"`` or ``"hdf5"``.

    prefix : str, default ""
        Prepended to every file name.

    Returns
    -------
    paths : list of str
        The files written.

    Errors
    ------
    InputError
        Raised for an unknown format, fields on different grids or an unwritable location.
    """
    if fmt not in FIELD_FORMATS:
        raise InputError(f"Unknown field format '{fmt}'. Expected one of {FIELD_FORMATS}.")
    if not fields:
        return []

    _common_grid(fields)
    _prepare_directory(out_dir)

    paths = []
    try:
        if fmt == "csv":
            for name, field in fields.items():
                path = os.path.join(out_dir, f"{prefix}{name}.csv")
                if isinstance(field, CellField):
                    write_cell_csv(path, field)
                else:
                    write_face_csv(path, field)
                paths.append(path)
        elif fmt == "vtk":
            path = os.path.join(out_dir, f"{prefix}fields.vtk")
            write_vtk(path, fields)
            paths.append(path)
        else:
            path = os.path.join(out_dir, f"{prefix}fields.h5")
            write_hdf5(path, fields)
            paths.append(path)
    except OSError as error:
        raise InputError(f"Cannot write fields to '{out_dir}': {error}")

    logger.info(f"Wrote {len(fields)} fields as {fmt} to {out_dir}.")
    return paths


def write_solution(out_dir: str, solution, fmt: str = "csv", prefix: str = "") -> List[str]:
    """
    Writes the ``pressure`` and ``velocity`` of a :py:class:`~porous_adjoint.flow_problem.FlowSolution`.
    """
    return write_fields(out_dir, {"pressure": solution.p, "velocity": solution.v}, fmt=fmt, prefix=prefix)


def write_json(path: str, data: Dict[str, Any]) -> str:
    """
    Writes ``data`` as indented JSON with sorted keys.
    """
    directory = os.path.dirname(path)
    if directory:
        _prepare_directory(directory)
    try:
        with open(path, "w") as f:
            json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")
    except OSError as error:
        raise InputError(f"Cannot write '{path}': {error}")
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
