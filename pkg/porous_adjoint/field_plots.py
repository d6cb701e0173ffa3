#!/usr/bin/env python
"""
Figures of solved fields, sensitivities and optimizer runs. Every function draws one figure, saves it through a
:py:class:`~porous_adjoint.plot_helper.PlotHelper` and returns it.
"""

import logging
from typing import Optional

import matplotlib
# Figures are only written to files.
matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib import pyplot as plt  # noqa: E402

from porous_adjoint.design import DesignState  # noqa: E402
from porous_adjoint.flow_problem import FlowSolution  # noqa: E402
from porous_adjoint.grid import CellField, cell_velocity  # noqa: E402
from porous_adjoint.plot_helper import PlotHelper  # noqa: E402

logger = logging.getLogger(__name__)


def _cell_image(ax, field: CellField, cmap: str, vmin: Optional[float] = None, vmax: Optional[float] = None):
    grid = field.grid
    # ``imshow`` expects rows along y.
    return ax.imshow(
        field.values.T,
        origin="lower",
        extent=(0.0, grid.lx, 0.0, grid.ly),
        cmap=cmap,
        vmin=vmin,
        vmax=vmax,
        interpolation="nearest",
    )


def _save(fig: matplotlib.figure.Figure, plot_helper: PlotHelper, name: str) -> matplotlib.figure.Figure:
    fig.tight_layout()
    output_file = plot_helper.output_file(name)
    fig.savefig(output_file)
    logger.info(f"Saved file to {output_file}")
    plt.close(fig)
    return fig


def plot_solution(solution: FlowSolution, plot_helper: PlotHelper, name: str = "solution") -> matplotlib.figure.Figure:
    """
    Pressure map with the cell-centred velocity drawn as arrows.

    Generates
    ---------
    The figure is saved as "<output_path><name>.<output_format>".
    """
    grid = solution.grid

    fig = plt.figure(figsize=plot_helper.figsize)
    ax = fig.add_subplot(111)

    image = _cell_image(ax, solution.p, plot_helper.scalar_cmap)
    fig.colorbar(image, ax=ax, label=r"$p$")

    u, w = cell_velocity(grid, solution.v)
    x, y = grid.cell_centers()
    # Thin out the arrows on fine grids.
    stride = max(1, max(grid.nx, grid.ny) // 24)
    ax.quiver(
        x[::stride, ::stride], y[::stride, ::stride], u[::stride, ::stride], w[::stride, ::stride], color="w",
    )

    ax.set_xlabel(r"$x$")
    ax.set_ylabel(r"$y$")
    ax.set_aspect("equal")

    return _save(fig, plot_helper, name)


def plot_sensitivity(density: CellField, plot_helper: PlotHelper, name: str = "sensitivity") -> matplotlib.figure.Figure:
    """
    Sensitivity density on a diverging colormap centred on zero.
    """
    fig = plt.figure(figsize=plot_helper.figsize)
    ax = fig.add_subplot(111)

    limit = float(np.abs(density.values).max())
    if limit == 0.0:
        limit = 1.0
    image = _cell_image(ax, density, plot_helper.signed_cmap, vmin=-limit, vmax=limit)
    fig.colorbar(image, ax=ax, label=r"$\partial \Phi / \partial k$ density")

    ax.set_xlabel(r"$x$")
    ax.set_ylabel(r"$y$")
    ax.set_aspect("equal")

    return _save(fig, plot_helper, name)


def plot_design(state: DesignState, plot_helper: PlotHelper, name: str = "design") -> matplotlib.figure.Figure:
    """
    Final design field next to the objective history of an optimizer run.
    """
    fig = plt.figure(figsize=[2.0 * plot_helper.figsize[0], plot_helper.figsize[1]])

    ax = fig.add_subplot(121)
    image = _cell_image(ax, state.gamma, plot_helper.scalar_cmap, vmin=0.0, vmax=1.0)
    fig.colorbar(image, ax=ax, label=r"$\gamma$")
    ax.set_title(f"{state.scenario.sense}, {state.scenario.bound} bound: {state.verdict.value}")
    ax.set_xlabel(r"$x$")
    ax.set_ylabel(r"$y$")
    ax.set_aspect("equal")

    ax = fig.add_subplot(122)
    ax.plot(np.arange(len(state.objective_history)), state.objective_history, color=plot_helper.colors[0],
            ls=plot_helper.linestyles[0], label="Objective")
    ax.set_xlabel("Accepted iterate")
    ax.set_ylabel(r"$\Phi$")
    plot_helper.adjust_legend(ax, location="best")

    return _save(fig, plot_helper, name)
