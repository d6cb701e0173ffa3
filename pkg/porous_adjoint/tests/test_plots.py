import logging

import numpy as np

from porous_adjoint.design import Scenario, channel_problem_ab, optimize
from porous_adjoint.field_plots import plot_design, plot_sensitivity, plot_solution
from porous_adjoint.grid import CellField, make_grid
from porous_adjoint.plot_helper import PlotHelper

logger = logging.getLogger(__name__)


def test_plot_helper_creates_directory(tmp_path):

    plot_helper = PlotHelper(output_path=str(tmp_path / "figures" / "run_"))

    assert (tmp_path / "figures").is_dir()
    assert plot_helper.output_file("solution") == str(tmp_path / "figures" / "run_solution.png")


def test_plot_solution(tmp_path):

    plot_helper = PlotHelper(output_path=f"{tmp_path}/")
    solution = channel_problem_ab(make_grid(6, 4)).solve()

    plot_solution(solution, plot_helper)
    assert (tmp_path / "solution.png").exists()


def test_plot_sensitivity_of_zero_field(tmp_path):

    plot_helper = PlotHelper(output_path=f"{tmp_path}/", output_format="pdf")

    plot_sensitivity(CellField(make_grid(3, 3), 0.0), plot_helper, name="zero")
    assert (tmp_path / "zero.pdf").exists()


def test_plot_design(tmp_path):

    plot_helper = PlotHelper(output_path=f"{tmp_path}/")
    state = optimize(channel_problem_ab(make_grid(4, 4)), Scenario(bound="low"), max_iters=5)

    fig = plot_design(state, plot_helper)
    assert (tmp_path / "design.png").exists()
    assert len(fig.axes) == 3
    assert np.isfinite(state.objective_history).all()
