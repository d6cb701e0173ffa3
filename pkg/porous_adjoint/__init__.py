__name__ = "porous_adjoint"

from .__version__ import __version__

from .grid import BoundaryCondition, BoundaryKind, BoundarySpec, CellField, FaceField, StaggeredGrid, make_grid
from .flow_problem import BodyForce, FlowProblem, FlowSolution
from .darcy import DarcyProblem
from .brinkman import BrinkmanProblem
from .classify import BvpClass, ClassTag, classify_bvp
from .adjoint import AdjointSolution, analytical_adjoint, solve_adjoint
from .dissipation import GradientReport, SensitivityField, discrete_gradient, fd_gradient, sensitivity_field
from .design import DesignState, Scenario, optimize, run_table1

__all__ = [
    "BoundaryCondition",
    "BoundaryKind",
    "BoundarySpec",
    "CellField",
    "FaceField",
    "StaggeredGrid",
    "make_grid",
    "BodyForce",
    "FlowProblem",
    "FlowSolution",
    "DarcyProblem",
    "BrinkmanProblem",
    "BvpClass",
    "ClassTag",
    "classify_bvp",
    "AdjointSolution",
    "analytical_adjoint",
    "solve_adjoint",
    "GradientReport",
    "SensitivityField",
    "discrete_gradient",
    "fd_gradient",
    "sensitivity_field",
    "DesignState",
    "Scenario",
    "optimize",
    "run_table1",
]
