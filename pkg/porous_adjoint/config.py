"""
JSON run configurations.

A configuration is validated against :py:data:`RUN_CONFIG_SCHEMA` with ``jsonschema``; every violation is collected
with its dotted path before anything is solved. :py:func:`build_problem` turns a validated
:py:class:`RunConfig` into a :py:class:`~porous_adjoint.flow_problem.FlowProblem`.
"""

import copy
import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from jsonschema import Draft7Validator

from porous_adjoint.brinkman import FORM_MAIN, FORM_TRACTION, BrinkmanProblem
from porous_adjoint.darcy import DarcyProblem
from porous_adjoint.default_run_arguments import (
    default_body_force,
    default_design,
    default_fluid,
    default_grid,
    default_solver,
    default_verify,
)
from porous_adjoint.design import Scenario
from porous_adjoint.exceptions import ConfigError, InputError
from porous_adjoint.flow_problem import BodyForce, FlowProblem
from porous_adjoint.grid import (
    SIDES,
    BoundaryCondition,
    BoundarySpec,
    CellField,
    FaceField,
    StaggeredGrid,
    make_grid,
)
from porous_adjoint.linear_solvers import SolverSettings

logger = logging.getLogger(__name__)

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_NUMBER_OR_LIST = {
    "type": ["number", "array"],
    "items": {"type": ["number", "array"], "items": {"type": "number"}},
}
_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

_SIDE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["pressure", "normal_velocity", "full_velocity", "traction"]},
        "value": _NUMBER_OR_LIST,
        "tangential": _NUMBER_OR_LIST,
    },
}

RUN_CONFIG_SCHEMA: Dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "grid", "permeability", "boundaries"],
    "properties": {
        "model": {"enum": ["darcy", "brinkman", "brinkman_traction"]},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["nx", "ny"],
            "properties": {
                "nx": {"type": "integer", "minimum": 1},
                "ny": {"type": "integer", "minimum": 1},
                "lx": _POSITIVE,
                "ly": _POSITIVE,
            },
        },
        "fluid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"mu": _POSITIVE, "rho": _POSITIVE},
        },
        "permeability": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {
                "uniform": _POSITIVE,
                "values": {"type": "array", "minItems": 1, "items": {"type": "array", "items": _POSITIVE}},
                "file": {"type": "string", "minLength": 1},
            },
        },
        "body_force": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["none", "vector", "potential"]},
                "value": _PAIR,
                "gradient": _PAIR,
                "offset": {"type": "number"},
            },
        },
        "boundaries": {
            "type": "object",
            "additionalProperties": False,
            "required": list(SIDES),
            "properties": {side: _SIDE_SCHEMA for side in SIDES},
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tolerance": _POSITIVE,
                "max_iterations": {"type": "integer", "minimum": 1},
                "method": {"enum": ["auto", "direct", "iterative"]},
            },
        },
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sense": {"enum": ["maximize", "minimize"]},
                "bound": {"enum": ["high", "low"]},
                "volume_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "k_low": _POSITIVE,
                "k_high": _POSITIVE,
                "q": _POSITIVE,
                "max_iters": {"type": "integer", "minimum": 1},
                "move_limit": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "filter": {"type": "boolean"},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "instances": {"type": "integer", "minimum": 1},
                "nx": {"type": "integer", "minimum": 2},
                "seed": {"type": ["integer", "null"], "minimum": 0},
                "models": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"enum": ["darcy", "brinkman", "brinkman_traction"]},
                },
            },
        },
    },
}


def _dotted(path) -> str:
    return ".".join(str(part) for part in path)


@dataclass
class RunConfig:
    """
    A validated run configuration with every optional block filled with its defaults.
    """

    model: str
    grid: Dict[str, Any]
    fluid: Dict[str, float]
    permeability: Dict[str, Any]
    body_force: Dict[str, Any]
    boundaries: Dict[str, Dict[str, Any]]
    solver: Dict[str, Any]
    design: Dict[str, Any]
    verify: Dict[str, Any]
    base_dir: str = "."

    def make_grid(self) -> StaggeredGrid:
        return make_grid(self.grid["nx"], self.grid["ny"], self.grid["lx"], self.grid["ly"])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "grid": dict(self.grid),
            "fluid": dict(self.fluid),
            "permeability": dict(self.permeability),
            "body_force": dict(self.body_force),
            "boundaries": copy.deepcopy(self.boundaries),
            "solver": dict(self.solver),
            "design": dict(self.design),
            "verify": dict(self.verify),
        }


def _semantic_violations(data: Dict[str, Any]) -> List[Tuple[str, str]]:
    """
    Checks that need more than one field at a time.
    """
    violations = []

    nx, ny = data["grid"]["nx"], data["grid"]["ny"]
    values = data["permeability"].get("values")
    if values is not None:
        if len(values) != nx or any(len(row) != ny for row in values):
            violations.append(("permeability.values", f"expected {nx} rows of {ny} values, matching the grid"))

    body_force = data.get("body_force", {})
    kind = body_force.get("type")
    if kind == "vector" and "value" not in body_force:
        violations.append(("body_force.value", "a vector body force needs 'value': [bx, by]"))
    if kind == "potential" and "gradient" not in body_force:
        violations.append(("body_force.gradient", "a potential body force needs 'gradient': [gx, gy]"))

    design = data.get("design", {})
    k_low = design.get("k_low", default_design["k_low"])
    k_high = design.get("k_high", default_design["k_high"])
    if not k_low < k_high:
        violations.append(("design.k_low", f"k_low ({k_low}) must be smaller than k_high ({k_high})"))

    model = data["model"]
    allowed = {
        "darcy": ("pressure", "normal_velocity"),
        "brinkman": ("pressure", "full_velocity"),
        "brinkman_traction": ("traction", "full_velocity"),
    }[model]
    for side in SIDES:
        kind = data["boundaries"][side]["type"]
        if kind not in allowed:
            violations.append((f"boundaries.{side}.type", f"'{kind}' is not available for model '{model}'"))

    return violations


def parse_config(text: str, base_dir: Optional[str] = None) -> RunConfig:
    """
    Parses and validates a JSON run configuration.

    Parameters
    ----------
    text : str
        The JSON document.

    base_dir : str, optional
        Directory that relative permeability file paths are resolved against. Defaults to the working directory.

    Returns
    -------
    config : :py:class:`RunConfig`

    Errors
    ------
    ConfigError
        Raised for malformed JSON or when the document violates the schema. All violations are reported, each with
        the dotted path of the offending field.
    """

    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigError("The run configuration is not valid JSON.", [("", str(error))])

    validator = Draft7Validator(RUN_CONFIG_SCHEMA)
    violations = [
        (_dotted(error.absolute_path), error.message)
        for error in sorted(validator.iter_errors(data), key=lambda error: list(error.absolute_path))
    ]
    if violations:
        raise ConfigError("The run configuration does not match the schema.", violations)

    violations = _semantic_violations(data)
    if violations:
        raise ConfigError("The run configuration is inconsistent.", violations)

    grid = {**default_grid, **data["grid"]}
    solver = {**default_solver, **data.get("solver", {})}
    solver.setdefault("max_iterations", 10 * grid["nx"] * grid["ny"])

    config = RunConfig(
        model=data["model"],
        grid=grid,
        fluid={**default_fluid, **data.get("fluid", {})},
        permeability=dict(data["permeability"]),
        body_force={**default_body_force, **data.get("body_force", {})},
        boundaries={side: dict(data["boundaries"][side]) for side in SIDES},
        solver=solver,
        design={**default_design, **data.get("design", {})},
        verify={**default_verify, **data.get("verify", {})},
        base_dir=base_dir if base_dir is not None else os.getcwd(),
    )
    logger.debug(f"Parsed a {config.model} configuration on a {grid['nx']} x {grid['ny']} grid.")
    return config


def load_config(path: str) -> RunConfig:
    """
    Reads and parses the configuration at ``path``; relative file references resolve against its directory.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as error:
        raise ConfigError(f"Could not read the run configuration '{path}'.", [("", str(error))])
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _load_permeability(config: RunConfig, grid: StaggeredGrid) -> CellField:

    block = config.permeability
    if "uniform" in block:
        return CellField(grid, float(block["uniform"]))
    if "values" in block:
        return CellField(grid, np.asarray(block["values"], dtype=float))

    # Imported here; the writers import the grid types this module also builds.
    from porous_adjoint.field_writers import read_cell_csv

    path = block["file"]
    if not os.path.isabs(path):
        path = os.path.join(config.base_dir, path)
    if not os.path.exists(path):
        raise ConfigError("The permeability file does not exist.", [("permeability.file", path)])

    if path.endswith(".npy"):
        values = np.load(path)
    else:
        values = read_cell_csv(path, grid)

    if values.shape != grid.cell_shape:
        raise ConfigError(
            "The permeability file does not match the grid.",
            [("permeability.file", f"expected shape {grid.cell_shape}, found {values.shape}")],
        )
    if np.any(values <= 0.0):
        raise ConfigError("The permeability file holds nonpositive values.", [("permeability.file", path)])
    return CellField(grid, values)


def _build_body_force(config: RunConfig, grid: StaggeredGrid) -> BodyForce:
    block = config.body_force
    rho = config.fluid["rho"]

    if block["type"] == "vector":
        bx, by = block["value"]
        return BodyForce.from_faces(FaceField(grid, rho * bx, rho * by))

    if block["type"] == "potential":
        # rho b = -grad psi with an affine psi.
        gx, gy = block["gradient"]
        offset = block.get("offset", 0.0)
        return BodyForce.from_potential(CellField.from_function(grid, lambda x, y: rho * (gx * x + gy * y + offset)))

    return BodyForce.zero()


def build_boundaries(config: RunConfig, grid: StaggeredGrid) -> BoundarySpec:
    """
    Boundary conditions of ``config``, with every profile resolved once against ``grid`` so that a profile of the
    wrong length is reported before any solve.
    """
    conditions = {}
    violations = []
    for side in SIDES:
        block = config.boundaries[side]
        try:
            value = np.asarray(block.get("value", 0.0), dtype=float)
            tangential = np.asarray(block.get("tangential", 0.0), dtype=float)
            condition = BoundaryCondition(block["type"], value, tangential=tangential)
            condition.values(grid, side)
            condition.tangential_values(grid, side)
        except ValueError as error:
            violations.append((f"boundaries.{side}", str(error)))
            continue
        conditions[side] = condition

    if violations:
        raise ConfigError("The boundary profiles do not match the grid.", violations)
    return BoundarySpec(conditions)


def build_problem(config: RunConfig) -> FlowProblem:
    """
    Builds the boundary value problem described by ``config``.

    Errors
    ------
    ConfigError
        Raised for an unreadable or mismatched permeability file or boundary profiles of the wrong length.
    """
    grid = config.make_grid()
    k = _load_permeability(config, grid)
    body_force = _build_body_force(config, grid)
    settings = SolverSettings(
        tolerance=config.solver["tolerance"],
        max_iterations=config.solver["max_iterations"],
        method=config.solver["method"],
    )

    try:
        bc = build_boundaries(config, grid)
        if config.model == "darcy":
            return DarcyProblem(grid, k, config.fluid["mu"], bc, body_force=body_force, settings=settings)
        form = FORM_TRACTION if config.model == "brinkman_traction" else FORM_MAIN
        return BrinkmanProblem(grid, k, config.fluid["mu"], bc, body_force=body_force, settings=settings, form=form)
    except ConfigError:
        raise
    except InputError as error:
        raise ConfigError("The run configuration describes an invalid problem.", [("boundaries", str(error))])


def build_scenario(config: RunConfig) -> Scenario:
    design = config.design
    return Scenario(
        sense=design["sense"],
        bound=design["bound"],
        volume_fraction=design["volume_fraction"],
        k_low=design["k_low"],
        k_high=design["k_high"],
        q=design["q"],
    )
