"""
Command line front end: ``porous-adjoint <subcommand> [--config CONFIG] [--out DIR] ...``.

Each subcommand is a ``run_<name>(config, args)`` function of this module returning a JSON-serializable summary,
which is written to ``<out>/<name>.json``. Errors raised by the package map to the process exit code they carry:

* 0 success
* 2 configuration error
* 3 compatibility violation
* 4 linear solver failure
* 5 internal invariant failure
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from porous_adjoint.__version__ import __version__
from porous_adjoint.classify import classify_bvp
from porous_adjoint.config import RunConfig, build_problem, build_scenario, load_config
from porous_adjoint.default_run_arguments import default_design, default_subcommands, default_verify
from porous_adjoint.design import channel_problem_ab, channel_problem_cd, optimize
from porous_adjoint.design import run_table1 as table1_driver
from porous_adjoint.dissipation import gradient_report
from porous_adjoint.exceptions import ConfigError, InvariantError, PorousAdjointError
from porous_adjoint.field_writers import FIELD_FORMATS, write_fields, write_json, write_solution
from porous_adjoint.grid import CellField, make_grid
from porous_adjoint.utils import setup_logging
from porous_adjoint.verification import run_verification

logger = logging.getLogger(__name__)

SUBCOMMANDS = tuple(default_subcommands)
CONFIG_OPTIONAL = ("table1", "verify")
TABLE1_DEFAULT_CELLS = 32


def _require_config(name: str, config: Optional[RunConfig]) -> RunConfig:
    if config is None:
        raise ConfigError(f"The '{name}' subcommand needs a run configuration.", [("--config", "missing")])
    return config


def _plot_helper(args: argparse.Namespace):
    # matplotlib is only imported when figures are requested.
    from porous_adjoint.plot_helper import PlotHelper

    return PlotHelper(output_path=os.path.join(args.out, ""))


def run_solve(config: Optional[RunConfig], args: argparse.Namespace) -> Dict[str, Any]:
    config = _require_config("solve", config)
    problem = build_problem(config)
    problem.check_compatible()

    solution = problem.solve()
    summary = solution.diagnostics()
    summary["class"] = classify_bvp(problem).tag.value
    summary["total_dissipation"] = problem.total_dissipation(solution.v)
    summary["files"] = write_solution(args.out, solution, fmt=args.format)

    if args.plot:
        from porous_adjoint.field_plots import plot_solution

        plot_solution(solution, _plot_helper(args))

    return summary


def run_adjoint(config: Optional[RunConfig], args: argparse.Namespace) -> Dict[str, Any]:
    config = _require_config("adjoint", config)
    problem = build_problem(config)
    problem.check_compatible()

    forward = problem.solve()
    adjoint = problem.solve_adjoint(forward)
    files = write_fields(args.out, {"adjoint_pressure": adjoint.lambda_p, "adjoint_velocity": adjoint.lambda_v},
                         fmt=args.format)

    return {
        "class": classify_bvp(problem).tag.value,
        "residual": adjoint.residual,
        "max_divergence": adjoint.max_divergence(),
        "files": files,
    }


def run_sensitivity(config: Optional[RunConfig], args: argparse.Namespace) -> Dict[str, Any]:
    config = _require_config("sensitivity", config)
    problem = build_problem(config)
    problem.check_compatible()

    report = gradient_report(problem, include_fd=args.fd, threads=args.threads, show_progress=args.progress)
    density = CellField(problem.grid, report.adjoint_gradient.values / problem.grid.cell_area)
    files = write_fields(args.out, {"sensitivity_density": density}, fmt=args.format)

    if args.plot:
        from porous_adjoint.field_plots import plot_sensitivity

        plot_sensitivity(density, _plot_helper(args))

    summary = report.to_dict()
    summary["class"] = classify_bvp(problem).tag.value
    summary["files"] = files
    return summary


def run_classify(config: Optional[RunConfig], args: argparse.Namespace) -> Dict[str, Any]:
    config = _require_config("classify", config)
    problem = build_problem(config)
    imbalance = problem.check_compatible()

    summary = classify_bvp(problem).to_dict()
    summary["flux_imbalance"] = imbalance
    return summary


def run_optimize(config: Optional[RunConfig], args: argparse.Namespace) -> Dict[str, Any]:
    config = _require_config("optimize", config)
    problem = build_problem(config)
    problem.check_compatible()
    scenario = build_scenario(config)

    state = optimize(
        problem,
        scenario,
        max_iters=config.design["max_iters"],
        move_limit=config.design["move_limit"],
        use_filter=config.design["filter"],
        show_progress=args.progress,
    )
    summary = state.to_dict()
    summary["files"] = write_fields(args.out, {"design": state.gamma}, fmt=args.format)

    if args.plot:
        from porous_adjoint.field_plots import plot_design

        plot_design(state, _plot_helper(args))

    return summary


def run_table1(config: Optional[RunConfig], args: argparse.Namespace) -> Dict[str, Any]:
    if config is None:
        grid = make_grid(TABLE1_DEFAULT_CELLS, TABLE1_DEFAULT_CELLS)
        model, mu, design = "darcy", 1.0, dict(default_design)
    else:
        grid, model, mu, design = config.make_grid(), config.model, config.fluid["mu"], config.design

    result = table1_driver(
        channel_problem_ab(grid, model, mu),
        channel_problem_cd(grid, model, mu),
        volume_fraction=design["volume_fraction"],
        k_low=design["k_low"],
        k_high=design["k_high"],
        q=design["q"],
        max_iters=design["max_iters"],
        move_limit=design["move_limit"],
        use_filter=design["filter"],
        threads=args.threads,
        show_progress=args.progress,
    )
    return result.to_dict()


def run_verify(config: Optional[RunConfig], args: argparse.Namespace) -> Dict[str, Any]:
    verify = dict(default_verify) if config is None else config.verify
    seed = args.seed if args.seed is not None else verify["seed"]

    summary = run_verification(
        models=verify["models"],
        instances=verify["instances"],
        nx=verify["nx"],
        seed=seed,
        threads=args.threads,
        show_progress=args.progress,
    )
    result = summary.to_dict()
    write_json(os.path.join(args.out, "verify.json"), result)
    if not summary.passed:
        raise InvariantError(f"Verification failed; see {os.path.join(args.out, 'verify.json')}.")
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="porous-adjoint",
        description="Darcy and Darcy-Brinkman flow, adjoint sensitivities of the total dissipation rate and "
                    "two-material permeability design.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS, help="What to run.")
    parser.add_argument("--config", type=str, default=None, help="JSON run configuration.")
    parser.add_argument("--out", type=str, default="./output", help="Output directory (default ./output).")
    parser.add_argument("--format", type=str, default="csv", choices=FIELD_FORMATS, help="Field file format.")
    parser.add_argument("--seed", type=int, default=None, help="Seed of the randomized verify suites.")
    parser.add_argument("--threads", type=int, default=1, help="Concurrent independent solves (default 1).")
    parser.add_argument("--plot", action="store_true", help="Also save PNG figures.")
    parser.add_argument("--fd", action="store_true", help="Include the finite-difference gradient (sensitivity).")
    return parser


def dispatch(subcommand: str, config: Optional[RunConfig], args: argparse.Namespace) -> int:
    """
    Runs one subcommand and writes its JSON summary. Returns the process exit code; failures outside the package's
    own errors exit with the internal-failure code 5.
    """
    func = getattr(sys.modules[__name__], f"run_{subcommand}")

    try:
        summary = func(config, args)
        if subcommand != "verify":
            write_json(os.path.join(args.out, f"{subcommand}.json"), summary)
    except PorousAdjointError as error:
        logger.error(f"{type(error).__name__}: {error}")
        print(f"porous-adjoint {subcommand}: {error}", file=sys.stderr)
        return error.exit_code
    except Exception as error:
        logger.exception(f"Unexpected failure in '{subcommand}'.")
        print(f"porous-adjoint {subcommand}: internal error: {type(error).__name__}: {error}", file=sys.stderr)
        return InvariantError.exit_code

    logger.info(f"Finished '{subcommand}'.")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        level = setup_logging()
        if args.threads < 1:
            raise ConfigError("The thread count must be positive.", [("--threads", str(args.threads))])
        config = load_config(args.config) if args.config is not None else None
        if config is None and args.subcommand not in CONFIG_OPTIONAL:
            _require_config(args.subcommand, config)
    except PorousAdjointError as error:
        print(f"porous-adjoint {args.subcommand}: {error}", file=sys.stderr)
        return error.exit_code

    args.progress = level < logging.ERROR
    return dispatch(args.subcommand, config, args)


if __name__ == "__main__":
    sys.exit(main())
