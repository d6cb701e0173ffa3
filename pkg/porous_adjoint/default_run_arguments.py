"""
Defaults filled into a run configuration after it has been validated.
"""

default_grid = {
    "lx": 1.0,
    "ly": 1.0,
}

default_fluid = {
    "mu": 1.0,
    "rho": 1.0,
}

default_solver = {
    "tolerance": 1e-10,
    "method": "auto",  # "direct" up to 256 x 256 cells, iterative above.
    # "max_iterations" defaults to 10 x (number of cells) and is filled in once the grid is known.
}

default_design = {
    "sense": "maximize",
    "bound": "high",
    "volume_fraction": 0.4,
    "k_low": 1e-2,
    "k_high": 1.0,
    "q": 8.0,  # Interpolation parameter; larger values penalize intermediate designs more.
    "max_iters": 200,
    "move_limit": 0.2,
    "filter": False,
}

default_verify = {
    "instances": 20,  # Random instances per class in the sign suite.
    "nx": 16,
    "seed": None,
    "models": ["darcy", "brinkman", "brinkman_traction"],
}

default_body_force = {
    "type": "none",
}

# Subcommands run by ``porous-adjoint``. Each one maps to ``porous_adjoint.cli.run_<name>``.
default_subcommands = {
    "solve": True,
    "adjoint": True,
    "sensitivity": True,
    "classify": True,
    "optimize": True,
    "table1": True,
    "verify": True,
}
