"""
Errors raised by ``porous_adjoint``. Every error carries the process exit code that the command line front end
returns when it surfaces, see :py:func:`~porous_adjoint.cli.main`.
"""

from typing import List, Optional, Tuple


class PorousAdjointError(Exception):
    """
    Base class for all errors raised by this package.
    """

    exit_code = 5


class InputError(PorousAdjointError, ValueError):
    """
    A problem definition is malformed (nonpositive permeability or viscosity, mismatched shapes, missing data).
    """

    exit_code = 2


class ConfigError(InputError):
    """
    The JSON run configuration failed to parse or validate. All violations are collected in
    :py:attr:`violations` as ``(path, message)`` pairs rather than stopping at the first one.
    """

    def __init__(self, message: str, violations: Optional[List[Tuple[str, str]]] = None) -> None:
        if violations is None:
            violations = []
        self.violations = violations

        if violations:
            details = "\n".join(f"  {path or '<root>'}: {reason}" for path, reason in violations)
            message = f"{message}\n{details}"

        super().__init__(message)


class MisuseError(PorousAdjointError, ValueError):
    """
    An operation was called on data it is not defined for.
    """

    exit_code = 2


class NotShiftable(PorousAdjointError, ValueError):
    exit_code = 2


class CompatibilityError(PorousAdjointError, ValueError):
    """
    Velocity is prescribed on the entire boundary but the prescribed normal flux does not balance.
    """

    exit_code = 3


class ConvergenceError(PorousAdjointError, RuntimeError):
    exit_code = 4


class InvariantError(PorousAdjointError, RuntimeError):
    """
    An internal consistency check failed (a solver returned a state violating its own contract).
    """

    exit_code = 5


class NotAnalyticallySolvable(PorousAdjointError, ValueError):
    exit_code = 5
