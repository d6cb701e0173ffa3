import logging
import os
from typing import Optional

from porous_adjoint.exceptions import ConfigError

logger = logging.getLogger(__name__)

LOG_ENVIRONMENT_VARIABLE = "POROUS_ADJOINT_LOG"
LOG_LEVELS = {
    "error": logging.ERROR,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def setup_logging(level_name: Optional[str] = None) -> int:
    """
    Sets the level of the ``porous_adjoint`` logger and attaches a stream handler once.

    Parameters
    ----------
    level_name : str, optional
        One of ``"error"``, ``"info"`` or ``"debug"``. Read from ``POROUS_ADJOINT_LOG`` when not given, defaulting
        to ``"error"``.

    Returns
    -------
    level : int
        The ``logging`` level applied.

    Errors
    ------
    ConfigError
        Raised for any other level name.
    """

    if level_name is None:
        level_name = os.environ.get(LOG_ENVIRONMENT_VARIABLE, "error")

    try:
        level = LOG_LEVELS[level_name.strip().lower()]
    except KeyError:
        raise ConfigError(
            f"Unknown log level '{level_name}'.",
            [(LOG_ENVIRONMENT_VARIABLE, f"expected one of {list(LOG_LEVELS)}")],
        )

    package_logger = logging.getLogger("porous_adjoint")
    package_logger.setLevel(level)
    if not package_logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s: %(message)s"))
        package_logger.addHandler(handler)

    return level
