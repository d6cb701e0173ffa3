import logging

import pytest

from porous_adjoint.exceptions import ConfigError
from porous_adjoint.utils import LOG_ENVIRONMENT_VARIABLE, setup_logging

logger = logging.getLogger(__name__)


@pytest.mark.parametrize("name, level", [("error", logging.ERROR), ("INFO", logging.INFO), (" debug ", logging.DEBUG)])
def test_setup_logging_levels(name: str, level: int):
    """
    Parameterize Combinations
    -------------------------
    name : str
        Requested level, case and surrounding whitespace ignored.

    level : int
        Expected ``logging`` level.
    """

    assert setup_logging(name) == level
    assert logging.getLogger("porous_adjoint").level == level
    assert len(logging.getLogger("porous_adjoint").handlers) == 1


def test_setup_logging_from_environment(monkeypatch):

    monkeypatch.setenv(LOG_ENVIRONMENT_VARIABLE, "info")
    assert setup_logging() == logging.INFO

    monkeypatch.delenv(LOG_ENVIRONMENT_VARIABLE)
    assert setup_logging() == logging.ERROR


def test_setup_logging_rejects_unknown_level(monkeypatch):

    monkeypatch.setenv(LOG_ENVIRONMENT_VARIABLE, "verbose")

    with pytest.raises(ConfigError):
        setup_logging()
