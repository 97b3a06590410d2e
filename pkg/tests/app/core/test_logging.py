"""Tests for process-wide logging configuration."""
from __future__ import annotations

import logging

import pytest

from app.core.logging import LOG_FORMAT, configure_logging


@pytest.fixture()
def root_logger():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield root
    root.handlers[:] = handlers
    root.setLevel(level)


def test_configure_logging_installs_handler_once(root_logger: logging.Logger) -> None:
    root_logger.handlers.clear()

    configure_logging("DEBUG")
    configure_logging("WARNING")

    assert len(root_logger.handlers) == 1
    assert root_logger.handlers[0].formatter._fmt == LOG_FORMAT
    assert root_logger.level == logging.WARNING


@pytest.mark.parametrize("level,expected", [("info", logging.INFO), (logging.ERROR, logging.ERROR), ("nonsense", logging.INFO)])
def test_configure_logging_resolves_levels(root_logger: logging.Logger, level, expected: int) -> None:
    configure_logging(level)

    assert root_logger.level == expected
