"""
Logging utilities for the multiplexed quantum protocol toolkit.

Provides the dbg() helper used across the package. Messages go through the
standard logging machinery so the CLI can switch verbosity.
"""

import logging
import sys

LOGGER_NAME = "mqp"

_logger = logging.getLogger(LOGGER_NAME)


def configure(verbose: bool = False) -> None:
    """
    Attach a stderr handler to the package logger.

    Args:
        verbose: Emit debug messages when True, warnings only otherwise
    """
    if not _logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
        _logger.addHandler(handler)
    _logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


def dbg(msg: str) -> None:
    """
    Emit a debug message.

    Args:
        msg: Debug message to print
    """
    _logger.debug(msg)


def warn(msg: str) -> None:
    _logger.warning(msg)
