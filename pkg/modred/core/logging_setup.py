"""
Logging configuration for modred commands.

Library modules only ever call ``logging.getLogger(__name__)``; the root logger
is configured once by the CLI entrypoint. Verbosity comes from the ``MODRED_LOG``
environment variable.
"""

from __future__ import annotations

import logging
import os


LOG_ENV_VAR = "MODRED_LOG"
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}


def resolve_log_level(raw: str | None) -> int:
    """Map a ``MODRED_LOG`` value to a logging level (INFO when unset/unknown)."""
    if not raw:
        return logging.INFO
    return _LEVELS.get(raw.strip().upper(), logging.INFO)


def configure_logging() -> int:
    """Configure the root logger from the environment and return the level used."""
    raw = os.getenv(LOG_ENV_VAR)
    level = resolve_log_level(raw)
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
    if raw and raw.strip().upper() not in _LEVELS:
        logging.getLogger(__name__).warning(
            "Unknown %s value %r; falling back to INFO", LOG_ENV_VAR, raw
        )
    return level
