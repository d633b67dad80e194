"""
Error reporting utilities for modred commands.

We log all fatal exceptions and, when Sentry is installed/configured, forward the
exception for deeper diagnostics. Expected failures (``ModredError``) are reported
at error level without a traceback; anything else is treated as a bug.
"""

from __future__ import annotations

import logging

from modred.core.errors import ModredError


logger = logging.getLogger(__name__)


def report_fatal(exc: BaseException, *, context: dict | None = None) -> None:
    """
    Log a fatal exception and send to Sentry if available.

    Args:
        exc: The exception to report.
        context: Optional extra context (command, channel, run seed) to include
            in logs and as Sentry tags.
    """
    if isinstance(exc, ModredError):
        logger.error("%s: %s", type(exc).__name__, exc, extra={"context": context or {}})
    else:
        logger.error(
            "Fatal error in modred command", exc_info=exc, extra={"context": context or {}}
        )

    try:
        import sentry_sdk

        with sentry_sdk.new_scope() as scope:
            if context:
                for key, value in context.items():
                    scope.set_tag(key, value)
            sentry_sdk.capture_exception(exc)
    except Exception:
        # If Sentry is unavailable, we still have logs. Silently ignore.
        logger.debug("Sentry not available for fatal error reporting", exc_info=True)
