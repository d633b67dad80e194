"""
Error hierarchy shared by every modred subpackage.

Each error class carries the process exit code the CLI reports for it, so the
command layer never needs a lookup table of its own:

- 2: usage / configuration problems
- 3: data problems (manifests, waveform files, checkpoints)
- 4: coordinator/worker protocol failures
- 5: numeric failures (NaN/Inf anywhere in a computation)

Classes also derive from the closest builtin exception so callers that catch
``ValueError`` or ``ConnectionError`` keep working.
"""

from __future__ import annotations


EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PROTOCOL = 4
EXIT_NUMERIC = 5


class ModredError(Exception):
    """Base class for all expected failures."""

    exit_code: int = EXIT_UNEXPECTED


class ConfigError(ModredError, ValueError):
    """Invalid configuration, unknown keys, or a checkpoint/config mismatch."""

    exit_code = EXIT_CONFIG


class DataError(ModredError, ValueError):
    """Problem with input records, manifests or waveform files."""

    exit_code = EXIT_DATA


class MissingRecordError(DataError, FileNotFoundError):
    """A manifest entry points at a file that does not exist."""


class ManifestError(DataError):
    """The manifest is not valid JSON or does not match the schema."""


class LengthMismatchError(DataError):
    """A waveform file's size disagrees with its manifest entry."""


class InsufficientRecordsError(DataError):
    """Too few records (or record groups) to form a valid batch."""


class CheckpointError(DataError):
    """Corrupt, truncated or incompatible checkpoint file."""


class ProtocolError(ModredError, ConnectionError):
    """Violation of the coordinator/worker wire protocol."""

    exit_code = EXIT_PROTOCOL


class ConnectionLostError(ProtocolError):
    """The peer closed the connection (or vanished) mid-conversation."""


class DuplicateChannelError(ProtocolError):
    """Two workers announced the same channel id."""


class StepMismatchError(ProtocolError):
    """A message refers to a different step than the pending one."""


class NumericError(ModredError, ArithmeticError):
    """A computation produced NaN or Inf."""

    exit_code = EXIT_NUMERIC


def exit_code_for(exc: BaseException) -> int:
    """Return the CLI exit code for ``exc`` (1 for anything unexpected)."""
    if isinstance(exc, ModredError):
        return exc.exit_code
    return EXIT_UNEXPECTED
