"""
Local storage helpers.

Provides helpers for reading and writing pydantic documents (configs, manifests,
report summaries) and raw bytes on the local filesystem. Missing files surface as
``MissingRecordError`` and schema problems as the caller-supplied error class, so
every reader maps failures onto the modred error hierarchy the same way.
"""

from __future__ import annotations

import hashlib
import logging
import os
from pathlib import Path

from pydantic import BaseModel, ValidationError

from modred.core.errors import DataError, MissingRecordError


logger = logging.getLogger(__name__)


def read_model[T: BaseModel](
    path: Path,
    model_class: type[T],
    *,
    error_class: type[Exception] = DataError,
) -> T:
    """
    Read and validate a pydantic document from a JSON file.

    Args:
        path: Local path to the JSON document
        model_class: Pydantic model class to deserialize to
        error_class: Exception raised when the JSON doesn't match the schema

    Returns:
        Deserialized model instance

    Raises:
        MissingRecordError: If the file does not exist
        error_class: If the content is not valid JSON or fails validation
    """
    if not path.exists():
        raise MissingRecordError(f"File not found: {path}")

    try:
        instance = model_class.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise error_class(f"Invalid {model_class.__name__} in {path}: {exc}") from exc

    logger.debug("Loaded %s from %s", model_class.__name__, path)
    return instance


def write_model(model: BaseModel, path: Path) -> None:
    """Serialize a pydantic document to ``path`` (parents created)."""
    write_text(path, model.model_dump_json(indent=2))
    logger.debug("Wrote %s to %s", model.__class__.__name__, path)


def write_text(path: Path, content: str) -> None:
    """Write UTF-8 text, replacing the file atomically."""
    write_bytes(path, content.encode("utf-8"))


def write_bytes(path: Path, content: bytes) -> None:
    """Write bytes via a temporary sibling and ``os.replace``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(f".{path.name}.tmp")
    tmp_path.write_bytes(content)
    os.replace(tmp_path, path)


def read_bytes(path: Path) -> bytes:
    """Read a whole file, mapping absence onto ``MissingRecordError``."""
    if not path.exists():
        raise MissingRecordError(f"File not found: {path}")
    return path.read_bytes()


def sha256_text(content: str) -> str:
    """Hex SHA-256 of a UTF-8 string (used for config provenance hashes)."""
    return hashlib.sha256(content.encode("utf-8")).hexdigest()
