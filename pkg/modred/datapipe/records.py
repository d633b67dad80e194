"""
Record storage: manifest, waveform files and CSV import.

A dataset is a ``manifest.json`` plus one waveform file per record. Waveforms
are raw little-endian binary64, channel-major (all of channel 0, then channel
1, ...). Paths in the manifest are relative to the manifest's directory.

Every failure maps onto a distinct error: a missing file is a
``MissingRecordError``, an unparseable manifest a ``ManifestError``, and a
waveform whose size disagrees with its entry a ``LengthMismatchError``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from modred.core import storage
from modred.core.errors import (
    DataError,
    LengthMismatchError,
    ManifestError,
    MissingRecordError,
)


logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
WAVEFORM_SUFFIX = ".f64"


class RecordKey(NamedTuple):
    """Identity of a record as far as triplet negatives are concerned."""

    id: str
    subject_id: str


@dataclass
class SignalRecord:
    """One multi-channel recording (``channels`` is ``[C, n_samples]``)."""

    id: str
    subject_id: str
    fs_hz: float
    channels: np.ndarray
    labels: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.channels = np.asarray(self.channels, dtype=np.float64)
        if self.channels.ndim != 2 or self.channels.shape[0] < 1:
            raise DataError(f"record {self.id}: channels must be [C>=1, n_samples]")
        if not self.fs_hz > 0:
            raise DataError(f"record {self.id}: fs_hz must be positive")

    @property
    def n_channels(self) -> int:
        return int(self.channels.shape[0])

    @property
    def n_samples(self) -> int:
        return int(self.channels.shape[1])

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs_hz

    @property
    def key(self) -> RecordKey:
        return RecordKey(self.id, self.subject_id)


# ==============================================================================
# Manifest schema
# ==============================================================================


class ManifestEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str
    subject_id: str
    fs_hz: float = Field(gt=0)
    n_channels: int = Field(ge=1)
    n_samples: int = Field(ge=1)
    labels: dict[str, str] = Field(default_factory=dict)
    path: str

    @property
    def key(self) -> RecordKey:
        return RecordKey(self.id, self.subject_id)


class Manifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    records: list[ManifestEntry] = Field(default_factory=list)


# ==============================================================================
# Reading
# ==============================================================================


def load_manifest(path: Path) -> Manifest:
    """Load and validate a manifest."""
    try:
        return storage.read_model(path, Manifest, error_class=ManifestError)
    except UnicodeDecodeError as exc:
        raise ManifestError(f"Invalid manifest {path}: {exc}") from exc


def read_record(entry: ManifestEntry, base_dir: Path) -> SignalRecord:
    """Read the waveform for ``entry``, cross-checking its length."""
    path = base_dir / entry.path
    raw = storage.read_bytes(path)
    expected = 8 * entry.n_channels * entry.n_samples
    if len(raw) != expected:
        raise LengthMismatchError(
            f"{path}: {len(raw)} bytes on disk, manifest implies {expected} "
            f"({entry.n_channels} channels x {entry.n_samples} samples)"
        )
    values = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return SignalRecord(
        id=entry.id,
        subject_id=entry.subject_id,
        fs_hz=entry.fs_hz,
        channels=values.reshape(entry.n_channels, entry.n_samples),
        labels=dict(entry.labels),
    )


def read_dataset(manifest_path: Path) -> list[SignalRecord]:
    """Load every record listed in a manifest, in manifest order."""
    manifest = load_manifest(manifest_path)
    records = [read_record(entry, manifest_path.parent) for entry in manifest.records]
    logger.info("Loaded %d records from %s", len(records), manifest_path)
    return records


def require_channels(records: Sequence[SignalRecord], channels: Sequence[int]) -> None:
    """Raise ``DataError`` unless every record carries every requested channel."""
    needed = max(channels) + 1
    for record in records:
        if record.n_channels < needed:
            raise DataError(
                f"record {record.id} has {record.n_channels} channels, "
                f"channel {needed - 1} was requested"
            )


# ==============================================================================
# Writing
# ==============================================================================


def write_record(record: SignalRecord, out_dir: Path) -> ManifestEntry:
    """Write a record's waveform into ``out_dir`` and return its manifest entry."""
    file_name = f"{record.id}{WAVEFORM_SUFFIX}"
    storage.write_bytes(out_dir / file_name, record.channels.astype("<f8").tobytes(order="C"))
    return ManifestEntry(
        id=record.id,
        subject_id=record.subject_id,
        fs_hz=record.fs_hz,
        n_channels=record.n_channels,
        n_samples=record.n_samples,
        labels=dict(record.labels),
        path=file_name,
    )


def write_dataset(records: list[SignalRecord], out_dir: Path) -> Path:
    """Write waveforms plus ``manifest.json``; returns the manifest path."""
    manifest = Manifest(records=[write_record(record, out_dir) for record in records])
    manifest_path = out_dir / MANIFEST_NAME
    storage.write_model(manifest, manifest_path)
    logger.info("Wrote %d records to %s", len(records), out_dir)
    return manifest_path


# ==============================================================================
# CSV import
# ==============================================================================


def import_csv(
    path: Path,
    *,
    fs_hz: float,
    record_id: str,
    subject_id: str,
    labels: dict[str, str] | None = None,
) -> SignalRecord:
    """
    Build a record from a CSV table: a header row of channel names, then one
    sample per row.
    """
    if not path.exists():
        raise MissingRecordError(f"File not found: {path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot parse CSV {path}: {exc}") from exc
    if frame.empty or frame.shape[1] == 0:
        raise DataError(f"CSV {path} holds no samples")
    try:
        values = frame.to_numpy(dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"CSV {path} has non-numeric samples") from exc
    if not np.all(np.isfinite(values)):
        raise DataError(f"CSV {path} has missing or non-finite samples")
    logger.debug("Imported %s: channels=%s", path, list(frame.columns))
    return SignalRecord(
        id=record_id,
        subject_id=subject_id,
        fs_hz=fs_hz,
        channels=values.T.copy(),
        labels=dict(labels or {}),
    )
