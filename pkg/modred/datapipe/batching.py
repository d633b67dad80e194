"""
Deterministic mini-batches.

The record order of an epoch and every crop offset are derived from the epoch
seed alone, so any number of processes given the same records, batch size and
epoch seed produce identical batches. A worker that only needs one channel
passes ``channels=[c]`` and still sees the same windows as its peers.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from modred.core.errors import InsufficientRecordsError
from modred.core.seeding import derive_seed, rng_for
from modred.datapipe.preprocess import PreprocessConfig, preprocess
from modred.datapipe.records import SignalRecord


logger = logging.getLogger(__name__)

MIN_BATCH = 2


@dataclass(frozen=True)
class Batch:
    """``signals`` is ``[B, C_selected, window_samples]``."""

    index: int
    record_ids: tuple[str, ...]
    subject_ids: tuple[str, ...]
    signals: np.ndarray

    @property
    def size(self) -> int:
        return len(self.record_ids)

    def row_keys(self, negative_key: str = "record") -> tuple[str, ...]:
        """Identity key per row used to pick triplet negatives."""
        return negative_keys(self.record_ids, self.subject_ids, negative_key)


def negative_keys(
    record_ids: Sequence[str], subject_ids: Sequence[str], negative_key: str
) -> tuple[str, ...]:
    """
    Row keys for triplet negatives.

    With ``negative_key="subject"`` a batch drawn from a single subject has no
    valid negative, so that batch falls back to record ids. The fallback depends
    only on the batch members, which keeps every process in agreement.
    """
    if negative_key != "subject":
        return tuple(record_ids)
    if len(set(subject_ids)) > 1:
        return tuple(subject_ids)
    logger.debug(
        "Batch of %d row(s) holds one subject; using record ids as negative keys",
        len(record_ids),
    )
    return tuple(record_ids)


def epoch_order(n_records: int, epoch_seed: int) -> np.ndarray:
    return rng_for(epoch_seed, "order").permutation(n_records)


def batch_plan(n_records: int, batch_size: int, epoch_seed: int) -> list[np.ndarray]:
    """Record indices per batch; a final batch smaller than two rows is dropped."""
    if batch_size < MIN_BATCH:
        raise ValueError(f"batch_size must be at least {MIN_BATCH}")
    if n_records < MIN_BATCH:
        raise InsufficientRecordsError(
            f"need at least {MIN_BATCH} records to form a batch, got {n_records}"
        )
    order = epoch_order(n_records, epoch_seed)
    plan = [order[start : start + batch_size] for start in range(0, n_records, batch_size)]
    if plan[-1].size < MIN_BATCH:
        logger.debug("Dropping final batch of %d record(s)", plan[-1].size)
        plan.pop()
    return plan


def batch_iter(
    records: Sequence[SignalRecord],
    batch_size: int,
    cfg: PreprocessConfig,
    epoch_seed: int,
    *,
    channels: Sequence[int] | None = None,
) -> Iterator[Batch]:
    """
    Yield the epoch's batches in order.

    Args:
        records: Dataset records.
        batch_size: Rows per batch (the last batch may be smaller).
        cfg: Preprocessing applied to each row.
        epoch_seed: Seed shared by every process for this epoch.
        channels: Optional channel subset to keep.

    Raises:
        InsufficientRecordsError: Fewer than two records.
    """
    position = 0
    for index, members in enumerate(batch_plan(len(records), batch_size, epoch_seed)):
        rows = []
        for record_index in members:
            record = records[int(record_index)]
            window = preprocess(record, cfg, derive_seed(epoch_seed, "crop", position))
            rows.append(window if channels is None else window[list(channels)])
            position += 1
        yield Batch(
            index=index,
            record_ids=tuple(records[int(i)].id for i in members),
            subject_ids=tuple(records[int(i)].subject_id for i in members),
            signals=np.stack(rows),
        )
