"""
Seeded triplet assignment over a batch of (row, channel) embeddings.

Every embedding is an anchor exactly once. Its positive is the same batch row
seen through a different channel; its negative is a row whose key differs
(a different recording, or a different subject), seen through any channel.
Embeddings are addressed in channel-major order: index ``c * B + r``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from modred.core.errors import InsufficientRecordsError


@dataclass(frozen=True)
class TripletAssignment:
    n_rows: int
    n_channels: int
    anchor_index: np.ndarray
    positive_index: np.ndarray
    negative_index: np.ndarray
    margin: float

    def split(self, flat_index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map flat indices back to ``(rows, channels)``."""
        return flat_index % self.n_rows, flat_index // self.n_rows


def assign_triplets(
    row_keys: Sequence[str],
    n_channels: int,
    rng_seed: int,
    margin: float = 0.2,
) -> TripletAssignment:
    """
    Build a deterministic triplet assignment.

    Args:
        row_keys: Identity key of each batch row (record id or subject id);
            negatives are drawn from rows with a different key.
        n_channels: Number of channels (at least 2).
        rng_seed: Seed for positive/negative sampling.
        margin: Triplet margin carried with the assignment.

    Raises:
        InsufficientRecordsError: Fewer than two distinct keys in the batch.
        ValueError: Fewer than two channels.
    """
    keys = np.asarray(list(row_keys), dtype=object)
    n_rows = keys.size
    if n_channels < 2:
        raise ValueError("triplet assignment needs at least two channels")
    if len(set(keys.tolist())) < 2:
        raise InsufficientRecordsError(
            "triplet assignment needs at least two distinct records in the batch"
        )

    rng = np.random.default_rng(rng_seed)
    anchor_channels = np.repeat(np.arange(n_channels), n_rows)
    anchor_rows = np.tile(np.arange(n_rows), n_channels)

    shift = rng.integers(0, n_channels - 1, size=anchor_rows.size)
    positive_channels = np.where(shift >= anchor_channels, shift + 1, shift)

    negative_rows = np.empty(anchor_rows.size, dtype=np.int64)
    candidates = {
        key: np.flatnonzero(keys != key) for key in dict.fromkeys(keys.tolist())
    }
    picks = rng.random(anchor_rows.size)
    for slot, row in enumerate(anchor_rows):
        pool = candidates[keys[row]]
        negative_rows[slot] = pool[int(picks[slot] * pool.size)]
    negative_channels = rng.integers(0, n_channels, size=anchor_rows.size)

    return TripletAssignment(
        n_rows=n_rows,
        n_channels=n_channels,
        anchor_index=anchor_channels * n_rows + anchor_rows,
        positive_index=positive_channels * n_rows + anchor_rows,
        negative_index=negative_channels * n_rows + negative_rows,
        margin=margin,
    )
