"""
Reconstruction and triplet-alignment losses.

Both return scalar graph tensors so a trainer can back-propagate through them;
call ``.item()`` for the plain value.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from modred.numcore import ops
from modred.numcore.tensor import Tensor, as_tensor
from modred.objectives.triplets import TripletAssignment


DEFAULT_MARGIN = 0.2


def reconstruction_loss(x: Tensor | np.ndarray, x_hat: Tensor | np.ndarray) -> Tensor:
    """Mean squared error over every channel and sample."""
    x, x_hat = as_tensor(x), as_tensor(x_hat)
    if x.shape != x_hat.shape:
        raise ValueError(f"reconstruction_loss shape mismatch: {x.shape} vs {x_hat.shape}")
    return ops.mean(ops.square(ops.sub(x_hat, x)))


def masked_reconstruction_loss(
    x: Tensor | np.ndarray, x_hat: Tensor | np.ndarray, masked_flags: np.ndarray
) -> Tensor:
    """
    Mean squared error over masked patches only.

    ``x`` and ``x_hat`` are ``[L, patch_len]``; ``masked_flags`` marks the rows
    that count. Falls back to all rows when nothing is masked.
    """
    x, x_hat = as_tensor(x), as_tensor(x_hat)
    if x.shape != x_hat.shape or x.ndim != 2 or masked_flags.shape != (x.shape[0],):
        raise ValueError("masked_reconstruction_loss expects [L, patch_len] inputs and L flags")
    rows = np.flatnonzero(masked_flags)
    if rows.size == 0:
        return reconstruction_loss(x, x_hat)
    return reconstruction_loss(ops.take_rows(x, rows), ops.take_rows(x_hat, rows))


def triplet_loss(
    anchors: Tensor,
    positives: Tensor,
    negatives: Tensor,
    margin: float = DEFAULT_MARGIN,
) -> Tensor:
    """
    Mean hinge ``max(0, |a - p| - |a - n| + margin)`` over the batch.

    Rows are L2-normalised before distances are taken; a zero row raises
    ``NumericError``.
    """
    if not (anchors.shape == positives.shape == negatives.shape) or anchors.ndim != 2:
        raise ValueError(
            f"triplet_loss expects equal [B, d] inputs, got "
            f"{anchors.shape}, {positives.shape}, {negatives.shape}"
        )
    a = ops.l2_normalize_rows(anchors)
    p = ops.l2_normalize_rows(positives)
    n = ops.l2_normalize_rows(negatives)
    d_pos = ops.row_norm(ops.sub(a, p))
    d_neg = ops.row_norm(ops.sub(a, n))
    return ops.mean(ops.relu(ops.add(ops.sub(d_pos, d_neg), margin)))


def alignment_loss(embeddings: Sequence[Tensor], assignment: TripletAssignment) -> Tensor:
    """
    Triplet loss over per-channel embedding matrices.

    ``embeddings[c]`` is channel ``c``'s ``[B, d]`` CLS matrix; the assignment
    indexes the channel-major stack of all of them.
    """
    if len(embeddings) != assignment.n_channels:
        raise ValueError(
            f"got {len(embeddings)} embedding matrices for {assignment.n_channels} channels"
        )
    stacked = ops.concat(list(embeddings), axis=0)
    return triplet_loss(
        ops.take_rows(stacked, assignment.anchor_index),
        ops.take_rows(stacked, assignment.positive_index),
        ops.take_rows(stacked, assignment.negative_index),
        assignment.margin,
    )
