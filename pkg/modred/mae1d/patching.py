"""
Patching, fixed sine-cosine position tables, and random patch masking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from modred.numcore import ops
from modred.numcore.tensor import Tensor, as_tensor


def patchify(signal: Tensor | np.ndarray, patch_len: int) -> Tensor:
    """Split a 1-D signal into ``[L, patch_len]`` non-overlapping patches."""
    signal = as_tensor(signal)
    if signal.ndim != 1:
        raise ValueError(f"patchify expects a 1-D signal, got shape {signal.shape}")
    if patch_len < 1 or signal.size % patch_len != 0:
        raise ValueError(
            f"signal length {signal.size} is not a multiple of patch_len {patch_len}"
        )
    return ops.reshape(signal, (signal.size // patch_len, patch_len))


def unpatchify(patches: Tensor | np.ndarray) -> Tensor:
    """Inverse of :func:`patchify`."""
    patches = as_tensor(patches)
    if patches.ndim != 2:
        raise ValueError(f"unpatchify expects [L, patch_len], got shape {patches.shape}")
    return ops.reshape(patches, (patches.size,))


@lru_cache(maxsize=32)
def _position_table(length: int, dim: int) -> np.ndarray:
    positions = np.arange(length, dtype=np.float64)[:, None]
    pair = np.arange(dim // 2, dtype=np.float64)[None, :]
    angles = positions / np.power(10000.0, 2.0 * pair / dim)
    table = np.empty((length, dim), dtype=np.float64)
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    table.setflags(write=False)
    return table


def sincos_positions(length: int, dim: int) -> np.ndarray:
    """
    Fixed position table: row ``p`` holds ``sin``/``cos`` of ``p / 10000**(2j/dim)``
    in columns ``2j`` and ``2j + 1``.
    """
    if dim < 2 or dim % 2:
        raise ValueError(f"position table dim must be even, got {dim}")
    if length < 0:
        raise ValueError("position table length must be non-negative")
    return _position_table(length, dim)


@dataclass(frozen=True)
class MaskPlan:
    """
    Partition of patch indices into visible and masked sets.

    ``restore_perm[p]`` is the row of ``concat(visible, masked)`` that holds
    patch ``p``, so gathering that concatenation by ``restore_perm`` returns the
    sequence to temporal order.
    """

    visible_idx: np.ndarray
    masked_idx: np.ndarray
    restore_perm: np.ndarray

    @property
    def n_patches(self) -> int:
        return int(self.visible_idx.size + self.masked_idx.size)

    @classmethod
    def unmasked(cls, n_patches: int) -> MaskPlan:
        everything = np.arange(n_patches, dtype=np.int64)
        return cls(everything, np.empty(0, dtype=np.int64), everything.copy())

    def masked_flags(self) -> np.ndarray:
        """Boolean per patch, true where the patch is masked."""
        flags = np.zeros(self.n_patches, dtype=bool)
        flags[self.masked_idx] = True
        return flags


def keep_count(n_patches: int, mask_ratio: float) -> int:
    # The epsilon absorbs binary rounding of 1 - ratio (e.g. 10 * 0.2).
    return math.floor(n_patches * (1.0 - mask_ratio) + 1e-9)


def random_mask(n_patches: int, mask_ratio: float, rng_seed: int) -> MaskPlan:
    """Seeded uniform masking via noise argsort; keeps ``floor(L * (1 - ratio))`` patches."""
    if not 0.0 <= mask_ratio < 1.0:
        raise ValueError(f"mask_ratio must be in [0, 1), got {mask_ratio}")
    noise = np.random.default_rng(rng_seed).random(n_patches)
    order = np.argsort(noise, kind="stable")
    keep = keep_count(n_patches, mask_ratio)
    visible = np.sort(order[:keep])
    masked = np.sort(order[keep:])
    restore = np.argsort(np.concatenate([visible, masked]), kind="stable")
    return MaskPlan(visible.astype(np.int64), masked.astype(np.int64), restore.astype(np.int64))
