"""
Deterministic seed derivation.

Every random draw in a run (data order, crops, masks, triplets, initialisation)
is keyed by a tuple of integers rooted at the master seed. Processes that derive
the same tuple get the same stream, which is what lets a distributed run
reproduce the single-process reference trainer bit for bit.
"""

from __future__ import annotations

import zlib

import numpy as np


_U64_MASK = (1 << 64) - 1


def _tag(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def derive_seed(root: int, label: str, *indices: int) -> int:
    """Derive a 64-bit seed from ``root``, a purpose label and integer indices."""
    entropy = [int(root) & _U64_MASK, _tag(label), *(int(i) for i in indices)]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])


def rng_for(root: int, label: str, *indices: int) -> np.random.Generator:
    """Return a ``numpy`` generator seeded from :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(root, label, *indices))
