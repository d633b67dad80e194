"""Seeded cross-validation fold assignment."""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np
from sklearn.model_selection import GroupKFold, KFold

from modred.core.errors import DataError
from modred.core.seeding import derive_seed


@dataclass(frozen=True)
class FoldSplit:
    """
    ``assignment[i]`` is the fold that holds sample ``i`` out.

    Every sample belongs to exactly one test fold, so the test folds partition
    ``range(n)``. With ``subject_disjoint`` no subject appears in two folds.
    """

    k: int
    assignment: np.ndarray
    seed: int
    subject_disjoint: bool = False

    @property
    def n_samples(self) -> int:
        return int(self.assignment.size)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def __iter__(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for fold in range(self.k):
            yield self.train_indices(fold), self.test_indices(fold)


def make_folds(
    n_samples: int,
    k: int,
    seed: int,
    *,
    groups: Sequence[str] | None = None,
) -> FoldSplit:
    """
    Assign ``n_samples`` to ``k`` folds.

    Without ``groups`` folds are sample-level and shuffled by ``seed``
    (``KFold``). With ``groups`` (subject ids) folds are subject-disjoint
    (``GroupKFold``).

    Raises:
        DataError: A fold would be empty.
    """
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if n_samples < k:
        raise DataError(f"cannot split {n_samples} samples into {k} non-empty folds")

    assignment = np.full(n_samples, -1, dtype=np.int64)
    placeholder = np.zeros((n_samples, 1))
    if groups is None:
        state = derive_seed(seed, "folds") % (1 << 32)
        splitter = KFold(n_splits=k, shuffle=True, random_state=state)
        splits = splitter.split(placeholder)
    else:
        labels = np.asarray(groups)
        if labels.size != n_samples:
            raise DataError(f"{labels.size} group labels for {n_samples} samples")
        n_groups = np.unique(labels).size
        if n_groups < k:
            raise DataError(f"cannot split {n_groups} subjects into {k} disjoint folds")
        splits = GroupKFold(n_splits=k).split(placeholder, groups=labels)

    for fold, (_, test) in enumerate(splits):
        assignment[test] = fold
    return FoldSplit(k=k, assignment=assignment, seed=seed, subject_disjoint=groups is not None)
