"""
Downstream classifiers over frozen embeddings.

``logreg_cv`` scores a binary diagnosis label with an L2-regularised logistic
regression fitted by full-batch gradient descent; ``knn_cv`` scores subject
identification with a brute-force Euclidean nearest-neighbour vote.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit
from sklearn.metrics import f1_score
from sklearn.preprocessing import StandardScaler

from modred.core.errors import DataError, NumericError
from modred.evalkit.folds import FoldSplit, make_folds


logger = logging.getLogger(__name__)

POSITIVE_LABEL = "1"
LOGREG_L2 = 1e-2
LOGREG_ITERATIONS = 500
LOGREG_STEP = 0.1


@dataclass(frozen=True)
class CvResult:
    metric: str
    per_fold: tuple[float, ...]
    seed: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_fold))

    @property
    def std(self) -> float:
        return float(np.std(self.per_fold))


def _features(embeddings: np.ndarray, labels: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray([str(label) for label in labels])
    if x.ndim != 2:
        raise DataError(f"embeddings must be [n, d], got shape {x.shape}")
    if x.shape[0] != y.size:
        raise DataError(f"{x.shape[0]} embeddings but {y.size} labels")
    if not np.all(np.isfinite(x)):
        raise NumericError("embeddings contain non-finite values")
    return x, y


# ==============================================================================
# Logistic regression
# ==============================================================================


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    scaler: StandardScaler

    def predict(self, x: np.ndarray) -> np.ndarray:
        z = self.scaler.transform(x) @ self.weights + self.bias
        return np.where(expit(z) >= 0.5, POSITIVE_LABEL, "0")


def fit_logistic(
    x: np.ndarray,
    positive: np.ndarray,
    *,
    l2: float = LOGREG_L2,
    iterations: int = LOGREG_ITERATIONS,
    step: float = LOGREG_STEP,
) -> LogisticModel:
    """Full-batch gradient descent from zero weights on standardised features."""
    scaler = StandardScaler().fit(x)
    z = scaler.transform(x)
    target = positive.astype(np.float64)
    weights = np.zeros(z.shape[1])
    bias = 0.0
    n = z.shape[0]
    for _ in range(iterations):
        residual = expit(z @ weights + bias) - target
        weights -= step * (z.T @ residual / n + l2 * weights)
        bias -= step * float(residual.mean())
    return LogisticModel(weights=weights, bias=bias, scaler=scaler)


def logreg_cv(
    embeddings: np.ndarray,
    labels: Sequence[str],
    *,
    folds: int = 5,
    seed: int,
    groups: Sequence[str] | None = None,
) -> CvResult:
    """
    Per-fold F1 (positive label ``"1"``) of the logistic-regression classifier.

    Raises:
        DataError: The label set is not binary, or a training fold lacks a class.
    """
    x, y = _features(embeddings, labels)
    values = set(y.tolist())
    if len(values) != 2 or POSITIVE_LABEL not in values:
        raise DataError(f"binary labels with positive {POSITIVE_LABEL!r} required, got {values}")
    split = make_folds(len(y), folds, seed, groups=groups)

    scores = []
    for fold, (train, test) in enumerate(split):
        if len(set(y[train].tolist())) != 2:
            raise DataError(f"training fold {fold} holds a single label value")
        model = fit_logistic(x[train], y[train] == POSITIVE_LABEL)
        predicted = model.predict(x[test])
        truth = np.where(y[test] == POSITIVE_LABEL, POSITIVE_LABEL, "0")
        scores.append(
            float(f1_score(truth, predicted, pos_label=POSITIVE_LABEL, zero_division=0.0))
        )
    result = CvResult(metric="f1", per_fold=tuple(scores), seed=seed)
    logger.info("logreg_cv: mean F1 %.4f over %d folds", result.mean, folds)
    return result


# ==============================================================================
# Nearest neighbours
# ==============================================================================


def knn_predict(
    train_x: np.ndarray, train_y: np.ndarray, test_x: np.ndarray, *, k: int = 1
) -> np.ndarray:
    """
    Majority vote among the ``k`` nearest training rows (Euclidean).

    Equal distances order by training index; a tied vote goes to the label
    whose nearest member ranks first.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    distances = cdist(test_x, train_x, metric="euclidean")
    order = np.argsort(distances, axis=1, kind="stable")[:, : min(k, train_x.shape[0])]
    predictions = []
    for row in order:
        neighbours = train_y[row].tolist()
        counts: dict[str, int] = {}
        for label in neighbours:
            counts[label] = counts.get(label, 0) + 1
        best = max(counts.values())
        predictions.append(next(label for label in neighbours if counts[label] == best))
    return np.asarray(predictions, dtype=train_y.dtype)


def knn_cv(
    embeddings: np.ndarray,
    labels: Sequence[str],
    *,
    k: int = 1,
    folds: int = 10,
    seed: int,
) -> CvResult:
    """
    Per-fold accuracy of nearest-neighbour identification over sample-level folds.

    Raises:
        DataError: Fewer than two subjects, or too few samples for ``folds``.
    """
    x, y = _features(embeddings, labels)
    subjects, counts = np.unique(y, return_counts=True)
    if subjects.size < 2:
        raise DataError("nearest-neighbour identification needs at least two subjects")
    if np.any(counts < 2):
        logger.warning(
            "%d subject(s) have a single sample and cannot be identified when held out",
            int(np.sum(counts < 2)),
        )
    split: FoldSplit = make_folds(len(y), folds, seed)

    scores = []
    for train, test in split:
        predicted = knn_predict(x[train], y[train], x[test], k=k)
        scores.append(float(np.mean(predicted == y[test])))
    result = CvResult(metric="accuracy", per_fold=tuple(scores), seed=seed)
    logger.info("knn_cv: mean accuracy %.4f over %d folds (k=%d)", result.mean, folds, k)
    return result
