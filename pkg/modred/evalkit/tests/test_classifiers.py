"""Tests for fold assignment and the logistic-regression and nearest-neighbour classifiers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from modred.core.errors import DataError
from modred.evalkit.classifiers import CvResult, knn_cv, knn_predict, logreg_cv
from modred.evalkit.folds import make_folds


# ==============================================================================
# Folds
# ==============================================================================


def test_folds_partition_samples():
    split = make_folds(23, 5, seed=1)
    tests = [split.test_indices(f) for f in range(5)]
    assert sorted(np.concatenate(tests).tolist()) == list(range(23))
    assert all(t.size in (4, 5) for t in tests)
    for train, test in split:
        assert np.intersect1d(train, test).size == 0
        assert train.size + test.size == 23


def test_folds_are_seeded():
    first = make_folds(30, 10, seed=8).assignment
    assert first.tolist() == make_folds(30, 10, seed=8).assignment.tolist()
    assert first.tolist() != make_folds(30, 10, seed=9).assignment.tolist()


def test_subject_disjoint_folds():
    groups = [f"s{i // 3}" for i in range(18)]
    split = make_folds(18, 3, seed=0, groups=groups)
    assert split.subject_disjoint
    for fold in range(3):
        held_out = {groups[i] for i in split.test_indices(fold)}
        kept = {groups[i] for i in split.train_indices(fold)}
        assert not held_out & kept


def test_folds_cannot_be_empty():
    with pytest.raises(DataError):
        make_folds(3, 5, seed=0)
    with pytest.raises(DataError, match="subjects"):
        make_folds(10, 5, seed=0, groups=["a", "b"] * 5)


# ==============================================================================
# Logistic regression
# ==============================================================================


def _separable(rng, n=40):
    labels = np.array(["1", "0"] * (n // 2))
    centres = np.where(labels[:, None] == "1", 3.0, -3.0)
    return centres + 0.5 * rng.standard_normal((n, 2)), labels


def test_separable_set_scores_perfect_f1():
    x, y = _separable(np.random.default_rng(0))
    result = logreg_cv(x, y, folds=5, seed=3)
    assert result.metric == "f1"
    assert len(result.per_fold) == 5
    assert result.mean == 1.0


def test_permuted_labels_score_near_chance():
    scores = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((100, 3))
        y = rng.permutation(np.array(["1", "0"] * 50))
        scores.append(logreg_cv(x, y, folds=5, seed=seed).mean)
    assert abs(float(np.mean(scores)) - 0.5) <= 0.15


def test_subject_disjoint_logreg_runs():
    x, y = _separable(np.random.default_rng(1))
    groups = [f"s{i // 2}" for i in range(len(y))]
    assert logreg_cv(x, y, folds=5, seed=0, groups=groups).mean == 1.0


@pytest.mark.parametrize("labels", [["1"] * 10, ["0", "2"] * 5, ["0", "1", "2", "1", "0"] * 2])
def test_logreg_requires_binary_labels(labels):
    with pytest.raises(DataError):
        logreg_cv(np.zeros((len(labels), 2)), labels, folds=2, seed=0)


# ==============================================================================
# Nearest neighbours
# ==============================================================================


def _brute_nearest(train_x, train_y, test_x):
    predictions = []
    for point in test_x:
        best, best_index = math.inf, -1
        for index, candidate in enumerate(train_x):
            distance = math.dist(point, candidate)
            if distance < best:
                best, best_index = distance, index
        predictions.append(train_y[best_index])
    return np.array(predictions)


@pytest.mark.parametrize("integer_grid", [False, True])
def test_one_nn_matches_brute_force(integer_grid):
    for seed in range(20):
        rng = np.random.default_rng(seed)
        if integer_grid:
            x = rng.integers(0, 3, size=(30, 2)).astype(float)
        else:
            x = rng.standard_normal((30, 4))
        y = np.array([f"s{i}" for i in rng.integers(0, 4, size=30)])
        split = make_folds(30, 10, seed=seed)
        for train, test in split:
            expected = _brute_nearest(x[train], y[train], x[test])
            actual = knn_predict(x[train], y[train], x[test])
            assert actual.tolist() == expected.tolist()


def test_duplicated_embeddings_are_identified_perfectly():
    rng = np.random.default_rng(2)
    prototypes = rng.standard_normal((5, 8))
    x = np.repeat(prototypes, 4, axis=0)
    y = np.repeat([f"s{i}" for i in range(5)], 4)
    result = knn_cv(x, y, folds=10, seed=0)
    assert result.metric == "accuracy"
    assert result.per_fold == (1.0,) * 10


def test_majority_vote_and_tie_break():
    train_x = np.array([[0.0], [1.0], [2.0], [3.0]])
    train_y = np.array(["a", "b", "b", "a"])
    test_x = np.array([[0.1]])
    assert knn_predict(train_x, train_y, test_x, k=3).tolist() == ["b"]
    assert knn_predict(train_x, train_y, test_x, k=2).tolist() == ["a"]
    assert knn_predict(train_x, train_y, np.array([[1.5]]), k=1).tolist() == ["b"]


def test_knn_needs_two_subjects():
    with pytest.raises(DataError, match="two subjects"):
        knn_cv(np.zeros((10, 2)), ["s"] * 10, folds=2, seed=0)


def test_cv_result_statistics():
    result = CvResult(metric="accuracy", per_fold=(1.0, 0.5), seed=0)
    assert result.mean == 0.75
    assert result.std == 0.25
