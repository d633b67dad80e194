"""Tests for the correlation and cosine metrics and the similarity report."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modred.core.errors import DataError, NumericError
from modred.datapipe.records import SignalRecord
from modred.evalkit.similarity import cosine_sim, pearson_corr, similarity_report
from modred.mae1d.config import ModelConfig
from modred.mae1d.model import Mae1dModel


def _brute_pearson(x, y):
    xc, yc = x - x.mean(), y - y.mean()
    return float(np.sum(xc * yc) / np.sqrt(np.sum(xc * xc) * np.sum(yc * yc)))


def test_pearson_of_signal_with_itself_and_its_negation():
    x = np.sin(np.linspace(0, 6, 50)) + 0.1
    assert pearson_corr(x, x) == pytest.approx(1.0, abs=1e-15)
    assert pearson_corr(x, -x) == pytest.approx(-1.0, abs=1e-15)


def test_pearson_matches_direct_formula():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(2, 200))
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        assert abs(pearson_corr(x, y) - _brute_pearson(x, y)) <= 1e-12


def test_pearson_rejects_flat_and_mismatched_signals():
    with pytest.raises(DataError, match="zero-variance"):
        pearson_corr(np.ones(10), np.arange(10.0))
    with pytest.raises(DataError, match="length"):
        pearson_corr(np.arange(3.0), np.arange(4.0))
    with pytest.raises(DataError, match="two samples"):
        pearson_corr(np.array([1.0]), np.array([2.0]))
    with pytest.raises(NumericError):
        pearson_corr(np.array([1.0, np.nan]), np.array([1.0, 2.0]))


def test_cosine_basics():
    u = np.array([1.0, 2.0, 0.0])
    assert cosine_sim(u, u) == pytest.approx(1.0, abs=1e-15)
    assert cosine_sim(np.array([1.0, 0.0]), np.array([0.0, 5.0])) == 0.0
    with pytest.raises(DataError, match="zero vector"):
        cosine_sim(u, np.zeros(3))


@given(
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    st.floats(0.1, 100),
    st.floats(0.1, 100),
)
def test_cosine_is_scale_invariant(u, v, a, b):
    u, v = np.array(u), np.array(v)
    if np.linalg.norm(u) < 1e-3 or np.linalg.norm(v) < 1e-3:
        return
    assert cosine_sim(a * u, b * v) == pytest.approx(cosine_sim(u, v), abs=1e-9)
    assert -1.0 <= cosine_sim(u, v) <= 1.0


def test_cosine_matches_direct_formula():
    rng = np.random.default_rng(4)
    for _ in range(50):
        u, v = rng.standard_normal(16), rng.standard_normal(16)
        direct = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
        assert abs(cosine_sim(u, v) - direct) <= 1e-12


# ==============================================================================
# Similarity report
# ==============================================================================


def test_identical_models_on_duplicated_channels_agree_perfectly(preprocess_cfg):
    rng = np.random.default_rng(0)
    records = [
        SignalRecord(f"r{i}", f"s{i}", 50.0, np.tile(rng.standard_normal(150), (3, 1)))
        for i in range(3)
    ]
    model = Mae1dModel.initialize(ModelConfig.tiny(), seed=1)
    shared = {channel: model for channel in range(3)}
    report = similarity_report(shared, records, preprocess_cfg, repeats=2, seed=9)

    assert report.matrix.shape == (3, 3)
    np.testing.assert_allclose(report.matrix, np.ones((3, 3)), atol=1e-9)


def test_report_is_bounded_and_reproducible(models, eval_records, preprocess_cfg):
    report = similarity_report(models, eval_records, preprocess_cfg, repeats=2, seed=1)
    again = similarity_report(models, eval_records, preprocess_cfg, repeats=2, seed=1)

    assert report.channels == (0, 1, 2)
    assert (report.repeats, report.n_records) == (2, len(eval_records))
    np.testing.assert_array_equal(np.diag(report.matrix), np.ones(3))
    assert np.all(np.abs(report.matrix) <= 1.0)
    assert report.matrix.tobytes() == again.matrix.tobytes()
    assert -1.0 <= report.mean_signal_correlation <= 1.0


def test_report_needs_two_channels(models, eval_records, preprocess_cfg):
    with pytest.raises(DataError, match="two channel models"):
        similarity_report({0: models[0]}, eval_records, preprocess_cfg, seed=0)


def test_report_rejects_records_missing_a_channel(models, preprocess_cfg):
    short = [SignalRecord("r", "s", 50.0, np.random.default_rng(0).standard_normal((2, 150)))]
    with pytest.raises(DataError, match="channel 2"):
        similarity_report(models, short, preprocess_cfg, seed=0)
