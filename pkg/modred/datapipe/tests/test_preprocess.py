"""Tests for resampling, cropping, normalisation and batching."""

from __future__ import annotations

import numpy as np
import pytest

from modred.core.errors import DataError, InsufficientRecordsError
from modred.datapipe.batching import batch_iter, batch_plan, negative_keys
from modred.datapipe.preprocess import (
    PreprocessConfig,
    crop_random,
    mean_normalize,
    preprocess,
    resample_linear,
)
from modred.datapipe.records import SignalRecord


def _record(n_samples: int, fs_hz: float = 500.0, index: int = 0, channels: int = 2):
    rng = np.random.default_rng(index)
    return SignalRecord(
        id=f"r{index}",
        subject_id=f"s{index // 2}",
        fs_hz=fs_hz,
        channels=rng.standard_normal((channels, n_samples)),
    )


# ==============================================================================
# Resampling
# ==============================================================================


def test_257_hz_five_seconds_gives_2500_samples():
    assert resample_linear(np.zeros(1285), 257.0, 500.0).shape == (2500,)


def test_constant_survives_any_rate():
    out = resample_linear(np.full((2, 100), 3.5), 100.0, 37.0)
    np.testing.assert_array_equal(out, 3.5)


def test_same_rate_is_identity():
    x = np.random.default_rng(1).standard_normal(50)
    np.testing.assert_array_equal(resample_linear(x, 250.0, 250.0), x)


def test_linear_ramp_is_exact_at_interior_points():
    fs_in, fs_out = 100.0, 250.0
    x = 2.0 * np.arange(200) / fs_in + 1.0
    out = resample_linear(x, fs_in, fs_out)
    t_out = np.arange(out.size) / fs_out
    interior = t_out <= (x.size - 1) / fs_in
    np.testing.assert_allclose(out[interior], 2.0 * t_out[interior] + 1.0, atol=1e-12)


@pytest.mark.parametrize("n", [0, 1])
def test_resample_rejects_tiny_signals(n):
    with pytest.raises(DataError):
        resample_linear(np.zeros(n), 100.0, 200.0)


# ==============================================================================
# Cropping and normalisation
# ==============================================================================


def test_crop_length_matches_window():
    cfg = PreprocessConfig(target_fs=500.0, crop_seconds=5.0)
    assert crop_random(_record(4000), cfg, 0).shape == (2, 2500)


def test_record_of_exact_length_gives_full_window():
    record = _record(2500)
    cfg = PreprocessConfig(target_fs=500.0, crop_seconds=5.0)
    np.testing.assert_array_equal(crop_random(record, cfg, 42), record.channels)


def test_crop_is_seeded_and_shared_across_channels():
    record = SignalRecord(
        id="ramp", subject_id="s", fs_hz=10.0, channels=np.stack([np.arange(100.0)] * 2)
    )
    cfg = PreprocessConfig(target_fs=10.0, crop_seconds=2.0)
    first = crop_random(record, cfg, 7)
    np.testing.assert_array_equal(first, crop_random(record, cfg, 7))
    np.testing.assert_array_equal(first[0], first[1])


def test_short_record_is_rejected():
    cfg = PreprocessConfig(target_fs=500.0, crop_seconds=5.0)
    with pytest.raises(DataError, match="shorter"):
        crop_random(_record(1000), cfg, 0)


def test_off_rate_crop_equals_window_of_full_resample():
    record = _record(3000, fs_hz=257.0)
    cfg = PreprocessConfig(target_fs=500.0, crop_seconds=2.0)
    full = resample_linear(record.channels, 257.0, 500.0)
    offset = int(np.random.default_rng(9).integers(0, full.shape[1] - 1000 + 1))
    np.testing.assert_array_equal(crop_random(record, cfg, 9), full[:, offset : offset + 1000])


def test_crop_interpolates_only_the_window(mocker):
    interp = mocker.spy(np, "interp")
    cfg = PreprocessConfig(target_fs=500.0, crop_seconds=1.0)
    crop_random(_record(20_000, fs_hz=257.0), cfg, 3)
    assert interp.call_count == 2
    assert {len(call.args[0]) for call in interp.call_args_list} == {500}


def test_mean_normalize_zeroes_channel_means():
    x = np.random.default_rng(2).standard_normal((3, 400)) + 7.0
    assert np.max(np.abs(mean_normalize(x).mean(axis=-1))) < 1e-12


def test_mean_normalize_is_idempotent_and_shift_invariant():
    x = mean_normalize(np.random.default_rng(3).standard_normal((2, 50)))
    np.testing.assert_allclose(mean_normalize(x), x, atol=1e-15)
    np.testing.assert_allclose(mean_normalize(x + 4.0), x, atol=1e-12)


def test_preprocess_output_shape_and_means():
    cfg = PreprocessConfig(target_fs=50.0, crop_seconds=2.0)
    out = preprocess(_record(900, fs_hz=257.0), cfg, 3)
    assert out.shape == (2, 100)
    assert np.max(np.abs(out.mean(axis=-1))) < 1e-12


# ==============================================================================
# Batching
# ==============================================================================


@pytest.fixture
def ten_records() -> list[SignalRecord]:
    return [_record(300, fs_hz=50.0, index=i) for i in range(10)]


def test_partial_final_batch_is_kept(ten_records):
    cfg = PreprocessConfig(target_fs=50.0, crop_seconds=2.0)
    sizes = [batch.size for batch in batch_iter(ten_records, 4, cfg, epoch_seed=1)]
    assert sizes == [4, 4, 2]


def test_single_row_final_batch_is_dropped():
    assert [b.size for b in batch_plan(9, 4, epoch_seed=0)] == [4, 4]


def test_same_epoch_seed_reproduces_stream(ten_records):
    cfg = PreprocessConfig(target_fs=50.0, crop_seconds=2.0)
    first = list(batch_iter(ten_records, 4, cfg, epoch_seed=5))
    second = list(batch_iter(ten_records, 4, cfg, epoch_seed=5))
    for a, b in zip(first, second, strict=True):
        assert a.record_ids == b.record_ids
        np.testing.assert_array_equal(a.signals, b.signals)


def test_channel_subset_sees_same_windows(ten_records):
    cfg = PreprocessConfig(target_fs=50.0, crop_seconds=2.0)
    full = list(batch_iter(ten_records, 4, cfg, epoch_seed=5))
    only_one = list(batch_iter(ten_records, 4, cfg, epoch_seed=5, channels=[1]))
    for a, b in zip(full, only_one, strict=True):
        np.testing.assert_array_equal(a.signals[:, 1:2], b.signals)


def test_different_seeds_permute_differently():
    orders = {tuple(np.concatenate(batch_plan(10, 4, seed)).tolist()) for seed in range(10)}
    assert len(orders) == 10


def test_insufficient_records():
    cfg = PreprocessConfig(target_fs=50.0, crop_seconds=2.0)
    with pytest.raises(InsufficientRecordsError):
        list(batch_iter([_record(300, fs_hz=50.0)], 4, cfg, epoch_seed=0))


def test_record_negative_keys_are_record_ids():
    assert negative_keys(["a", "b"], ["s", "s"], "record") == ("a", "b")


def test_subject_negative_keys_when_subjects_differ():
    assert negative_keys(["a", "b", "c"], ["s", "s", "t"], "subject") == ("s", "s", "t")


def test_single_subject_batch_falls_back_to_record_ids(ten_records):
    cfg = PreprocessConfig(target_fs=50.0, crop_seconds=2.0)
    same_subject = [
        SignalRecord(id=f"x{i}", subject_id="only", fs_hz=50.0, channels=r.channels)
        for i, r in enumerate(ten_records[:4])
    ]
    for batch in batch_iter(same_subject, 2, cfg, epoch_seed=3):
        assert batch.row_keys("subject") == batch.record_ids
