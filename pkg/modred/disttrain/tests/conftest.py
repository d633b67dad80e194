"""Shared fixtures for training tests: tiny models over tiny synthetic data."""

from __future__ import annotations

import dataclasses

import pytest

from modred.datapipe.preprocess import PreprocessConfig
from modred.datapipe.records import SignalRecord
from modred.datapipe.synthetic import SyntheticHeartConfig, synth_generate
from modred.disttrain.config import TrainConfig
from modred.mae1d.config import ModelConfig


@pytest.fixture(scope="session")
def tiny_records() -> list[SignalRecord]:
    """Six 4-channel records (3 subjects x 2), 3 s at 50 Hz."""
    cfg = SyntheticHeartConfig(
        n_subjects=3,
        records_per_subject=2,
        n_channels=4,
        latent_dim=4,
        fs_hz=50.0,
        duration_s=3.0,
        spike_width_s=0.04,
        rng_seed=11,
    )
    return synth_generate(cfg)


@pytest.fixture(scope="session")
def one_subject_records(tiny_records) -> list[SignalRecord]:
    """The tiny records relabelled so every one belongs to the same subject."""
    return [dataclasses.replace(record, subject_id="s0") for record in tiny_records]


def make_train_config(**overrides) -> TrainConfig:
    """Tiny config: 4 channels, B=2 over six records gives 3 steps per epoch."""
    values = {
        "channels": [0, 1, 2, 3],
        "model": ModelConfig.tiny(),
        "preprocess": PreprocessConfig(target_fs=50.0, crop_seconds=2.0),
        "batch_size": 2,
        "epochs": 1,
        "base_lr": 1e-3,
        "master_seed": 7,
    }
    values.update(overrides)
    return TrainConfig(**values)


@pytest.fixture
def make_config():
    """Factory fixture: ``make_config(epochs=2, align=False, ...)``."""
    return make_train_config
