"""Fixtures for evaluation tests: untrained tiny models over tiny synthetic records."""

from __future__ import annotations

import pytest

from modred.datapipe.preprocess import PreprocessConfig
from modred.datapipe.synthetic import SyntheticHeartConfig, synth_generate
from modred.mae1d.config import ModelConfig
from modred.mae1d.model import Mae1dModel


@pytest.fixture(scope="session")
def eval_records():
    """Six 3-channel records, 3 s at 50 Hz."""
    cfg = SyntheticHeartConfig(
        n_subjects=3,
        records_per_subject=2,
        n_channels=3,
        latent_dim=3,
        fs_hz=50.0,
        duration_s=3.0,
        spike_width_s=0.04,
        rng_seed=5,
    )
    return synth_generate(cfg)


@pytest.fixture(scope="session")
def preprocess_cfg():
    """Two-second crops at 50 Hz match the tiny model's 100-sample input."""
    return PreprocessConfig(target_fs=50.0, crop_seconds=2.0)


@pytest.fixture(scope="session")
def models():
    config = ModelConfig.tiny()
    return {channel: Mae1dModel.initialize(config, seed=100 + channel) for channel in range(3)}
