"""Fixtures for command-line tests: tiny run configurations written to disk."""

from __future__ import annotations

import pytest

from modred.cli.config import EvalConfig, RunConfig
from modred.datapipe.preprocess import PreprocessConfig
from modred.datapipe.synthetic import SyntheticHeartConfig
from modred.disttrain.config import TrainConfig
from modred.mae1d.config import ModelConfig


def tiny_run_config(**overrides) -> RunConfig:
    """Four channels, six 3 s records at 50 Hz, one epoch of three steps."""
    values = {
        "train": TrainConfig(
            channels=[0, 1, 2, 3],
            model=ModelConfig.tiny(),
            preprocess=PreprocessConfig(target_fs=50.0, crop_seconds=2.0),
            batch_size=2,
            epochs=1,
        ),
        "synth": SyntheticHeartConfig(
            n_subjects=3,
            records_per_subject=2,
            n_channels=4,
            latent_dim=4,
            fs_hz=50.0,
            duration_s=3.0,
            spike_width_s=0.04,
        ),
        "eval": EvalConfig(repeats=2, knn_folds=3),
        "seed": 13,
    }
    values.update(overrides)
    return RunConfig(**values)


@pytest.fixture
def write_config(tmp_path):
    """Write a run configuration to ``tmp_path`` and return its path."""

    def write(cfg: RunConfig | None = None, name: str = "run.json"):
        path = tmp_path / name
        path.write_text((cfg or tiny_run_config(out_dir=tmp_path / "out")).model_dump_json())
        return path

    return write


@pytest.fixture(autouse=True)
def _no_config_env(monkeypatch):
    monkeypatch.delenv("MODRED_CONFIG", raising=False)
