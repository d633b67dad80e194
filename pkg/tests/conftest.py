"""
Shared fixtures for the repository-level acceptance tests.

The dataset and the two trained model sets are module-scoped: training them is
the expensive part, and every acceptance check reads them without mutating.
"""

from __future__ import annotations

import pytest

from modred.datapipe.preprocess import PreprocessConfig
from modred.datapipe.records import SignalRecord
from modred.datapipe.synthetic import SyntheticHeartConfig, synth_generate
from modred.disttrain.config import TrainConfig
from modred.disttrain.reference import train_reference
from modred.mae1d.config import ModelConfig
from modred.mae1d.model import Mae1dModel


TRAIN_RECORDS_PER_SUBJECT = 4
ACCEPTANCE_SEED = 2024


def acceptance_train_config(*, align: bool) -> TrainConfig:
    """Four channels, tiny models, 30 epochs; only ``align`` differs between paired runs."""
    return TrainConfig(
        channels=[0, 1, 2, 3],
        model=ModelConfig.tiny(),
        preprocess=PreprocessConfig(target_fs=50.0, crop_seconds=2.0),
        batch_size=4,
        epochs=30,
        base_lr=3e-3,
        align=align,
        master_seed=ACCEPTANCE_SEED,
    )


@pytest.fixture(scope="module")
def acceptance_records() -> tuple[list[SignalRecord], list[SignalRecord]]:
    """Five subjects, eight records each: four per subject to train, four held out."""
    records = synth_generate(
        SyntheticHeartConfig(
            n_subjects=5,
            records_per_subject=2 * TRAIN_RECORDS_PER_SUBJECT,
            n_channels=4,
            latent_dim=4,
            fs_hz=50.0,
            duration_s=4.0,
            spike_width_s=0.04,
            rng_seed=ACCEPTANCE_SEED,
        )
    )
    train, held_out = [], []
    for position, record in enumerate(records):
        index_in_subject = position % (2 * TRAIN_RECORDS_PER_SUBJECT)
        (train if index_in_subject < TRAIN_RECORDS_PER_SUBJECT else held_out).append(record)
    return train, held_out


def _train(align: bool, records: list[SignalRecord]) -> dict[int, Mae1dModel]:
    result = train_reference(acceptance_train_config(align=align), records=records)
    return {channel: ckpt.to_model() for channel, ckpt in result.checkpoints.items()}


@pytest.fixture(scope="module")
def aligned_models(acceptance_records) -> dict[int, Mae1dModel]:
    return _train(True, acceptance_records[0])


@pytest.fixture(scope="module")
def baseline_models(acceptance_records) -> dict[int, Mae1dModel]:
    return _train(False, acceptance_records[0])
