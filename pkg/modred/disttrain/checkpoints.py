"""Checkpoint sets: one checkpoint file per channel in a run's checkpoint directory."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

from modred.core.errors import CheckpointError, ConfigError
from modred.disttrain.trainer import ChannelTrainer
from modred.mae1d.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from modred.mae1d.config import ModelConfig


logger = logging.getLogger(__name__)

CHECKPOINT_SUFFIX = ".mr1d"


def checkpoint_path(directory: Path, channel: int) -> Path:
    return directory / f"channel_{channel:02d}{CHECKPOINT_SUFFIX}"


def save_checkpoint_set(
    trainers: Iterable[ChannelTrainer], directory: Path, *, epoch: int, step: int
) -> dict[int, Checkpoint]:
    """Snapshot and persist every trainer; returns the snapshots by channel."""
    saved = {}
    for trainer in trainers:
        checkpoint = trainer.snapshot(epoch=epoch, step=step)
        save_checkpoint(checkpoint, checkpoint_path(directory, trainer.channel))
        saved[trainer.channel] = checkpoint
    logger.info("Saved %d checkpoint(s) at epoch %d to %s", len(saved), epoch, directory)
    return saved


def has_checkpoint_set(directory: Path, channels: Sequence[int]) -> bool:
    return all(checkpoint_path(directory, c).exists() for c in channels)


def load_checkpoint_set(
    directory: Path, channels: Sequence[int], model: ModelConfig | None = None
) -> dict[int, Checkpoint]:
    """
    Load one checkpoint per channel.

    Raises:
        MissingRecordError: A channel's file is absent.
        CheckpointError: A file is corrupt, or the set disagrees on epoch/step.
        ConfigError: A checkpoint's model config differs from ``model``.
    """
    checkpoints = {c: load_checkpoint(checkpoint_path(directory, c)) for c in channels}
    for channel, checkpoint in checkpoints.items():
        if checkpoint.channel != channel:
            raise CheckpointError(
                f"{checkpoint_path(directory, channel)} holds channel {checkpoint.channel}"
            )
        if model is not None and checkpoint.config != model:
            raise ConfigError(
                f"checkpoint for channel {channel} was trained with a different model config"
            )
    positions = {(ckpt.epoch, ckpt.step) for ckpt in checkpoints.values()}
    if len(positions) > 1:
        raise CheckpointError(f"checkpoint set in {directory} is inconsistent: {positions}")
    return checkpoints
