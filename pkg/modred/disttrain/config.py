"""
Training configuration shared by the reference trainer, the coordinator and the workers.

Every process of a distributed run loads the same ``TrainConfig``; together with
the per-epoch seed broadcast by the coordinator it fully determines the data
order, masks, triplets and updates each process computes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from modred.core.errors import ConfigError
from modred.datapipe.preprocess import PreprocessConfig
from modred.mae1d.config import ModelConfig
from modred.numcore.optim import AdamWConfig, LrSchedule


MAX_CHANNEL_ID = 255


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    channels: list[int] = Field(default_factory=lambda: list(range(12)))
    model: ModelConfig = Field(default_factory=ModelConfig)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)
    optimizer: AdamWConfig = Field(default_factory=AdamWConfig)
    batch_size: int = Field(default=256, ge=2)
    epochs: int = Field(default=200, ge=1)
    base_lr: float = Field(default=1e-3, ge=0.0)
    warmup_epochs: int = Field(default=0, ge=0)
    curriculum: bool = True
    align: bool = True
    margin: float = Field(default=0.2, ge=0.0)
    masked_only_loss: bool = False
    negative_key: Literal["record", "subject"] = "record"
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    manifest: Path | None = None
    checkpoint_dir: Path | None = None

    @model_validator(mode="after")
    def _check_consistency(self) -> TrainConfig:
        if not self.channels:
            raise ValueError("channels must not be empty")
        if len(set(self.channels)) != len(self.channels):
            raise ValueError(f"channels must be distinct, got {self.channels}")
        if any(not 0 <= c <= MAX_CHANNEL_ID for c in self.channels):
            raise ValueError(f"channel ids must be in [0, {MAX_CHANNEL_ID}]")
        if self.align and len(self.channels) < 2:
            raise ValueError("alignment needs at least two channels (or set align=false)")
        window = self.preprocess.window_samples
        if window != self.model.signal_len:
            raise ValueError(
                f"crop_seconds * target_fs = {window} samples but the model expects "
                f"signal_len = {self.model.signal_len}"
            )
        if self.warmup_epochs >= self.epochs:
            raise ValueError("warmup_epochs must be smaller than epochs")
        return self

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def lr_schedule(self) -> LrSchedule:
        return LrSchedule(
            base_lr=self.base_lr, total_epochs=self.epochs, warmup_epochs=self.warmup_epochs
        )

    def require_manifest(self) -> Path:
        if self.manifest is None:
            raise ConfigError("no data manifest configured (set train.manifest)")
        return self.manifest
