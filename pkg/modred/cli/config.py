"""
Run configuration documents and loading.

A run is described by one JSON document (``RunConfig``). The loader checks for
the document in this order:

1. ``--config PATH`` on the command line
2. The ``MODRED_CONFIG`` environment variable
3. Built-in defaults

Command-line overrides (``--seed``, ``--out``, ``--manifest``, ``--no-align``)
are merged into the document and the result is validated again, so an override
can never produce a configuration the schema would reject.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from modred.core import storage
from modred.core.errors import ConfigError, MissingRecordError
from modred.datapipe.synthetic import SyntheticHeartConfig
from modred.disttrain.config import TrainConfig


logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "MODRED_CONFIG"
RESOLVED_CONFIG_NAME = "resolved_config.json"


class EvalConfig(BaseModel):
    """Knobs for the evaluation reports."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    repeats: int = Field(default=10, ge=1)
    mask_ratio: float = Field(default=0.75, ge=0.0, lt=1.0)
    mi_folds: int = Field(default=5, ge=2)
    knn_folds: int = Field(default=10, ge=2)
    knn_k: int = Field(default=1, ge=1)
    label: str = "mi"
    channel: int = Field(default=0, ge=0)
    subject_disjoint: bool = False
    baseline_checkpoint_dir: Path | None = None


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    train: TrainConfig = Field(default_factory=TrainConfig)
    synth: SyntheticHeartConfig = Field(default_factory=SyntheticHeartConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    out_dir: Path = Path("modred-out")
    seed: int | None = Field(default=None, ge=0, lt=2**64)

    @property
    def run_seed(self) -> int:
        return self.train.master_seed if self.seed is None else self.seed

    @property
    def checkpoint_dir(self) -> Path:
        return self.train.checkpoint_dir or self.out_dir / "checkpoints"


def _validate(data: dict[str, Any], source: str) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"Invalid run configuration ({source}): {exc}") from exc


def load_run_config(config_path: Path | None = None) -> RunConfig:
    """
    Load the run configuration from ``config_path``, ``MODRED_CONFIG`` or defaults.

    Raises:
        ConfigError: The file is missing, is not JSON, or fails validation.
    """
    if config_path is None and os.getenv(CONFIG_ENV_VAR):
        config_path = Path(os.environ[CONFIG_ENV_VAR])

    if config_path is None:
        logger.info("No configuration given; using defaults")
        return RunConfig()

    logger.info("Loading run configuration from %s", config_path)
    try:
        return storage.read_model(config_path, RunConfig, error_class=ConfigError)
    except MissingRecordError as exc:
        raise ConfigError(f"Configuration file not found: {config_path}") from exc


def apply_overrides(
    cfg: RunConfig,
    *,
    seed: int | None = None,
    out_dir: Path | None = None,
    manifest: Path | None = None,
    align: bool | None = None,
) -> RunConfig:
    """
    Merge command-line overrides and fill in derived defaults.

    The returned document pins ``seed`` and propagates it into the training
    master seed and the synthetic generator seed.
    """
    data = cfg.model_dump()
    if out_dir is not None:
        data["out_dir"] = out_dir
    if seed is not None:
        data["seed"] = seed
    if data["seed"] is None:
        data["seed"] = cfg.train.master_seed
    data["train"]["master_seed"] = data["seed"]
    data["synth"]["rng_seed"] = data["seed"]
    if manifest is not None:
        data["train"]["manifest"] = manifest
    if align is not None:
        data["train"]["align"] = align
    return _validate(data, "command-line overrides")


def config_json(cfg: RunConfig) -> str:
    return cfg.model_dump_json(indent=2)


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the resolved configuration JSON."""
    return storage.sha256_text(config_json(cfg))


def write_resolved_config(cfg: RunConfig) -> Path:
    """Write the resolved document beside the run's outputs and return its path."""
    path = cfg.out_dir / RESOLVED_CONFIG_NAME
    storage.write_text(path, config_json(cfg))
    logger.info("Wrote resolved configuration to %s", path)
    return path
