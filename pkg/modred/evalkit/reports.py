"""CSV and JSON report writers shared by every evaluation."""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from modred.core import storage
from modred.evalkit.classifiers import CvResult


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


class ReportSummary(BaseModel):
    """JSON summary written next to every report."""

    model_config = ConfigDict(extra="forbid")

    metric: str
    mean: float
    std: float
    seed: int
    config_hash: str


def matrix_frame(matrix: np.ndarray, channels: Sequence[int]) -> pd.DataFrame:
    """A ``C x C`` matrix with one header column per channel and no index column."""
    return pd.DataFrame(np.asarray(matrix), columns=[str(c) for c in channels])


def write_matrix_csv(matrix: np.ndarray, channels: Sequence[int], path: Path) -> None:
    frame = matrix_frame(matrix, channels)
    storage.write_text(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT))
    logger.info("Wrote %dx%d matrix to %s", len(channels), len(channels), path)


def cv_frame(result: CvResult) -> pd.DataFrame:
    return pd.DataFrame({"fold": range(len(result.per_fold)), result.metric: result.per_fold})


def write_cv_csv(result: CvResult, path: Path) -> None:
    storage.write_text(path, cv_frame(result).to_csv(index=False, float_format=FLOAT_FORMAT))
    logger.info("Wrote %d %s folds to %s", len(result.per_fold), result.metric, path)


def channel_cv_frame(results: Mapping[tuple[str, int], CvResult]) -> pd.DataFrame:
    """Long format: one row per ``(model, channel, fold)``."""
    rows = [
        {"model": model, "channel": channel, "fold": fold, result.metric: value}
        for (model, channel), result in results.items()
        for fold, value in enumerate(result.per_fold)
    ]
    return pd.DataFrame(rows)


def write_channel_cv_csv(results: Mapping[tuple[str, int], CvResult], path: Path) -> None:
    frame = channel_cv_frame(results)
    storage.write_text(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT))
    logger.info("Wrote %d per-channel fold rows to %s", len(frame), path)


def summarize(
    metric: str, values: Sequence[float], *, seed: int, config_hash: str
) -> ReportSummary:
    data = np.asarray(values, dtype=np.float64)
    return ReportSummary(
        metric=metric,
        mean=float(data.mean()),
        std=float(data.std()),
        seed=seed,
        config_hash=config_hash,
    )


def write_summary(summary: ReportSummary, path: Path) -> None:
    storage.write_model(summary, path)
