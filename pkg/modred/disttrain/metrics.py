"""
Per-epoch metrics log.

One CSV row per completed epoch with header
``epoch,step,w_align,w_rec,rec_loss,align_loss,total_loss,lr``. ``step`` is
the global step count at the end of the epoch; losses are means over the
epoch's steps, with the reconstruction loss first averaged across channels.
Floats are written with full round-trip precision so a resumed run can be
compared bit for bit with an uninterrupted one.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import pandas as pd

from modred.core import storage
from modred.core.errors import DataError, MissingRecordError, NumericError


logger = logging.getLogger(__name__)

METRICS_NAME = "metrics.csv"


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    step: int
    w_align: float
    w_rec: float
    rec_loss: float
    align_loss: float
    total_loss: float
    lr: float


METRIC_COLUMNS = tuple(f.name for f in fields(EpochMetrics))


@dataclass
class EpochAccumulator:
    """Collects per-step losses for one epoch."""

    rec_losses: list[float] = field(default_factory=list)
    align_losses: list[float] = field(default_factory=list)

    def add_step(self, channel_rec_losses: Sequence[float], align_loss: float) -> None:
        """Record one step; ``channel_rec_losses`` must be in configured channel order."""
        rec = float(np.mean(channel_rec_losses))
        if not (math.isfinite(rec) and math.isfinite(align_loss)):
            raise NumericError(f"non-finite step loss (rec={rec}, align={align_loss})")
        self.rec_losses.append(rec)
        self.align_losses.append(float(align_loss))

    def finish(
        self, *, epoch: int, step: int, w_align: float, w_rec: float, lr: float
    ) -> EpochMetrics:
        if not self.rec_losses:
            raise DataError(f"epoch {epoch} ran no steps")
        rec = float(np.mean(self.rec_losses))
        align = float(np.mean(self.align_losses))
        return EpochMetrics(
            epoch=epoch,
            step=step,
            w_align=w_align,
            w_rec=w_rec,
            rec_loss=rec,
            align_loss=align,
            total_loss=w_align * align + w_rec * rec,
            lr=lr,
        )


def metrics_frame(rows: Sequence[EpochMetrics]) -> pd.DataFrame:
    return pd.DataFrame([asdict(row) for row in rows], columns=list(METRIC_COLUMNS))


def write_metrics(rows: Sequence[EpochMetrics], path: Path) -> None:
    storage.write_text(path, metrics_frame(rows).to_csv(index=False, float_format="%.17g"))
    logger.debug("Wrote %d metrics rows to %s", len(rows), path)


def read_metrics(path: Path) -> list[EpochMetrics]:
    if not path.exists():
        raise MissingRecordError(f"File not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    if tuple(frame.columns) != METRIC_COLUMNS:
        raise DataError(f"{path} has columns {list(frame.columns)}, expected {METRIC_COLUMNS}")
    return [
        EpochMetrics(
            epoch=int(row.epoch),
            step=int(row.step),
            w_align=float(row.w_align),
            w_rec=float(row.w_rec),
            rec_loss=float(row.rec_loss),
            align_loss=float(row.align_loss),
            total_loss=float(row.total_loss),
            lr=float(row.lr),
        )
        for row in frame.itertuples(index=False)
    ]
