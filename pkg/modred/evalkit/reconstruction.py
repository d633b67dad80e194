"""Cross-channel reconstruction: MAE matrix and plot-ready traces."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

from modred.core.errors import DataError
from modred.core.seeding import derive_seed
from modred.datapipe.preprocess import PreprocessConfig, preprocess
from modred.datapipe.records import SignalRecord, require_channels
from modred.evalkit.embeddings import ChannelModels, model_channels
from modred.mae1d.model import Mae1dModel, cross_decode, encode
from modred.mae1d.patching import MaskPlan, random_mask
from modred.numcore import ops
from modred.numcore.tensor import no_grad


logger = logging.getLogger(__name__)

DEFAULT_MASK_RATIO = 0.75

TRACE_COLUMNS = (
    "id",
    "subject_id",
    "target_channel",
    "source_channel",
    "sample",
    "time_s",
    "original",
    "reconstructed",
    "masked",
)


@dataclass(frozen=True)
class ReconMaeMatrix:
    """``matrix[i, j]``: MAE of channel ``j`` rebuilt from channel ``i``'s masked embedding."""

    channels: tuple[int, ...]
    matrix: np.ndarray
    n_records: int

    @property
    def mean_diagonal(self) -> float:
        return float(np.mean(np.diag(self.matrix)))

    @property
    def mean_off_diagonal(self) -> float:
        off = ~np.eye(len(self.channels), dtype=bool)
        return float(self.matrix[off].mean())


def _mask_plan(model: Mae1dModel, mask_ratio: float, seed: int, position: int, source: int):
    n_patches = model.config.n_patches
    return random_mask(n_patches, mask_ratio, derive_seed(seed, "recon-mask", position, source))


def _rebuild(source: Mae1dModel, target: Mae1dModel, signal: np.ndarray, plan: MaskPlan):
    with no_grad():
        enc_out = encode(source, signal, plan)
        patches = cross_decode(target, enc_out, source.config)
        return ops.reshape(patches, (target.config.signal_len,)).numpy()


def _window(record: SignalRecord, cfg: PreprocessConfig, seed: int, position: int):
    return preprocess(record, cfg, derive_seed(seed, "recon-crop", position))


def recon_mae_report(
    models: ChannelModels,
    records: Sequence[SignalRecord],
    cfg: PreprocessConfig,
    *,
    mask_ratio: float = DEFAULT_MASK_RATIO,
    seed: int,
) -> ReconMaeMatrix:
    """
    Mean absolute error of every source-to-target cross-decode.

    Each source channel is encoded once per record under its own seeded mask;
    the MAE is taken over the full window, masked and visible patches alike.
    """
    channels = model_channels(models)
    if not records:
        raise DataError("reconstruction report needs at least one record")
    require_channels(records, channels)

    size = len(channels)
    totals = np.zeros((size, size))
    for position, record in enumerate(records):
        window = _window(record, cfg, seed, position)
        for i, source in enumerate(channels):
            plan = _mask_plan(models[source], mask_ratio, seed, position, source)
            for j, target in enumerate(channels):
                rebuilt = _rebuild(models[source], models[target], window[source], plan)
                totals[i, j] += float(np.mean(np.abs(rebuilt - window[target])))

    report = ReconMaeMatrix(tuple(channels), totals / len(records), len(records))
    logger.info(
        "Reconstruction MAE over %d records: diagonal=%.4g off-diagonal=%.4g",
        len(records),
        report.mean_diagonal,
        report.mean_off_diagonal if size > 1 else float("nan"),
    )
    return report


def reconstruction_traces(
    models: ChannelModels,
    records: Sequence[SignalRecord],
    cfg: PreprocessConfig,
    *,
    source_channel: int | None = None,
    mask_ratio: float = DEFAULT_MASK_RATIO,
    seed: int,
) -> pd.DataFrame:
    """
    Original and reconstructed traces for every record and target channel.

    With ``source_channel=None`` each channel is rebuilt from its own masked
    embedding; otherwise every channel is rebuilt from ``source_channel``. The
    ``masked`` column flags samples inside patches hidden from the encoder.
    Crops and masks match :func:`recon_mae_report` under the same seed.
    """
    channels = model_channels(models)
    if source_channel is not None and source_channel not in models:
        raise DataError(f"no model for source channel {source_channel}")
    require_channels(records, channels)

    frames = []
    for position, record in enumerate(records):
        window = _window(record, cfg, seed, position)
        for target in channels:
            source = target if source_channel is None else source_channel
            model = models[source]
            plan = _mask_plan(model, mask_ratio, seed, position, source)
            rebuilt = _rebuild(model, models[target], window[source], plan)
            n_samples = rebuilt.size
            frames.append(
                pd.DataFrame(
                    {
                        "id": record.id,
                        "subject_id": record.subject_id,
                        "target_channel": target,
                        "source_channel": source,
                        "sample": np.arange(n_samples),
                        "time_s": np.arange(n_samples) / cfg.target_fs,
                        "original": window[target],
                        "reconstructed": rebuilt,
                        "masked": np.repeat(plan.masked_flags(), model.config.patch_len),
                    }
                )
            )
    if not frames:
        return pd.DataFrame(columns=list(TRACE_COLUMNS))
    return pd.concat(frames, ignore_index=True)
