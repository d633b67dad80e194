"""
CLS embedding extraction and CSV export.

All inference here runs under ``no_grad`` with every patch visible.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from modred.core import storage
from modred.core.errors import DataError
from modred.core.seeding import derive_seed
from modred.datapipe.preprocess import PreprocessConfig, preprocess
from modred.datapipe.records import SignalRecord, require_channels
from modred.mae1d.model import Mae1dModel, encode
from modred.numcore.tensor import no_grad


logger = logging.getLogger(__name__)

type ChannelModels = Mapping[int, Mae1dModel]


def model_channels(models: ChannelModels) -> list[int]:
    if not models:
        raise ValueError("at least one channel model is required")
    return sorted(models)


def cls_embedding(model: Mae1dModel, signal: np.ndarray) -> np.ndarray:
    """Unmasked CLS embedding of one preprocessed window, shape ``[enc_dim]``."""
    with no_grad():
        return encode(model, signal).cls.numpy()[0]


def embed_window(models: ChannelModels, window: np.ndarray) -> dict[int, np.ndarray]:
    """Embed row ``c`` of a ``[C_all, T]`` window with channel ``c``'s model."""
    return {channel: cls_embedding(model, window[channel]) for channel, model in models.items()}


def embed_records(
    models: ChannelModels,
    records: Sequence[SignalRecord],
    cfg: PreprocessConfig,
    *,
    seed: int,
) -> dict[int, np.ndarray]:
    """
    One seeded crop per record, embedded by every channel model.

    Returns:
        ``{channel: [n_records, enc_dim]}``; row ``p`` belongs to ``records[p]``.
    """
    channels = model_channels(models)
    require_channels(records, channels)
    rows: dict[int, list[np.ndarray]] = {c: [] for c in channels}
    for position, record in enumerate(records):
        window = preprocess(record, cfg, derive_seed(seed, "embed-crop", position))
        for channel, embedding in embed_window(models, window).items():
            rows[channel].append(embedding)
    return {c: np.stack(rows[c]) if rows[c] else np.empty((0, 0)) for c in channels}


def embedding_frame(
    models: ChannelModels,
    records: Sequence[SignalRecord],
    cfg: PreprocessConfig,
    *,
    seed: int,
) -> pd.DataFrame:
    """One row per (record, channel): ``id, subject_id, channel, e0 .. e{d-1}``."""
    embeddings = embed_records(models, records, cfg, seed=seed)
    channels = model_channels(models)
    dim = models[channels[0]].config.enc_dim
    rows = []
    for position, record in enumerate(records):
        for channel in channels:
            rows.append(
                [record.id, record.subject_id, channel, *embeddings[channel][position].tolist()]
            )
    columns = ["id", "subject_id", "channel", *(f"e{i}" for i in range(dim))]
    return pd.DataFrame(rows, columns=columns)


def export_embeddings(
    models: ChannelModels,
    records: Sequence[SignalRecord],
    cfg: PreprocessConfig,
    out_path: Path,
    *,
    seed: int,
) -> pd.DataFrame:
    """Write :func:`embedding_frame` to ``out_path`` as CSV and return it."""
    frame = embedding_frame(models, records, cfg, seed=seed)
    try:
        storage.write_text(out_path, frame.to_csv(index=False, float_format="%.17g"))
    except OSError as exc:
        raise DataError(f"cannot write embeddings to {out_path}: {exc}") from exc
    logger.info("Exported %d embedding rows to %s", len(frame), out_path)
    return frame
