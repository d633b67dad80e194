"""
Cross-channel similarity: signal correlation against embedding cosine similarity.

The report matrix carries mean zero-lag Pearson correlation of the channel
signals below the diagonal and mean cosine similarity of the channels' unmasked
CLS embeddings above it. Both triangles are computed from the same crops.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cosine
from scipy.stats import pearsonr

from modred.core.errors import DataError, NumericError
from modred.core.seeding import derive_seed
from modred.datapipe.preprocess import PreprocessConfig, preprocess
from modred.datapipe.records import SignalRecord, require_channels
from modred.evalkit.embeddings import ChannelModels, embed_window, model_channels


logger = logging.getLogger(__name__)

DEFAULT_REPEATS = 10


def _finite_vector(values: np.ndarray, what: str) -> np.ndarray:
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim != 1:
        raise DataError(f"{what} must be one-dimensional, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise NumericError(f"{what} contains non-finite values")
    return vector


def pearson_corr(x: np.ndarray, y: np.ndarray) -> float:
    """Zero-lag Pearson correlation of two equal-length signals, clipped to ``[-1, 1]``."""
    x = _finite_vector(x, "x")
    y = _finite_vector(y, "y")
    if x.size != y.size:
        raise DataError(f"signals differ in length ({x.size} vs {y.size})")
    if x.size < 2:
        raise DataError("correlation needs at least two samples")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise DataError("correlation is undefined for a zero-variance signal")
    return float(np.clip(pearsonr(x, y).statistic, -1.0, 1.0))


def cosine_sim(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity ``<u, v> / (|u| |v|)``, clipped to ``[-1, 1]``."""
    u = _finite_vector(u, "u")
    v = _finite_vector(v, "v")
    if u.size != v.size:
        raise DataError(f"embeddings differ in length ({u.size} vs {v.size})")
    if not np.any(u) or not np.any(v):
        raise DataError("cosine similarity is undefined for a zero vector")
    return float(np.clip(1.0 - cosine(u, v), -1.0, 1.0))


@dataclass(frozen=True)
class SimilarityReport:
    channels: tuple[int, ...]
    matrix: np.ndarray
    repeats: int
    n_records: int

    def _triangle(self, upper: bool) -> np.ndarray:
        rows, cols = np.triu_indices(len(self.channels), k=1)
        return self.matrix[rows, cols] if upper else self.matrix[cols, rows]

    @property
    def mean_embedding_similarity(self) -> float:
        return float(self._triangle(upper=True).mean())

    @property
    def mean_signal_correlation(self) -> float:
        return float(self._triangle(upper=False).mean())


def similarity_report(
    models: ChannelModels,
    records: Sequence[SignalRecord],
    cfg: PreprocessConfig,
    *,
    repeats: int = DEFAULT_REPEATS,
    seed: int,
) -> SimilarityReport:
    """
    Average signal and embedding similarity for every channel pair.

    Each repeat draws one crop per record; the crop is shared by every channel
    pair and by both triangles.

    Raises:
        DataError: Fewer than two models, no records, a missing channel or a flat crop.
    """
    channels = model_channels(models)
    if len(channels) < 2:
        raise DataError("similarity report needs at least two channel models")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if not records:
        raise DataError("similarity report needs at least one record")
    require_channels(records, channels)

    size = len(channels)
    totals = np.zeros((size, size))
    for repeat in range(repeats):
        for position, record in enumerate(records):
            window = preprocess(record, cfg, derive_seed(seed, "similarity", repeat, position))
            embeddings = embed_window(models, window)
            for a in range(size):
                for b in range(a + 1, size):
                    ca, cb = channels[a], channels[b]
                    totals[b, a] += pearson_corr(window[ca], window[cb])
                    totals[a, b] += cosine_sim(embeddings[ca], embeddings[cb])

    matrix = totals / (repeats * len(records))
    np.fill_diagonal(matrix, 1.0)
    report = SimilarityReport(tuple(channels), matrix, repeats, len(records))
    logger.info(
        "Similarity over %d records x %d repeats: signal=%.4f embedding=%.4f",
        len(records),
        repeats,
        report.mean_signal_correlation,
        report.mean_embedding_similarity,
    )
    return report
