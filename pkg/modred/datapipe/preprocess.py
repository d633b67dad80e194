"""
Preprocessing: linear resampling, random windowing and mean normalisation.

No filtering of any kind is applied.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from modred.core.errors import DataError
from modred.datapipe.records import SignalRecord


class PreprocessConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    target_fs: float = Field(default=500.0, gt=0)
    crop_seconds: float = Field(default=5.0, gt=0)
    normalize: bool = True

    @property
    def window_samples(self) -> int:
        return round(self.crop_seconds * self.target_fs)


def resampled_length(n_in: int, fs_in: float, fs_out: float) -> int:
    return round(n_in * fs_out / fs_in)


def resample_linear(signal: np.ndarray, fs_in: float, fs_out: float) -> np.ndarray:
    """
    Linearly interpolate onto a uniform ``fs_out`` grid of the same duration.

    ``signal`` is ``[n]`` or ``[C, n]``; the output has ``round(n * fs_out / fs_in)``
    samples per channel. Grid points past the last input sample hold its value.
    """
    n_in = np.shape(signal)[-1]
    if fs_in <= 0 or fs_out <= 0:
        raise ValueError("sampling rates must be positive")
    return resample_window(signal, fs_in, fs_out, 0, resampled_length(n_in, fs_in, fs_out))


def resample_window(
    signal: np.ndarray, fs_in: float, fs_out: float, start: int, length: int
) -> np.ndarray:
    """
    Output samples ``start:start + length`` of ``resample_linear``.

    Only the requested grid points are interpolated.
    """
    if fs_in <= 0 or fs_out <= 0:
        raise ValueError("sampling rates must be positive")
    values = np.asarray(signal, dtype=np.float64)
    n_in = values.shape[-1]
    if n_in < 2:
        raise DataError(f"cannot resample a signal of {n_in} sample(s)")
    if fs_in == fs_out:
        return values[..., start : start + length].copy()
    t_in = np.arange(n_in) / fs_in
    t_out = np.arange(start, start + length) / fs_out
    if values.ndim == 1:
        return np.interp(t_out, t_in, values)
    return np.stack([np.interp(t_out, t_in, row) for row in values])


def crop_random(record: SignalRecord, cfg: PreprocessConfig, rng_seed: int) -> np.ndarray:
    """
    Cut one seeded ``cfg.target_fs`` window shared by all channels.

    The offset is drawn on the resampled grid and only that window is
    resampled. Returns ``[C, window_samples]``.
    """
    window = cfg.window_samples
    available = resampled_length(record.n_samples, record.fs_hz, cfg.target_fs)
    if available < window:
        raise DataError(
            f"record {record.id} is {available / cfg.target_fs:.3f} s long, "
            f"shorter than the {cfg.crop_seconds} s window"
        )
    offset = int(np.random.default_rng(rng_seed).integers(0, available - window + 1))
    return resample_window(record.channels, record.fs_hz, cfg.target_fs, offset, window)


def mean_normalize(x: np.ndarray) -> np.ndarray:
    """Subtract each channel's mean (last axis); no scaling."""
    values = np.asarray(x, dtype=np.float64)
    return values - values.mean(axis=-1, keepdims=True)


def preprocess(record: SignalRecord, cfg: PreprocessConfig, rng_seed: int) -> np.ndarray:
    """Crop then, if enabled, mean-normalise."""
    window = crop_random(record, cfg, rng_seed)
    return mean_normalize(window) if cfg.normalize else window
