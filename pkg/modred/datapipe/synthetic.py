"""
Synthetic multi-lead "hearts" with a known generative structure.

Each subject has a latent trajectory ``H(t)`` in ``R^k``: harmonics of a
subject-specific beat rate plus a Gaussian spike train standing in for R
peaks. Channel ``i`` observes ``P_i . H(t)`` plus white noise, with the
projections ``P_i`` fixed per generator. For twelve channels the limb leads
I and III and the six chest leads are independent projections, while
II, aVR, aVL and aVF are derived from I and III before noise is added, so the
Einthoven relation ``II = I + III`` holds exactly on noise-free output.

Subjects flagged with the synthetic ``mi`` label carry an extra broad
post-peak wave, giving downstream classifiers something to find.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from modred.core.errors import DataError
from modred.core.seeding import rng_for
from modred.datapipe.records import SignalRecord


logger = logging.getLogger(__name__)

LEAD_NAMES = ("I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6")
STANDARD_LEADS = len(LEAD_NAMES)
LEAD_I, LEAD_II, LEAD_III = 0, 1, 2


class SyntheticHeartConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_subjects: int = Field(default=5, ge=1)
    records_per_subject: int = Field(default=4, ge=1)
    latent_dim: int = Field(default=6, ge=1)
    n_channels: int = Field(default=12, ge=1)
    n_harmonics: int = Field(default=4, ge=1)
    beat_rate_hz: tuple[float, float] = (0.9, 1.6)
    spike_width_s: float = Field(default=0.02, gt=0)
    spike_amplitude: float = Field(default=1.5, ge=0)
    phase_jitter_s: float = Field(default=0.02, ge=0)
    mi_fraction: float = Field(default=0.4, ge=0, le=1)
    mi_wave_amplitude: float = Field(default=0.6, ge=0)
    noise_std: float = Field(default=0.01, ge=0)
    fs_hz: float = Field(default=500.0, gt=0)
    duration_s: float = Field(default=10.0, gt=0)
    rng_seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_rates(self) -> SyntheticHeartConfig:
        low, high = self.beat_rate_hz
        if not 0 < low <= high:
            raise ValueError("beat_rate_hz must be an increasing pair of positive rates")
        if high >= self.fs_hz / 2:
            raise ValueError("beat rate must stay below the Nyquist rate")
        if round(self.duration_s * self.fs_hz) < 2:
            raise ValueError("duration_s * fs_hz must give at least two samples")
        return self

    @property
    def n_samples(self) -> int:
        return round(self.duration_s * self.fs_hz)


class _Subject:
    """Dynamics parameters shared by every record of one subject."""

    def __init__(self, cfg: SyntheticHeartConfig, index: int, rate: float, mi: bool) -> None:
        rng = rng_for(cfg.rng_seed, "subject", index)
        self.index = index
        self.rate = rate
        self.mi = mi
        self.amplitudes = rng.normal(0.0, 1.0, (cfg.latent_dim, cfg.n_harmonics)) / np.arange(
            1, cfg.n_harmonics + 1
        )
        self.phases = rng.uniform(0.0, 2 * np.pi, (cfg.latent_dim, cfg.n_harmonics))
        self.spike_weights = rng.normal(0.0, 1.0, cfg.latent_dim)
        self.mi_weights = rng.normal(0.0, 1.0, cfg.latent_dim)

    @property
    def id(self) -> str:
        return f"s{self.index:03d}"


def _latent(cfg: SyntheticHeartConfig, subject: _Subject, t: np.ndarray) -> np.ndarray:
    """``H(t)`` as ``[latent_dim, n]``."""
    harmonics = np.arange(1, cfg.n_harmonics + 1)
    angles = 2 * np.pi * subject.rate * harmonics[None, :, None] * t[None, None, :]
    smooth = np.sum(
        subject.amplitudes[:, :, None] * np.sin(angles + subject.phases[:, :, None]), axis=1
    )

    period = 1.0 / subject.rate
    beats = np.arange(-1, int(np.ceil(t[-1] / period)) + 2) * period
    offsets = t[None, :] - beats[:, None]
    spikes = np.exp(-0.5 * (offsets / cfg.spike_width_s) ** 2).sum(axis=0)
    latent = smooth + cfg.spike_amplitude * subject.spike_weights[:, None] * spikes[None, :]

    if subject.mi:
        width = 4 * cfg.spike_width_s
        delay = 0.15 * period
        wave = np.exp(-0.5 * ((offsets - delay) / width) ** 2).sum(axis=0)
        latent = latent + cfg.mi_wave_amplitude * subject.mi_weights[:, None] * wave[None, :]
    return latent


def _project(
    cfg: SyntheticHeartConfig, projections: np.ndarray, latent: np.ndarray
) -> np.ndarray:
    independent = projections @ latent
    if cfg.n_channels != STANDARD_LEADS:
        return independent
    lead_i, lead_iii, chest = independent[0], independent[1], independent[2:]
    lead_ii = lead_i + lead_iii
    limb = np.stack(
        [
            lead_i,
            lead_ii,
            lead_iii,
            -(lead_i + lead_ii) / 2.0,
            (lead_i - lead_iii) / 2.0,
            (lead_ii + lead_iii) / 2.0,
        ]
    )
    return np.concatenate([limb, chest])


def independent_channel_count(n_channels: int) -> int:
    """Number of free projections (12 leads have 4 derived ones)."""
    return 8 if n_channels == STANDARD_LEADS else n_channels


def synth_generate(cfg: SyntheticHeartConfig) -> list[SignalRecord]:
    """Generate ``n_subjects * records_per_subject`` records, subject-major."""
    shape = (independent_channel_count(cfg.n_channels), cfg.latent_dim)
    projections = rng_for(cfg.rng_seed, "projections").normal(
        0.0, 1.0 / np.sqrt(cfg.latent_dim), shape
    )
    low, high = cfg.beat_rate_hz
    rates = np.linspace(low, high, cfg.n_subjects)
    rates = rates[rng_for(cfg.rng_seed, "rates").permutation(cfg.n_subjects)]
    n_mi = round(cfg.mi_fraction * cfg.n_subjects)
    mi_subjects = set(rng_for(cfg.rng_seed, "mi").permutation(cfg.n_subjects)[:n_mi].tolist())

    base_t = np.arange(cfg.n_samples) / cfg.fs_hz
    records: list[SignalRecord] = []
    for s in range(cfg.n_subjects):
        subject = _Subject(cfg, s, float(rates[s]), s in mi_subjects)
        for r in range(cfg.records_per_subject):
            rng = rng_for(cfg.rng_seed, "record", s, r)
            shift = rng.uniform(-cfg.phase_jitter_s, cfg.phase_jitter_s)
            clean = _project(cfg, projections, _latent(cfg, subject, base_t + shift))
            noisy = clean + rng.normal(0.0, cfg.noise_std, clean.shape) if cfg.noise_std else clean
            records.append(
                SignalRecord(
                    id=f"{subject.id}_r{r:02d}",
                    subject_id=subject.id,
                    fs_hz=cfg.fs_hz,
                    channels=noisy,
                    labels={"mi": "1" if subject.mi else "0"},
                )
            )
    logger.info(
        "Generated %d synthetic records (%d subjects, %d channels, %d MI subjects)",
        len(records),
        cfg.n_subjects,
        cfg.n_channels,
        len(mi_subjects),
    )
    return records


def einthoven_residual(records: Sequence[SignalRecord]) -> float:
    """Largest ``|II - (I + III)|`` over 12-lead records."""
    worst = 0.0
    for record in records:
        if record.n_channels != STANDARD_LEADS:
            raise DataError(f"record {record.id} has {record.n_channels} channels, expected 12")
        residual = record.channels[LEAD_II] - (record.channels[LEAD_I] + record.channels[LEAD_III])
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst


def check_einthoven(records: Sequence[SignalRecord], tol: float = 1e-9) -> float:
    """Raise ``DataError`` if any record breaks ``II = I + III`` by more than ``tol``."""
    worst = einthoven_residual(records)
    if worst > tol:
        raise DataError(f"Einthoven relation violated: max |II - (I + III)| = {worst:.3e}")
    return worst
