"""
Sinusoidal curriculum over epochs.

At epoch ``i`` of ``N`` the objective is ``sin(i/N * pi/2) * align + cos(i/N * pi/2) * rec``,
shifting weight from reconstruction to alignment. The endpoints are exact:
``(0, 1)`` at ``i = 0`` and ``(1, 0)`` at ``i = N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from modred.core.errors import NumericError
from modred.numcore import ops
from modred.numcore.tensor import Tensor


@dataclass(frozen=True)
class CurriculumState:
    epoch: int
    total_epochs: int

    def __post_init__(self) -> None:
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be at least 1")
        if not 0 <= self.epoch <= self.total_epochs:
            raise ValueError(f"epoch {self.epoch} outside [0, {self.total_epochs}]")


def curriculum_weights(state: CurriculumState) -> tuple[float, float]:
    """Return ``(w_align, w_rec)`` for the state's epoch."""
    if state.epoch == state.total_epochs:
        return 1.0, 0.0
    angle = state.epoch / state.total_epochs * (math.pi / 2.0)
    return math.sin(angle), math.cos(angle)


def epoch_weights(
    epoch: int, total_epochs: int, *, curriculum: bool = True, align: bool = True
) -> tuple[float, float]:
    """
    Loss weights a training run uses at ``epoch``.

    With alignment off the run is a plain reconstruction MAE ``(0, 1)``. With
    alignment on but the curriculum off both terms are weighted 1 throughout.
    """
    if not align:
        return 0.0, 1.0
    if not curriculum:
        return 1.0, 1.0
    return curriculum_weights(CurriculumState(epoch, total_epochs))


def combined_loss[T: (float, Tensor)](rec: T, align: T, state: CurriculumState) -> T:
    """``w_align * align + w_rec * rec`` for plain floats or graph tensors."""
    w_align, w_rec = curriculum_weights(state)
    if isinstance(rec, Tensor) and isinstance(align, Tensor):
        if not (np.all(np.isfinite(rec.data)) and np.all(np.isfinite(align.data))):
            raise NumericError("combined_loss inputs must be finite")
        return ops.add(ops.mul(align, w_align), ops.mul(rec, w_rec))
    if not (math.isfinite(rec) and math.isfinite(align)):
        raise NumericError(f"combined_loss inputs must be finite (rec={rec}, align={align})")
    return w_align * align + w_rec * rec
