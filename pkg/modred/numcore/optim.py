"""
AdamW and the cosine learning-rate schedule.

AdamW applies decoupled weight decay (``p <- p - lr * wd * p``) before the
bias-corrected Adam update. The schedule decays from ``base_lr`` at epoch 0
to exactly 0 at ``total_epochs``, with an optional linear warmup.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from modred.core.errors import NumericError
from modred.numcore.tensor import Tensor


logger = logging.getLogger(__name__)


class AdamWConfig(BaseModel):
    """Optimizer constants (the published AdamW defaults)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)
    weight_decay: float = Field(default=0.01, ge=0.0)


class LrSchedule(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    base_lr: float = Field(default=1e-3, ge=0.0)
    total_epochs: int = Field(default=200, ge=1)
    warmup_epochs: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _warmup_within_run(self) -> LrSchedule:
        if self.warmup_epochs >= self.total_epochs:
            raise ValueError("warmup_epochs must be smaller than total_epochs")
        return self


@dataclass
class AdamWState:
    """
    Per-model optimizer state.

    ``first_moment`` / ``second_moment`` are keyed by parameter name and share
    shapes with their parameters. ``step_count`` is the number of updates taken.
    """

    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.01
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_config(cls, config: AdamWConfig) -> AdamWState:
        return cls(
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
            weight_decay=config.weight_decay,
        )

    def scalars(self) -> dict[str, float | int]:
        return {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
            "weight_decay": self.weight_decay,
            "step_count": self.step_count,
        }


def adamw_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray] | None,
    state: AdamWState,
    lr: float,
) -> None:
    """
    Apply one AdamW update in place.

    Args:
        params: Named parameters to update.
        grads: Gradients by parameter name. ``None`` reads each parameter's
            accumulated ``.grad``.
        state: Optimizer state; moments are created lazily on first use.
        lr: Learning rate for this step (``>= 0``).

    Raises:
        ValueError: Negative learning rate or gradient shape mismatch.
        NumericError: A gradient holds NaN/Inf.
    """
    if lr < 0:
        raise ValueError(f"learning rate must be non-negative, got {lr}")

    resolved: dict[str, np.ndarray] = {}
    for name, param in params.items():
        grad = param.grad if grads is None else grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        if grad.shape != param.shape:
            raise ValueError(f"gradient for {name} has shape {grad.shape}, expected {param.shape}")
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for parameter {name}")
        resolved[name] = grad

    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t

    for name, param in params.items():
        grad = resolved[name]
        m = state.first_moment.setdefault(name, np.zeros_like(param.data))
        v = state.second_moment.setdefault(name, np.zeros_like(param.data))

        param.data -= lr * state.weight_decay * param.data

        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad

        m_hat = m / correction1
        v_hat = v / correction2
        param.data -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)


def cosine_lr(epoch: int, sched: LrSchedule) -> float:
    """Learning rate for ``epoch`` in ``[0, total_epochs]``."""
    if epoch < 0 or epoch > sched.total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {sched.total_epochs}]")
    if sched.warmup_epochs and epoch < sched.warmup_epochs:
        return sched.base_lr * (epoch + 1) / sched.warmup_epochs
    span = sched.total_epochs - sched.warmup_epochs
    progress = (epoch - sched.warmup_epochs) / span
    return sched.base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))
