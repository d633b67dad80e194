"""Binary64 tensors with reverse-mode autodiff, AdamW and the cosine schedule."""

from modred.numcore.gradcheck import grad_check
from modred.numcore.optim import AdamWConfig, AdamWState, LrSchedule, adamw_step, cosine_lr
from modred.numcore.tensor import Tensor, as_tensor, backward, is_grad_enabled, no_grad


__all__ = [
    "AdamWConfig",
    "AdamWState",
    "LrSchedule",
    "Tensor",
    "adamw_step",
    "as_tensor",
    "backward",
    "cosine_lr",
    "grad_check",
    "is_grad_enabled",
    "no_grad",
]
