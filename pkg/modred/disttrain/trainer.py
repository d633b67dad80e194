"""
Per-channel training steps and the coordinator's step ledger.

A training step is split in two halves so the same code serves the
single-process reference trainer and the distributed workers:

1. ``ChannelTrainer.forward`` masks, encodes and decodes every batch row of the
   trainer's channel and returns the ``[B, enc_dim]`` CLS matrix. The graph is
   kept alive until the step finishes.
2. ``ChannelTrainer.finish`` runs a single reverse pass seeded with
   ``w_rec`` at the reconstruction loss and, when alignment is on, the
   externally computed ``d(w_align * L_align)/dh`` at the CLS matrix, then
   takes one AdamW step.

Between the two halves a ``StepLedger`` gathers the CLS matrices of all
channels, draws the seeded triplet assignment and computes the alignment loss
and its gradient per channel. In the reference trainer the ledger is filled
in-process; in a distributed run it lives in the coordinator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from modred.core.errors import NumericError, ProtocolError, StepMismatchError
from modred.core.seeding import derive_seed
from modred.disttrain.config import TrainConfig
from modred.mae1d.checkpoint import Checkpoint
from modred.mae1d.model import Mae1dModel, decode, encode
from modred.mae1d.patching import patchify, random_mask
from modred.numcore import ops
from modred.numcore.optim import AdamWState, adamw_step, cosine_lr
from modred.numcore.tensor import Tensor, backward
from modred.objectives.curriculum import epoch_weights
from modred.objectives.losses import (
    alignment_loss,
    masked_reconstruction_loss,
    reconstruction_loss,
)
from modred.objectives.triplets import assign_triplets


logger = logging.getLogger(__name__)


# ==============================================================================
# Epoch plan
# ==============================================================================


@dataclass(frozen=True)
class EpochPlan:
    """What every process needs to know about an epoch before its first step."""

    epoch: int
    epoch_seed: int
    w_align: float
    w_rec: float
    lr: float

    @classmethod
    def build(cls, cfg: TrainConfig, epoch: int) -> EpochPlan:
        w_align, w_rec = epoch_weights(
            epoch, cfg.epochs, curriculum=cfg.curriculum, align=cfg.align
        )
        return cls(
            epoch=epoch,
            epoch_seed=derive_seed(cfg.master_seed, "epoch", epoch),
            w_align=w_align,
            w_rec=w_rec,
            lr=cosine_lr(epoch, cfg.lr_schedule()),
        )


# ==============================================================================
# Channel trainer
# ==============================================================================


@dataclass
class _PendingStep:
    step: int
    cls_stack: Tensor
    rec_loss: Tensor


@dataclass
class ChannelTrainer:
    """One channel's model, optimizer state and in-flight step."""

    channel: int
    model: Mae1dModel
    optimizer: AdamWState
    masked_only_loss: bool = False
    _pending: _PendingStep | None = field(default=None, init=False, repr=False)

    @classmethod
    def initialize(cls, cfg: TrainConfig, channel: int) -> ChannelTrainer:
        model = Mae1dModel.initialize(cfg.model, derive_seed(cfg.master_seed, "init", channel))
        return cls(
            channel=channel,
            model=model,
            optimizer=AdamWState.from_config(cfg.optimizer),
            masked_only_loss=cfg.masked_only_loss,
        )

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint, cfg: TrainConfig) -> ChannelTrainer:
        return cls(
            channel=checkpoint.channel,
            model=checkpoint.to_model(),
            optimizer=checkpoint.optimizer,
            masked_only_loss=cfg.masked_only_loss,
        )

    def snapshot(self, *, epoch: int, step: int) -> Checkpoint:
        return Checkpoint.capture(
            self.model, self.optimizer, channel=self.channel, epoch=epoch, step=step
        )

    @property
    def pending_step(self) -> int | None:
        return None if self._pending is None else self._pending.step

    def forward(self, signals: np.ndarray, *, step: int, epoch_seed: int) -> np.ndarray:
        """
        Masked forward pass over one batch of this channel's windows.

        Args:
            signals: ``[B, signal_len]`` preprocessed windows.
            step: Global step index (keys the mask seeds).
            epoch_seed: Seed of the current epoch.

        Returns:
            A copy of the ``[B, enc_dim]`` CLS embedding matrix.
        """
        if self._pending is not None:
            raise StepMismatchError(
                f"channel {self.channel} still has step {self._pending.step} in flight"
            )
        cfg = self.model.config
        self.model.zero_grad()
        cls_rows: list[Tensor] = []
        losses: list[Tensor] = []
        for row, signal in enumerate(np.asarray(signals, dtype=np.float64)):
            plan = random_mask(
                cfg.n_patches,
                cfg.mask_ratio,
                derive_seed(epoch_seed, "mask", step, self.channel, row),
            )
            enc_out = encode(self.model, signal, plan)
            predicted = decode(self.model, enc_out)
            target = patchify(signal, cfg.patch_len)
            if self.masked_only_loss:
                loss = masked_reconstruction_loss(target, predicted, plan.masked_flags())
            else:
                loss = reconstruction_loss(target, predicted)
            cls_rows.append(enc_out.cls)
            losses.append(ops.reshape(loss, (1,)))

        cls_stack = ops.concat(cls_rows, axis=0)
        rec_loss = ops.mean(ops.concat(losses, axis=0))
        self._pending = _PendingStep(step=step, cls_stack=cls_stack, rec_loss=rec_loss)
        logger.debug(
            "channel %d step %d: forward rec_loss=%.6g", self.channel, step, rec_loss.item()
        )
        return cls_stack.data.copy()

    def finish(
        self,
        grad_cls: np.ndarray | None,
        *,
        step: int,
        w_rec: float,
        lr: float,
    ) -> float:
        """
        Complete the pending step and return its reconstruction loss.

        ``grad_cls`` is the coordinator's gradient at the CLS matrix, or
        ``None`` when the run does not align.
        """
        pending = self._pending
        if pending is None or pending.step != step:
            raise StepMismatchError(
                f"channel {self.channel} asked to finish step {step}, "
                f"pending step is {self.pending_step}"
            )
        seeds: list[tuple[Tensor, np.ndarray | float | None]] = [(pending.rec_loss, w_rec)]
        if grad_cls is not None:
            if grad_cls.shape != pending.cls_stack.shape:
                raise ValueError(
                    f"CLS gradient has shape {grad_cls.shape}, "
                    f"expected {pending.cls_stack.shape}"
                )
            seeds.append((pending.cls_stack, grad_cls))
        rec_value = pending.rec_loss.item()
        backward(seeds)
        adamw_step(self.model.params, None, self.optimizer, lr)
        self._pending = None
        return rec_value


# ==============================================================================
# Step ledger
# ==============================================================================


@dataclass(frozen=True)
class StepAlignment:
    loss: float
    gradients: dict[int, np.ndarray]


@dataclass
class StepLedger:
    """
    Embeddings gathered for one step.

    Gradients may only be computed once every channel has reported
    (``complete``); ``resolve`` enforces the barrier.
    """

    step: int
    channels: tuple[int, ...]
    row_keys: tuple[str, ...]
    embeddings: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return len(self.embeddings) == len(self.channels)

    def receive(self, channel: int, step: int, matrix: np.ndarray) -> None:
        if step != self.step:
            raise StepMismatchError(
                f"channel {channel} sent embeddings for step {step}, ledger is at {self.step}"
            )
        if channel not in self.channels:
            raise ProtocolError(f"embeddings from unknown channel {channel}")
        if channel in self.embeddings:
            raise ProtocolError(f"channel {channel} sent embeddings twice for step {step}")
        if matrix.ndim != 2 or matrix.shape[0] != len(self.row_keys):
            raise ProtocolError(
                f"channel {channel} sent a {matrix.shape} matrix for a "
                f"{len(self.row_keys)}-row batch"
            )
        if not np.all(np.isfinite(matrix)):
            raise NumericError(f"channel {channel} sent non-finite embeddings")
        self.embeddings[channel] = matrix

    def resolve(self, epoch_seed: int, w_align: float, margin: float) -> StepAlignment:
        """Alignment loss and ``d(w_align * L_align)/dh`` for every channel."""
        if not self.complete:
            missing = sorted(set(self.channels) - set(self.embeddings))
            raise ProtocolError(f"step {self.step} resolved before channels {missing} reported")
        assignment = assign_triplets(
            self.row_keys,
            len(self.channels),
            derive_seed(epoch_seed, "triplet", self.step),
            margin,
        )
        leaves = [Tensor(self.embeddings[c], requires_grad=True) for c in self.channels]
        loss = alignment_loss(leaves, assignment)
        if w_align != 0.0:
            backward([(loss, w_align)])
            gradients = {c: leaf.grad for c, leaf in zip(self.channels, leaves, strict=True)}
        else:
            gradients = {c: np.zeros_like(self.embeddings[c]) for c in self.channels}
        return StepAlignment(loss=loss.item(), gradients=gradients)
