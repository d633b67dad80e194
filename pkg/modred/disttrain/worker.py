"""
Worker role of a distributed training run: one process per channel.

A worker owns exactly one channel model. It announces itself with ``HELLO``,
then follows the coordinator: on ``EPOCH`` it walks the epoch's batches (the
same stream every peer sees, restricted to its channel), and per step runs
the masked forward pass, ships its CLS matrix as ``EMB``, waits for the
matching ``GRAD``, completes the backward pass and optimizer step, and reports
``DONE``. Without alignment it skips the exchange and never waits on ``GRAD``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from modred.core.errors import ModredError, ProtocolError, StepMismatchError
from modred.datapipe.batching import batch_iter
from modred.datapipe.records import SignalRecord, read_dataset, require_channels
from modred.disttrain.checkpoints import checkpoint_path
from modred.disttrain.config import TrainConfig
from modred.disttrain.trainer import ChannelTrainer
from modred.disttrain.transport import Connection
from modred.disttrain.wire import (
    Done,
    Embeddings,
    EpochBegin,
    ErrorReport,
    Gradients,
    Hello,
    Shutdown,
)
from modred.mae1d.checkpoint import Checkpoint, save_checkpoint
from modred.numcore.optim import cosine_lr


logger = logging.getLogger(__name__)


@dataclass
class WorkerResult:
    checkpoint: Checkpoint
    step_losses: list[float] = field(default_factory=list)


class Worker:
    def __init__(
        self,
        cfg: TrainConfig,
        channel: int,
        connection: Connection,
        *,
        records: Sequence[SignalRecord] | None = None,
    ) -> None:
        if channel not in cfg.channels:
            raise ProtocolError(f"channel {channel} is not part of this run")
        self.cfg = cfg
        self.channel = channel
        self.connection = connection
        self.records = list(records) if records is not None else read_dataset(
            cfg.require_manifest()
        )
        require_channels(self.records, [channel])
        self.trainer = ChannelTrainer.initialize(cfg, channel)
        self.step = 0
        self.epochs_done = 0
        self.step_losses: list[float] = []

    def run(self) -> WorkerResult:
        try:
            self.connection.send(Hello(self.channel))
            while True:
                message = self.connection.recv()
                match message:
                    case EpochBegin():
                        self._run_epoch(message)
                    case Shutdown():
                        logger.info("Channel %d worker shutting down", self.channel)
                        break
                    case ErrorReport(reason=reason):
                        raise ProtocolError(f"coordinator aborted the run: {reason}")
                    case _:
                        raise ProtocolError(
                            f"unexpected {type(message).__name__} between epochs"
                        )
        except ModredError as exc:
            logger.error("Channel %d worker failed: %s", self.channel, exc)
            self._notify(str(exc))
            raise
        finally:
            self.connection.close()
        return WorkerResult(
            checkpoint=self.trainer.snapshot(epoch=self.epochs_done, step=self.step),
            step_losses=self.step_losses,
        )

    def _run_epoch(self, begin: EpochBegin) -> None:
        cfg = self.cfg
        lr = cosine_lr(begin.epoch, cfg.lr_schedule())
        logger.info(
            "Channel %d: epoch %d (w_align=%.4f, w_rec=%.4f, lr=%.3g)",
            self.channel,
            begin.epoch,
            begin.w_align,
            begin.w_rec,
            lr,
        )
        batches = batch_iter(
            self.records,
            cfg.batch_size,
            cfg.preprocess,
            begin.epoch_seed,
            channels=[self.channel],
        )
        for batch in batches:
            step = self.step
            cls_matrix = self.trainer.forward(
                batch.signals[:, 0, :], step=step, epoch_seed=begin.epoch_seed
            )
            grad = None
            if cfg.align:
                self.connection.send(Embeddings(step=step, matrix=cls_matrix))
                grad = self._await_gradients(step, cls_matrix.shape)
            rec_loss = self.trainer.finish(grad, step=step, w_rec=begin.w_rec, lr=lr)
            self.connection.send(Done(step=step, rec_loss=rec_loss))
            self.step_losses.append(rec_loss)
            self.step += 1
        self.epochs_done = begin.epoch + 1
        if cfg.checkpoint_dir is not None:
            save_checkpoint(
                self.trainer.snapshot(epoch=self.epochs_done, step=self.step),
                checkpoint_path(cfg.checkpoint_dir, self.channel),
            )

    def _await_gradients(self, step: int, shape: tuple[int, ...]) -> np.ndarray:
        message = self.connection.recv()
        if isinstance(message, ErrorReport):
            raise ProtocolError(f"coordinator aborted the run: {message.reason}")
        if not isinstance(message, Gradients):
            raise ProtocolError(f"expected GRAD for step {step}, got {type(message).__name__}")
        if message.step != step:
            raise StepMismatchError(
                f"GRAD for step {message.step} arrived while step {step} is pending"
            )
        if message.matrix.shape != shape:
            raise ProtocolError(f"GRAD matrix {message.matrix.shape} does not match {shape}")
        return message.matrix

    def _notify(self, reason: str) -> None:
        try:
            self.connection.send(ErrorReport(reason))
        except ModredError:
            logger.debug("Coordinator unreachable while reporting failure")


def run_worker(
    cfg: TrainConfig,
    channel: int,
    connection: Connection,
    *,
    records: Sequence[SignalRecord] | None = None,
) -> WorkerResult:
    """Serve one channel until the coordinator shuts the run down."""
    return Worker(cfg, channel, connection, records=records).run()
