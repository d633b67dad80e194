"""
Coordinator role of a distributed training run.

The coordinator never touches model parameters. It accepts one connection per
configured channel, then for every epoch broadcasts ``EPOCH`` and for every
step:

1. collects ``EMB`` from all workers (full barrier),
2. resolves the step ledger into the alignment loss and per-channel gradients,
3. sends each worker its ``GRAD``,
4. collects every worker's ``DONE`` (with its reconstruction loss).

With alignment switched off steps 1-3 are skipped. At the end every worker
receives ``SHUTDOWN``. Any failure (duplicate channel, malformed frame, lost
worker) is fatal: remaining workers get ``ERR`` and the run aborts.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

from modred.core.errors import (
    DuplicateChannelError,
    ModredError,
    ProtocolError,
    StepMismatchError,
    exit_code_for,
)
from modred.datapipe.batching import batch_plan, negative_keys
from modred.datapipe.records import RecordKey, load_manifest
from modred.disttrain.config import TrainConfig
from modred.disttrain.metrics import (
    METRICS_NAME,
    EpochAccumulator,
    EpochMetrics,
    write_metrics,
)
from modred.disttrain.trainer import EpochPlan, StepLedger
from modred.disttrain.transport import Connection, Listener
from modred.disttrain.wire import (
    Done,
    Embeddings,
    EpochBegin,
    ErrorReport,
    Gradients,
    Hello,
    Message,
    Shutdown,
)


logger = logging.getLogger(__name__)


@dataclass
class CoordinatorSummary:
    metrics: list[EpochMetrics] = field(default_factory=list)
    embeddings_received: int = 0
    gradients_sent: int = 0
    steps: int = 0


class Coordinator:
    """Drives one distributed run over already-configured transports."""

    def __init__(
        self,
        cfg: TrainConfig,
        listener: Listener,
        *,
        record_keys: Sequence[RecordKey] | None = None,
    ) -> None:
        self.cfg = cfg
        self.listener = listener
        if record_keys is None:
            record_keys = [entry.key for entry in load_manifest(cfg.require_manifest()).records]
        self.record_keys = list(record_keys)
        self.workers: dict[int, Connection] = {}
        self.summary = CoordinatorSummary()

    # -- public -------------------------------------------------------------

    def run(self) -> CoordinatorSummary:
        try:
            self._handshake()
            step = 0
            for epoch in range(self.cfg.epochs):
                step = self._run_epoch(EpochPlan.build(self.cfg, epoch), step)
            self._broadcast(Shutdown())
            logger.info(
                "Run complete: %d steps, %d EMB in, %d GRAD out",
                self.summary.steps,
                self.summary.embeddings_received,
                self.summary.gradients_sent,
            )
            return self.summary
        except ModredError as exc:
            self._abort(str(exc))
            raise
        finally:
            self._close_all()

    # -- phases -------------------------------------------------------------

    def _handshake(self) -> None:
        expected = set(self.cfg.channels)
        while len(self.workers) < len(expected):
            connection = self.listener.accept()
            message = connection.recv()
            if not isinstance(message, Hello):
                self._reject(connection, f"expected HELLO, got {type(message).__name__}")
                raise ProtocolError(f"expected HELLO, got {type(message).__name__}")
            channel = message.channel
            if channel in self.workers:
                self._reject(connection, f"channel {channel} is already connected")
                raise DuplicateChannelError(f"duplicate HELLO for channel {channel}")
            if channel not in expected:
                self._reject(connection, f"channel {channel} is not part of this run")
                raise ProtocolError(f"HELLO from unconfigured channel {channel}")
            self.workers[channel] = connection
            logger.info(
                "Worker for channel %d joined (%d/%d)", channel, len(self.workers), len(expected)
            )

    def _run_epoch(self, plan: EpochPlan, step: int) -> int:
        cfg = self.cfg
        self._broadcast(
            EpochBegin(
                epoch=plan.epoch,
                epoch_seed=plan.epoch_seed,
                w_align=plan.w_align,
                w_rec=plan.w_rec,
            )
        )
        accumulator = EpochAccumulator()
        for members in batch_plan(len(self.record_keys), cfg.batch_size, plan.epoch_seed):
            align_loss = 0.0
            if cfg.align:
                keys = [self.record_keys[int(i)] for i in members]
                align_loss = self._exchange(plan, step, keys)
            rec_losses = self._collect_done(step)
            accumulator.add_step([rec_losses[c] for c in cfg.channels], align_loss)
            self.summary.steps += 1
            step += 1

        metrics = accumulator.finish(
            epoch=plan.epoch, step=step, w_align=plan.w_align, w_rec=plan.w_rec, lr=plan.lr
        )
        self.summary.metrics.append(metrics)
        logger.info(
            "epoch %d: w_align=%.4f w_rec=%.4f rec=%.6g align=%.6g total=%.6g lr=%.3g",
            metrics.epoch,
            metrics.w_align,
            metrics.w_rec,
            metrics.rec_loss,
            metrics.align_loss,
            metrics.total_loss,
            metrics.lr,
        )
        if cfg.checkpoint_dir is not None:
            write_metrics(self.summary.metrics, cfg.checkpoint_dir / METRICS_NAME)
        return step

    def _exchange(self, plan: EpochPlan, step: int, keys: Sequence[RecordKey]) -> float:
        ledger = StepLedger(
            step=step,
            channels=tuple(self.cfg.channels),
            row_keys=negative_keys(
                [key.id for key in keys],
                [key.subject_id for key in keys],
                self.cfg.negative_key,
            ),
        )
        for channel in self.cfg.channels:
            message = self._expect(channel, Embeddings)
            ledger.receive(channel, message.step, message.matrix)
            self.summary.embeddings_received += 1
        alignment = ledger.resolve(plan.epoch_seed, plan.w_align, self.cfg.margin)
        for channel in self.cfg.channels:
            self.workers[channel].send(Gradients(step=step, matrix=alignment.gradients[channel]))
            self.summary.gradients_sent += 1
        logger.debug("step %d: align_loss=%.6g", step, alignment.loss)
        return alignment.loss

    def _collect_done(self, step: int) -> dict[int, float]:
        losses = {}
        for channel in self.cfg.channels:
            message = self._expect(channel, Done)
            if message.step != step:
                raise StepMismatchError(
                    f"channel {channel} finished step {message.step}, expected {step}"
                )
            if message.rec_loss is None:
                raise ProtocolError(f"channel {channel} sent DONE without a reconstruction loss")
            losses[channel] = message.rec_loss
        return losses

    # -- helpers ------------------------------------------------------------

    def _expect[M: Message](self, channel: int, kind: type[M]) -> M:
        message = self.workers[channel].recv()
        if isinstance(message, ErrorReport):
            raise ProtocolError(f"worker {channel} aborted: {message.reason}")
        if not isinstance(message, kind):
            raise ProtocolError(
                f"expected {kind.__name__} from channel {channel}, got {type(message).__name__}"
            )
        return message

    def _broadcast(self, message: Message) -> None:
        for channel in self.cfg.channels:
            self.workers[channel].send(message)

    def _reject(self, connection: Connection, reason: str) -> None:
        try:
            connection.send(ErrorReport(reason))
        except ModredError:
            logger.debug("Could not deliver rejection: %s", reason)
        connection.close()

    def _abort(self, reason: str) -> None:
        logger.error("Aborting run: %s", reason)
        for channel, connection in self.workers.items():
            try:
                connection.send(ErrorReport(reason))
            except ModredError:
                logger.debug("Worker %d unreachable during abort", channel)

    def _close_all(self) -> None:
        for connection in self.workers.values():
            connection.close()
        self.listener.close()


def run_coordinator(
    cfg: TrainConfig,
    listener: Listener,
    *,
    record_keys: Sequence[RecordKey] | None = None,
) -> int:
    """Run the coordinator to completion and return a process exit status."""
    try:
        Coordinator(cfg, listener, record_keys=record_keys).run()
    except ModredError as exc:
        logger.error("Coordinator failed: %s", exc)
        return exit_code_for(exc)
    return 0
