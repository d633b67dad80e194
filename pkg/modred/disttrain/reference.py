"""
Single-process reference trainer.

Runs every channel model in one process through exactly the code a distributed
run uses (``ChannelTrainer`` halves plus a ``StepLedger`` per step), in the
same operation order. Distributed runs are validated against it.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from modred.datapipe.batching import batch_iter
from modred.datapipe.records import SignalRecord, read_dataset, require_channels
from modred.disttrain.checkpoints import (
    has_checkpoint_set,
    load_checkpoint_set,
    save_checkpoint_set,
)
from modred.disttrain.config import TrainConfig
from modred.disttrain.metrics import (
    METRICS_NAME,
    EpochAccumulator,
    EpochMetrics,
    read_metrics,
    write_metrics,
)
from modred.disttrain.trainer import ChannelTrainer, EpochPlan, StepLedger
from modred.mae1d.checkpoint import Checkpoint


logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    checkpoints: dict[int, Checkpoint]
    metrics: list[EpochMetrics]
    metrics_path: Path | None = None


def _fresh_state(cfg: TrainConfig) -> tuple[list[ChannelTrainer], int, int, list[EpochMetrics]]:
    trainers = [ChannelTrainer.initialize(cfg, channel) for channel in cfg.channels]
    return trainers, 0, 0, []


def _resumed_state(
    cfg: TrainConfig, directory: Path
) -> tuple[list[ChannelTrainer], int, int, list[EpochMetrics]]:
    checkpoints = load_checkpoint_set(directory, cfg.channels, cfg.model)
    first = checkpoints[cfg.channels[0]]
    trainers = [ChannelTrainer.from_checkpoint(checkpoints[c], cfg) for c in cfg.channels]
    history = []
    if (directory / METRICS_NAME).exists():
        rows = read_metrics(directory / METRICS_NAME)
        history = [row for row in rows if row.epoch < first.epoch]
    logger.info("Resuming from epoch %d (step %d) in %s", first.epoch, first.step, directory)
    return trainers, first.epoch, first.step, history


def train_reference(
    cfg: TrainConfig,
    *,
    records: Sequence[SignalRecord] | None = None,
    resume: bool = False,
    stop_after_epoch: int | None = None,
) -> TrainResult:
    """
    Train all channel models in-process.

    Args:
        cfg: Training configuration.
        records: Dataset records; read from ``cfg.manifest`` when omitted.
        resume: Continue from the checkpoint set in ``cfg.checkpoint_dir``
            (a fresh run starts when none exists).
        stop_after_epoch: Stop once this many epochs have completed.

    Returns:
        Final checkpoints per channel and the metrics history.

    Raises:
        DataError: Unreadable data, or records missing a configured channel.
        NumericError: A loss or gradient became non-finite.
    """
    records = list(records) if records is not None else read_dataset(cfg.require_manifest())
    require_channels(records, cfg.channels)

    directory = cfg.checkpoint_dir
    if resume and directory is not None and has_checkpoint_set(directory, cfg.channels):
        trainers, start_epoch, step, history = _resumed_state(cfg, directory)
    else:
        if resume:
            logger.info("No checkpoint set to resume from; starting a fresh run")
        trainers, start_epoch, step, history = _fresh_state(cfg)

    last_epoch = cfg.epochs if stop_after_epoch is None else min(stop_after_epoch, cfg.epochs)
    for epoch in range(start_epoch, last_epoch):
        plan = EpochPlan.build(cfg, epoch)
        step, metrics = _run_epoch(cfg, records, trainers, plan, step)
        history.append(metrics)
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
        if directory is not None:
            save_checkpoint_set(trainers, directory, epoch=epoch + 1, step=step)
            write_metrics(history, directory / METRICS_NAME)

    completed = max(start_epoch, last_epoch)
    checkpoints = {t.channel: t.snapshot(epoch=completed, step=step) for t in trainers}
    metrics_path = directory / METRICS_NAME if directory is not None else None
    return TrainResult(checkpoints=checkpoints, metrics=history, metrics_path=metrics_path)


def _run_epoch(
    cfg: TrainConfig,
    records: Sequence[SignalRecord],
    trainers: Sequence[ChannelTrainer],
    plan: EpochPlan,
    step: int,
) -> tuple[int, EpochMetrics]:
    accumulator = EpochAccumulator()
    batches = batch_iter(
        records, cfg.batch_size, cfg.preprocess, plan.epoch_seed, channels=cfg.channels
    )
    for batch in batches:
        embeddings = {
            trainer.channel: trainer.forward(
                batch.signals[:, position, :], step=step, epoch_seed=plan.epoch_seed
            )
            for position, trainer in enumerate(trainers)
        }

        gradients = None
        align_loss = 0.0
        if cfg.align:
            ledger = StepLedger(
                step=step,
                channels=tuple(cfg.channels),
                row_keys=batch.row_keys(cfg.negative_key),
            )
            for channel, matrix in embeddings.items():
                ledger.receive(channel, step, matrix)
            alignment = ledger.resolve(plan.epoch_seed, plan.w_align, cfg.margin)
            gradients, align_loss = alignment.gradients, alignment.loss

        rec_losses = [
            trainer.finish(
                None if gradients is None else gradients[trainer.channel],
                step=step,
                w_rec=plan.w_rec,
                lr=plan.lr,
            )
            for trainer in trainers
        ]
        accumulator.add_step(rec_losses, align_loss)
        logger.debug("step %d: rec=%s align=%.6g", step, rec_losses, align_loss)
        step += 1

    metrics = accumulator.finish(
        epoch=plan.epoch, step=step, w_align=plan.w_align, w_rec=plan.w_rec, lr=plan.lr
    )
    return step, metrics
