"""
Command implementations.

Each ``cmd_*`` takes the resolved ``RunConfig`` plus the parsed arguments and
returns a process exit status. Failures are raised as ``ModredError`` and mapped
to exit codes by ``main``.
"""

from __future__ import annotations

import argparse
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from modred.cli.config import RunConfig, config_hash
from modred.core import storage
from modred.core.errors import ConfigError, DataError
from modred.datapipe.records import SignalRecord, read_dataset, write_dataset
from modred.datapipe.synthetic import check_einthoven, synth_generate
from modred.disttrain.checkpoints import load_checkpoint_set
from modred.disttrain.config import TrainConfig
from modred.disttrain.coordinator import run_coordinator
from modred.disttrain.launch import run_local
from modred.disttrain.reference import train_reference
from modred.disttrain.transport import SocketListener, connect_socket
from modred.disttrain.worker import run_worker
from modred.evalkit.classifiers import CvResult, knn_cv, logreg_cv
from modred.evalkit.embeddings import ChannelModels, embed_records, export_embeddings
from modred.evalkit.reconstruction import recon_mae_report, reconstruction_traces
from modred.evalkit.reports import (
    summarize,
    write_channel_cv_csv,
    write_cv_csv,
    write_matrix_csv,
    write_summary,
)
from modred.evalkit.similarity import similarity_report
from modred.mae1d.model import Mae1dModel


logger = logging.getLogger(__name__)

DATA_DIR_NAME = "data"
EMBEDDINGS_NAME = "embeddings.csv"
EVAL_KINDS = ("similarity", "recon-mae", "mi-clf", "knn")
NATIVE_SOURCE = "native"


def _train_config(run: RunConfig) -> TrainConfig:
    """Training config with the checkpoint directory filled in."""
    return run.train.model_copy(update={"checkpoint_dir": run.checkpoint_dir})


def _load_records(run: RunConfig) -> list[SignalRecord]:
    return read_dataset(run.train.require_manifest())


def _load_models(run: RunConfig, directory: Path | None = None) -> dict[int, Mae1dModel]:
    checkpoints = load_checkpoint_set(
        directory or run.checkpoint_dir, run.train.channels, run.train.model
    )
    return {channel: ckpt.to_model() for channel, ckpt in checkpoints.items()}


# ==============================================================================
# Data and training
# ==============================================================================


def cmd_synth(run: RunConfig, args: argparse.Namespace) -> int:
    records = synth_generate(run.synth)
    if args.check_einthoven:
        worst = check_einthoven(records, tol=args.einthoven_tol)
        logger.info("Einthoven check passed (max residual %.3e)", worst)
    manifest_path = write_dataset(records, run.out_dir / DATA_DIR_NAME)
    print(manifest_path)
    return 0


def cmd_pretrain(run: RunConfig, args: argparse.Namespace) -> int:
    result = train_reference(_train_config(run), resume=args.resume)
    final = result.metrics[-1] if result.metrics else None
    if final is not None:
        logger.info("Finished epoch %d with total loss %.6g", final.epoch, final.total_loss)
    return 0


def cmd_pretrain_dist(run: RunConfig, args: argparse.Namespace) -> int:
    cfg = _train_config(run)
    match args.role:
        case "local":
            run_local(cfg, transport=args.transport, timeout_seconds=args.timeout)
            return 0
        case "coordinator":
            listener = SocketListener(_endpoint(args), timeout_seconds=args.timeout)
            return run_coordinator(cfg, listener)
        case "worker":
            if args.channel is None:
                raise ConfigError("--channel is required for --role worker")
            connection = connect_socket(_endpoint(args), timeout_seconds=args.timeout)
            run_worker(cfg, args.channel, connection)
            return 0
    raise ConfigError(f"unknown role {args.role!r}")


def _endpoint(args: argparse.Namespace) -> str:
    if not args.endpoint:
        raise ConfigError(f"--endpoint HOST:PORT is required for --role {args.role}")
    return args.endpoint


# ==============================================================================
# Inference
# ==============================================================================


def cmd_embed(run: RunConfig, args: argparse.Namespace) -> int:
    models = _load_models(run)
    export_embeddings(
        models,
        _load_records(run),
        run.train.preprocess,
        run.out_dir / EMBEDDINGS_NAME,
        seed=run.run_seed,
    )
    return 0


def parse_source_channel(raw: str) -> int | None:
    """``native`` or a channel id."""
    if raw == NATIVE_SOURCE:
        return None
    try:
        channel = int(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected {NATIVE_SOURCE!r} or a channel id, got {raw!r}"
        ) from exc
    if channel < 0:
        raise argparse.ArgumentTypeError("channel ids are non-negative")
    return channel


def reconstruction_name(source_channel: int | None) -> str:
    suffix = NATIVE_SOURCE if source_channel is None else f"ch{source_channel}"
    return f"reconstruction_{suffix}.csv"


def cmd_reconstruct(run: RunConfig, args: argparse.Namespace) -> int:
    traces = reconstruction_traces(
        _load_models(run),
        _load_records(run),
        run.train.preprocess,
        source_channel=args.source_channel,
        mask_ratio=run.eval.mask_ratio,
        seed=run.run_seed,
    )
    path = run.out_dir / reconstruction_name(args.source_channel)
    storage.write_text(path, traces.to_csv(index=False, float_format="%.17g"))
    logger.info("Wrote %d trace samples to %s", len(traces), path)
    return 0


# ==============================================================================
# Evaluation
# ==============================================================================


def _channel_embeddings(
    run: RunConfig, models: ChannelModels, records: list[SignalRecord]
) -> np.ndarray:
    channel = run.eval.channel
    if channel not in models:
        raise ConfigError(f"eval.channel {channel} is not a trained channel")
    single = {channel: models[channel]}
    return embed_records(single, records, run.train.preprocess, seed=run.run_seed)[channel]


def _labels(records: list[SignalRecord], key: str) -> list[str]:
    missing = [r.id for r in records if key not in r.labels]
    if missing:
        raise DataError(f"{len(missing)} record(s) lack label {key!r} (first: {missing[0]})")
    return [r.labels[key] for r in records]


def _write_cv(run: RunConfig, kind: str, result: CvResult) -> None:
    write_cv_csv(result, run.out_dir / f"{kind}.csv")
    summary = summarize(
        result.metric, result.per_fold, seed=run.run_seed, config_hash=config_hash(run)
    )
    write_summary(summary, run.out_dir / f"{kind}_summary.json")
    folds = " ".join(f"{value:.4f}" for value in result.per_fold)
    print(f"{kind}: mean {result.metric} {result.mean:.4f} (folds: {folds})")


def _write_matrix(
    run: RunConfig,
    kind: str,
    metric: str,
    matrix: np.ndarray,
    channels: Sequence[int],
    values: Sequence[float] | np.ndarray,
) -> None:
    write_matrix_csv(matrix, channels, run.out_dir / f"{kind}.csv")
    summary = summarize(metric, values, seed=run.run_seed, config_hash=config_hash(run))
    write_summary(summary, run.out_dir / f"{kind}_summary.json")
    print(f"{kind}: mean {metric} {summary.mean:.4f}")


def _mi_clf_report(run: RunConfig, models: ChannelModels, records: list[SignalRecord]) -> None:
    """F1 of the MI classifier for every trained channel, optionally against a baseline."""
    model_sets = {"run": models}
    if run.eval.baseline_checkpoint_dir is not None:
        model_sets["baseline"] = _load_models(run, run.eval.baseline_checkpoint_dir)
    labels = _labels(records, run.eval.label)
    groups = [r.subject_id for r in records] if run.eval.subject_disjoint else None

    results: dict[tuple[str, int], CvResult] = {}
    for name, channel_models in model_sets.items():
        embeddings = embed_records(
            channel_models, records, run.train.preprocess, seed=run.run_seed
        )
        for channel in run.train.channels:
            results[name, channel] = logreg_cv(
                embeddings[channel],
                labels,
                folds=run.eval.mi_folds,
                seed=run.run_seed,
                groups=groups,
            )

    write_channel_cv_csv(results, run.out_dir / "mi_clf.csv")
    scores = [value for (name, _), r in results.items() if name == "run" for value in r.per_fold]
    summary = summarize("f1", scores, seed=run.run_seed, config_hash=config_hash(run))
    write_summary(summary, run.out_dir / "mi_clf_summary.json")
    for (name, channel), result in results.items():
        print(f"mi_clf: {name} channel {channel} mean f1 {result.mean:.4f}")


def cmd_eval(run: RunConfig, args: argparse.Namespace) -> int:
    models = _load_models(run)
    records = _load_records(run)
    preprocess_cfg = run.train.preprocess
    seed = run.run_seed
    match args.kind:
        case "similarity":
            report = similarity_report(
                models, records, preprocess_cfg, repeats=run.eval.repeats, seed=seed
            )
            rows, cols = np.triu_indices(len(report.channels), k=1)
            upper = report.matrix[rows, cols]
            _write_matrix(
                run, "similarity", "embedding_similarity", report.matrix, report.channels, upper
            )
        case "recon-mae":
            report = recon_mae_report(
                models, records, preprocess_cfg, mask_ratio=run.eval.mask_ratio, seed=seed
            )
            _write_matrix(
                run, "recon_mae", "mae", report.matrix, report.channels, report.matrix.ravel()
            )
        case "mi-clf":
            _mi_clf_report(run, models, records)
        case "knn":
            result = knn_cv(
                _channel_embeddings(run, models, records),
                [r.subject_id for r in records],
                k=run.eval.knn_k,
                folds=run.eval.knn_folds,
                seed=seed,
            )
            _write_cv(run, "knn", result)
        case _:
            raise ConfigError(f"unknown evaluation kind {args.kind!r}")
    return 0
