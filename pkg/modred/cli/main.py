"""
modred command-line entrypoint.

Every command:
1. Loads the run configuration (``--config``, ``MODRED_CONFIG`` or defaults)
2. Applies command-line overrides and writes ``resolved_config.json``
3. Runs the command and maps failures onto exit codes
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from modred.cli import commands
from modred.cli.config import RunConfig, apply_overrides, load_run_config, write_resolved_config
from modred.core.error_reporting import report_fatal
from modred.core.errors import EXIT_UNEXPECTED, ModredError, exit_code_for
from modred.core.logging_setup import configure_logging
from modred.disttrain.launch import TransportKind


logger = logging.getLogger(__name__)

type Handler = Callable[[RunConfig, argparse.Namespace], int]


def _u64(raw: str) -> int:
    value = int(raw)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {raw}")
    return value


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration JSON")
    common.add_argument("--seed", type=_u64, help="override the run seed")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--manifest", type=Path, help="dataset manifest (overrides config)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="modred", description="Multi-channel ECG masked autoencoders with aligned embeddings."
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    synth = sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    synth.add_argument("--check-einthoven", action="store_true")
    synth.add_argument("--einthoven-tol", type=float, default=1e-9)
    synth.set_defaults(handler=commands.cmd_synth)

    pretrain = sub.add_parser("pretrain", parents=[common], help="train in one process")
    pretrain.add_argument("--no-align", action="store_true", help="plain MAE baseline")
    pretrain.add_argument("--resume", action="store_true")
    pretrain.set_defaults(handler=commands.cmd_pretrain)

    dist = sub.add_parser("pretrain-dist", parents=[common], help="coordinator/worker training")
    dist.add_argument("--role", choices=("coordinator", "worker", "local"), required=True)
    dist.add_argument("--channel", type=int)
    dist.add_argument("--endpoint", metavar="HOST:PORT")
    transports: tuple[TransportKind, ...] = ("memory", "socket")
    dist.add_argument("--transport", choices=transports, default="socket")
    dist.add_argument("--timeout", type=float, default=600.0, help="seconds per network wait")
    dist.add_argument("--no-align", action="store_true", help="plain MAE baseline")
    dist.set_defaults(handler=commands.cmd_pretrain_dist)

    embed = sub.add_parser("embed", parents=[common], help="export CLS embeddings as CSV")
    embed.set_defaults(handler=commands.cmd_embed)

    recon = sub.add_parser("reconstruct", parents=[common], help="write reconstruction traces")
    recon.add_argument(
        "--source-channel",
        type=commands.parse_source_channel,
        default=None,
        metavar="native|CHANNEL",
    )
    recon.set_defaults(handler=commands.cmd_reconstruct)

    evaluate = sub.add_parser("eval", parents=[common], help="run an evaluation report")
    evaluate.add_argument("kind", choices=commands.EVAL_KINDS)
    evaluate.set_defaults(handler=commands.cmd_eval)
    return parser


def _resolve(args: argparse.Namespace) -> RunConfig:
    run = load_run_config(args.config)
    align = False if getattr(args, "no_align", False) else None
    run = apply_overrides(
        run, seed=args.seed, out_dir=args.out, manifest=args.manifest, align=align
    )
    write_resolved_config(run)
    return run


def main(argv: Sequence[str] | None = None) -> int:
    """
    Main entrypoint for the ``modred`` command.

    Returns:
        Exit code (0 success, 1 unexpected, 2 config, 3 data, 4 protocol, 5 numeric)
    """
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    handler: Handler = args.handler
    try:
        run = _resolve(args)
        return handler(run, args)
    except ModredError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return exit_code_for(exc)
    except Exception as exc:
        report_fatal(exc, context={"command": args.command})
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
