"""The ``modred`` command-line tool (entrypoint: ``modred.cli.main:main``)."""

from modred.cli.config import EvalConfig, RunConfig, apply_overrides, load_run_config


__all__ = [
    "EvalConfig",
    "RunConfig",
    "apply_overrides",
    "load_run_config",
]
