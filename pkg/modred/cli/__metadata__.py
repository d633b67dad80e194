"""
modred command metadata.

Declares the command set, environment variables and exit codes the ``modred``
tool exposes, so wrappers and schedulers can query capabilities without
running a command. A contract test pins these against the argparse parser and
the error hierarchy.
"""

from __future__ import annotations


TOOL_NAME = "modred"
TOOL_DESCRIPTION = (
    "Trains one masked autoencoder per ECG channel with cross-channel embedding "
    "alignment, in one process or as a coordinator with one worker per channel, "
    "and writes plot-ready evaluation reports."
)

COMMANDS = {
    "synth": "Write a synthetic multi-lead dataset (manifest + waveforms)",
    "pretrain": "Train every channel model in one process",
    "pretrain-dist": "Train as coordinator, worker or a local multi-thread run",
    "embed": "Export unmasked CLS embeddings per record and channel",
    "reconstruct": "Write original and reconstructed traces with mask windows",
    "eval": "Run a similarity, recon-mae, mi-clf or knn report",
}

EVAL_KINDS = ["similarity", "recon-mae", "mi-clf", "knn"]

# Environment variables read by the tool
ENV_VARS = {
    "MODRED_LOG": {
        "required": False,
        "description": "Log level: DEBUG, INFO, WARNING or ERROR (default INFO)",
    },
    "MODRED_CONFIG": {
        "required": False,
        "description": "Path to the run configuration JSON when --config is not given",
    },
}

EXIT_CODES = {
    0: "success",
    1: "unexpected error",
    2: "usage or configuration error",
    3: "data error (manifest, waveform, checkpoint)",
    4: "coordinator/worker protocol error",
    5: "numeric error (NaN or Inf)",
}

OUTPUT_FILES = {
    "resolved_config.json": "Every command: the configuration with defaults filled in",
    "data/manifest.json": "synth: dataset manifest",
    "checkpoints/channel_NN.mr1d": "pretrain, pretrain-dist: one checkpoint per channel",
    "checkpoints/metrics.csv": "pretrain, pretrain-dist: one row per epoch",
    "embeddings.csv": "embed: id, subject_id, channel, e0..",
    "reconstruction_<source>.csv": "reconstruct: traces and masked-window flags",
    "mi_clf.csv": "eval mi-clf: model, channel, fold, f1 (run and optional baseline)",
    "<kind>.csv / <kind>_summary.json": "eval: report and JSON summary",
}


def get_metadata() -> dict:
    """
    Return all metadata as a dictionary.

    This can be logged at startup or queried by external tools.
    """
    return {
        "tool_name": TOOL_NAME,
        "tool_description": TOOL_DESCRIPTION,
        "commands": COMMANDS,
        "eval_kinds": EVAL_KINDS,
        "env_vars": ENV_VARS,
        "exit_codes": EXIT_CODES,
        "output_files": OUTPUT_FILES,
    }
