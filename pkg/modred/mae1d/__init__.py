"""Per-channel 1-D masked autoencoder: configuration, masking, model and checkpoints."""

from modred.mae1d.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from modred.mae1d.config import ModelConfig
from modred.mae1d.model import (
    EncoderOutput,
    Mae1dModel,
    count_params,
    cross_decode,
    decode,
    encode,
    reconstruct,
)
from modred.mae1d.patching import MaskPlan, patchify, random_mask, sincos_positions, unpatchify


__all__ = [
    "Checkpoint",
    "EncoderOutput",
    "Mae1dModel",
    "MaskPlan",
    "ModelConfig",
    "count_params",
    "cross_decode",
    "decode",
    "encode",
    "load_checkpoint",
    "patchify",
    "random_mask",
    "reconstruct",
    "save_checkpoint",
    "sincos_positions",
    "unpatchify",
]
