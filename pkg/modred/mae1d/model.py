"""
The per-channel 1-D masked autoencoder.

Encoder: patchify -> linear patch projection -> + sine-cosine positions ->
drop masked patches -> prepend CLS -> pre-norm transformer blocks -> LayerNorm.

Decoder: project tokens to the decoder width -> append mask tokens for the
masked slots -> restore temporal order -> + decoder positions -> re-attach
CLS -> transformer blocks -> LayerNorm -> per-patch linear prediction, with
the CLS row dropped from the output.

Parameters live in an ordered ``name -> Tensor`` mapping so the checkpoint
codec and the optimizer address them by the same names.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from modred.core.errors import ConfigError
from modred.mae1d.config import ModelConfig
from modred.mae1d.patching import MaskPlan, patchify, sincos_positions
from modred.numcore import ops
from modred.numcore.ops import AttentionWeights
from modred.numcore.tensor import Tensor, as_tensor


logger = logging.getLogger(__name__)

TOKEN_INIT_STD = 0.02


# ==============================================================================
# Parameter inventory
# ==============================================================================


@dataclass(frozen=True)
class ParamSpec:
    name: str
    shape: tuple[int, ...]
    kind: str  # "linear", "norm_weight", "norm_bias" or "token"
    fan_in: int = 0


def _linear(prefix: str, fan_in: int, fan_out: int, bias: bool = True) -> list[ParamSpec]:
    specs = [ParamSpec(f"{prefix}.weight", (fan_in, fan_out), "linear", fan_in)]
    if bias:
        specs.append(ParamSpec(f"{prefix}.bias", (fan_out,), "linear", fan_in))
    return specs


def _norm(prefix: str, dim: int) -> list[ParamSpec]:
    return [
        ParamSpec(f"{prefix}.weight", (dim,), "norm_weight"),
        ParamSpec(f"{prefix}.bias", (dim,), "norm_bias"),
    ]


def _block(prefix: str, dim: int, mlp_ratio: int, qkv_bias: bool) -> list[ParamSpec]:
    hidden = dim * mlp_ratio
    return [
        *_norm(f"{prefix}.norm1", dim),
        *_linear(f"{prefix}.attn.qkv", dim, 3 * dim, bias=qkv_bias),
        *_linear(f"{prefix}.attn.proj", dim, dim),
        *_norm(f"{prefix}.norm2", dim),
        *_linear(f"{prefix}.mlp.fc1", dim, hidden),
        *_linear(f"{prefix}.mlp.fc2", hidden, dim),
    ]


def param_specs(config: ModelConfig) -> list[ParamSpec]:
    """Ordered parameter inventory for ``config``."""
    specs = [
        *_linear("patch_embed", config.patch_len, config.enc_dim),
        ParamSpec("cls_token", (1, config.enc_dim), "token"),
    ]
    for b in range(config.enc_depth):
        specs += _block(f"encoder.blocks.{b}", config.enc_dim, config.mlp_ratio, config.qkv_bias)
    specs += _norm("encoder.norm", config.enc_dim)
    specs += _linear("decoder_embed", config.enc_dim, config.dec_dim)
    specs.append(ParamSpec("mask_token", (1, config.dec_dim), "token"))
    for b in range(config.dec_depth):
        specs += _block(f"decoder.blocks.{b}", config.dec_dim, config.mlp_ratio, config.qkv_bias)
    specs += _norm("decoder.norm", config.dec_dim)
    specs += _linear("decoder_pred", config.dec_dim, config.patch_len)
    return specs


def block_param_count(dim: int, mlp_ratio: int, qkv_bias: bool) -> int:
    """Parameters in one transformer block of width ``dim``."""
    hidden = dim * mlp_ratio
    norms = 2 * (2 * dim)
    attention = dim * 3 * dim + (3 * dim if qkv_bias else 0) + dim * dim + dim
    mlp = dim * hidden + hidden + hidden * dim + dim
    return norms + attention + mlp


def count_params(config: ModelConfig) -> int:
    """Closed-form parameter count of a model built from ``config``."""
    e, d, p = config.enc_dim, config.dec_dim, config.patch_len
    return (
        (p * e + e)  # patch projection
        + e  # CLS token
        + config.enc_depth * block_param_count(e, config.mlp_ratio, config.qkv_bias)
        + 2 * e  # encoder norm
        + (e * d + d)  # encoder -> decoder projection
        + d  # mask token
        + config.dec_depth * block_param_count(d, config.mlp_ratio, config.qkv_bias)
        + 2 * d  # decoder norm
        + (d * p + p)  # prediction head
    )


# ==============================================================================
# Model
# ==============================================================================


@dataclass
class Mae1dModel:
    """One channel's encoder/decoder parameter set."""

    config: ModelConfig
    params: dict[str, Tensor]
    enc_pos: np.ndarray = field(init=False, repr=False)
    dec_pos: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        expected = [spec.name for spec in param_specs(self.config)]
        if list(self.params) != expected:
            missing = sorted(set(expected) - set(self.params))
            extra = sorted(set(self.params) - set(expected))
            raise ConfigError(
                f"parameter set does not match config (missing={missing}, extra={extra})"
            )
        self.enc_pos = sincos_positions(self.config.n_patches, self.config.enc_dim)
        self.dec_pos = sincos_positions(self.config.n_patches, self.config.dec_dim)

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int) -> Mae1dModel:
        """Build a freshly initialised model from a seed."""
        rng = np.random.default_rng(seed)
        params: dict[str, Tensor] = {}
        for spec in param_specs(config):
            if spec.kind == "linear":
                bound = 1.0 / math.sqrt(spec.fan_in)
                values = rng.uniform(-bound, bound, size=spec.shape)
            elif spec.kind == "token":
                values = rng.normal(0.0, TOKEN_INIT_STD, size=spec.shape)
            elif spec.kind == "norm_weight":
                values = np.ones(spec.shape)
            else:
                values = np.zeros(spec.shape)
            params[spec.name] = Tensor(values, requires_grad=True, name=spec.name)
        logger.debug("Initialised model with %d parameters (seed=%d)", count_params(config), seed)
        return cls(config=config, params=params)

    @classmethod
    def from_arrays(cls, config: ModelConfig, arrays: dict[str, np.ndarray]) -> Mae1dModel:
        params = {}
        for spec in param_specs(config):
            if spec.name not in arrays:
                raise ConfigError(f"missing parameter {spec.name}")
            values = arrays[spec.name]
            if tuple(values.shape) != spec.shape:
                raise ConfigError(
                    f"parameter {spec.name} has shape {values.shape}, expected {spec.shape}"
                )
            params[spec.name] = Tensor(values, requires_grad=True, name=spec.name)
        return cls(config=config, params=params)

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()

    def num_params(self) -> int:
        return sum(param.size for param in self.params.values())

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: param.data for name, param in self.params.items()}

    # -- building blocks ----------------------------------------------------

    def _p(self, name: str) -> Tensor:
        return self.params[name]

    def _linear(self, prefix: str, x: Tensor) -> Tensor:
        return ops.linear(x, self._p(f"{prefix}.weight"), self.params.get(f"{prefix}.bias"))

    def _norm(self, prefix: str, x: Tensor) -> Tensor:
        return ops.layer_norm(
            x, self._p(f"{prefix}.weight"), self._p(f"{prefix}.bias"), self.config.norm_eps
        )

    def _block(self, prefix: str, x: Tensor, heads: int) -> Tensor:
        attn = AttentionWeights(
            qkv_weight=self._p(f"{prefix}.attn.qkv.weight"),
            qkv_bias=self.params.get(f"{prefix}.attn.qkv.bias"),
            proj_weight=self._p(f"{prefix}.attn.proj.weight"),
            proj_bias=self._p(f"{prefix}.attn.proj.bias"),
        )
        h = ops.multi_head_attention(
            self._norm(f"{prefix}.norm1", x), attn, heads, qkv_bias=self.config.qkv_bias
        )
        x = ops.add(x, h)
        h = self._linear(f"{prefix}.mlp.fc1", self._norm(f"{prefix}.norm2", x))
        h = self._linear(f"{prefix}.mlp.fc2", ops.gelu(h))
        return ops.add(x, h)


@dataclass(frozen=True)
class EncoderOutput:
    """Encoder tokens (row 0 is CLS) plus the mask plan they were produced under."""

    tokens: Tensor
    mask_plan: MaskPlan

    @property
    def cls(self) -> Tensor:
        """The CLS embedding as a ``[1, enc_dim]`` tensor (still on the graph)."""
        return ops.take_rows(self.tokens, [0])


def encode(
    model: Mae1dModel,
    signal: Tensor | np.ndarray,
    mask_plan: MaskPlan | None = None,
) -> EncoderOutput:
    """Run the encoder; with no plan every patch is visible."""
    cfg = model.config
    signal = as_tensor(signal)
    if signal.shape != (cfg.signal_len,):
        raise ValueError(f"signal has shape {signal.shape}, expected ({cfg.signal_len},)")
    plan = mask_plan if mask_plan is not None else MaskPlan.unmasked(cfg.n_patches)
    if plan.n_patches != cfg.n_patches:
        raise ValueError(f"mask plan covers {plan.n_patches} patches, model has {cfg.n_patches}")

    x = model._linear("patch_embed", patchify(signal, cfg.patch_len))
    x = ops.add(x, model.enc_pos)
    x = ops.take_rows(x, plan.visible_idx)
    x = ops.concat([model._p("cls_token"), x], axis=0)
    for b in range(cfg.enc_depth):
        x = model._block(f"encoder.blocks.{b}", x, cfg.enc_heads)
    return EncoderOutput(tokens=model._norm("encoder.norm", x), mask_plan=plan)


def decode(model: Mae1dModel, enc_out: EncoderOutput) -> Tensor:
    """Reconstruct ``[L, patch_len]`` patch values from an encoder output."""
    cfg = model.config
    plan = enc_out.mask_plan
    if enc_out.tokens.shape != (1 + plan.visible_idx.size, cfg.enc_dim):
        raise ConfigError(
            f"encoder tokens {enc_out.tokens.shape} incompatible with decoder "
            f"(expected (1+{plan.visible_idx.size}, {cfg.enc_dim}))"
        )
    if plan.n_patches != cfg.n_patches:
        raise ConfigError(
            f"mask plan covers {plan.n_patches} patches, decoder expects {cfg.n_patches}"
        )

    x = model._linear("decoder_embed", enc_out.tokens)
    cls = ops.take_rows(x, [0])
    visible = ops.take_rows(x, np.arange(1, x.shape[0]))
    masks = ops.take_rows(model._p("mask_token"), np.zeros(plan.masked_idx.size, dtype=np.int64))
    shuffled = ops.concat([visible, masks], axis=0)
    x = ops.add(ops.take_rows(shuffled, plan.restore_perm), model.dec_pos)
    x = ops.concat([cls, x], axis=0)
    for b in range(cfg.dec_depth):
        x = model._block(f"decoder.blocks.{b}", x, cfg.dec_heads)
    x = model._linear("decoder_pred", model._norm("decoder.norm", x))
    return ops.take_rows(x, np.arange(1, x.shape[0]))


def cross_decode(
    decoder_model: Mae1dModel,
    enc_out: EncoderOutput,
    source_config: ModelConfig | None = None,
) -> Tensor:
    """Decode another channel's encoder output with ``decoder_model``."""
    if source_config is not None:
        target = decoder_model.config
        if (source_config.enc_dim, source_config.signal_len, source_config.patch_len) != (
            target.enc_dim,
            target.signal_len,
            target.patch_len,
        ):
            raise ConfigError("encoder and decoder configurations are incompatible")
    return decode(decoder_model, enc_out)


def reconstruct(
    model: Mae1dModel,
    signal: Tensor | np.ndarray,
    mask_plan: MaskPlan | None = None,
) -> Tensor:
    """Encode then decode, returning the flat reconstructed signal."""
    return ops.reshape(decode(model, encode(model, signal, mask_plan)), (model.config.signal_len,))
