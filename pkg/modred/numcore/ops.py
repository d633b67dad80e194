"""
Differentiable operations for the 1-D masked autoencoder.

Only the operations the model and its losses need are provided. Each op
computes its forward value with ``numpy`` and registers a closure that maps the
upstream gradient onto its inputs. Attention, layer normalisation, softmax and
row normalisation are fused ops with hand-derived backward passes.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import special

from modred.core.errors import NumericError
from modred.numcore.tensor import Tensor, as_tensor


_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _accumulate(target: Tensor, grad: np.ndarray) -> None:
    if target.requires_grad:
        target.grad += _unbroadcast(grad, target.shape)


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}") from exc


# ---------------------------------------------------------------------------
# Elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def backward(g: np.ndarray) -> None:
        _accumulate(a, g)
        _accumulate(b, g)

    return Tensor.from_op(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def backward(g: np.ndarray) -> None:
        _accumulate(a, g)
        _accumulate(b, -g)

    return Tensor.from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def backward(g: np.ndarray) -> None:
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    return Tensor.from_op(a.data * b.data, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data

    def backward(g: np.ndarray) -> None:
        _accumulate(a, g / b.data)
        _accumulate(b, -g * a.data / (b.data * b.data))

    return Tensor.from_op(out, (a, b), backward, "div")


def neg(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        _accumulate(a, -g)

    return Tensor.from_op(-a.data, (a,), backward, "neg")


def square(a: Tensor) -> Tensor:
    def backward(g: np.ndarray) -> None:
        _accumulate(a, 2.0 * a.data * g)

    return Tensor.from_op(a.data * a.data, (a,), backward, "square")


def relu(a: Tensor) -> Tensor:
    active = a.data > 0

    def backward(g: np.ndarray) -> None:
        _accumulate(a, g * active)

    return Tensor.from_op(np.where(active, a.data, 0.0), (a,), backward, "relu")


def gelu(a: Tensor) -> Tensor:
    """Exact GELU, ``x * Phi(x)`` with the Gaussian CDF computed via ``erf``."""
    cdf = 0.5 * (1.0 + special.erf(a.data * _INV_SQRT2))

    def backward(g: np.ndarray) -> None:
        pdf = _INV_SQRT2PI * np.exp(-0.5 * a.data * a.data)
        _accumulate(a, g * (cdf + a.data * pdf))

    return Tensor.from_op(a.data * cdf, (a,), backward, "gelu")


# ---------------------------------------------------------------------------
# Reductions and shape plumbing
# ---------------------------------------------------------------------------


def sum(a: Tensor, axis: int | None = None) -> Tensor:  # noqa: A001
    out = a.data.sum(axis=axis)

    def backward(g: np.ndarray) -> None:
        grad = g if axis is None else np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(grad, a.shape))

    return Tensor.from_op(np.asarray(out), (a,), backward, "sum")


def mean(a: Tensor, axis: int | None = None) -> Tensor:
    count = a.size if axis is None else a.shape[axis]
    out = a.data.mean(axis=axis)

    def backward(g: np.ndarray) -> None:
        grad = g if axis is None else np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(grad / count, a.shape))

    return Tensor.from_op(np.asarray(out), (a,), backward, "mean")


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    out = a.data.reshape(tuple(shape))

    def backward(g: np.ndarray) -> None:
        _accumulate(a, g.reshape(a.shape))

    return Tensor.from_op(out, (a,), backward, "reshape")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ValueError("concat needs at least one tensor")
    parts = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        raise ValueError(f"concat: shape mismatch {[p.shape for p in parts]}") from exc
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def backward(g: np.ndarray) -> None:
        for part, piece in zip(parts, np.split(g, bounds, axis=axis), strict=True):
            _accumulate(part, piece)

    return Tensor.from_op(out, parts, backward, "concat")


def stack_rows(tensors: Sequence[Tensor]) -> Tensor:
    """Stack 1-D tensors of equal length into a 2-D tensor, one per row."""
    return concat([reshape(t, (1, t.size)) for t in tensors], axis=0)


def take_rows(a: Tensor, index: Sequence[int] | np.ndarray) -> Tensor:
    """Gather rows ``a[index]``; repeated indices accumulate in the backward pass."""
    idx = np.asarray(index, dtype=np.int64)
    if idx.ndim != 1:
        raise ValueError("take_rows index must be one-dimensional")
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise ValueError(f"take_rows index out of range for {a.shape[0]} rows")

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            np.add.at(a.grad, idx, g)

    return Tensor.from_op(a.data[idx], (a,), backward, "take_rows")


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: shape mismatch {a.shape} @ {b.shape}")

    def backward(g: np.ndarray) -> None:
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return Tensor.from_op(a.data @ b.data, (a, b), backward, "matmul")


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight + bias`` for ``x[n, in]``, ``weight[in, out]``, ``bias[out]``."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ValueError(f"linear: shape mismatch {x.shape} @ {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise ValueError(f"linear: bias shape {bias.shape} != ({weight.shape[1]},)")
    out = x.data @ weight.data
    if bias is not None:
        out = out + bias.data
    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g: np.ndarray) -> None:
        _accumulate(x, g @ weight.data.T)
        _accumulate(weight, x.data.T @ g)
        if bias is not None:
            _accumulate(bias, g.sum(axis=0))

    return Tensor.from_op(out, parents, backward, "linear")


# ---------------------------------------------------------------------------
# Normalisation
# ---------------------------------------------------------------------------


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    out = exp / exp.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> None:
        _accumulate(a, out * (g - (g * out).sum(axis=axis, keepdims=True)))

    return Tensor.from_op(out, (a,), backward, "softmax")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalise over the last axis, then apply the affine ``gamma``/``beta``."""
    width = x.shape[-1]
    if width < 1:
        raise ValueError("layer_norm needs a non-empty last axis")
    if gamma.shape != (width,) or beta.shape != (width,):
        raise ValueError(
            f"layer_norm: gamma {gamma.shape} / beta {beta.shape} vs last axis {width}"
        )
    if eps < 0:
        raise ValueError("layer_norm eps must be non-negative")
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    var = (centered * centered).mean(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = centered * inv_std
    if not np.all(np.isfinite(xhat)):
        raise NumericError("layer_norm: zero variance with eps=0")

    def backward(g: np.ndarray) -> None:
        _accumulate(gamma, (g * xhat).reshape(-1, width).sum(axis=0))
        _accumulate(beta, g.reshape(-1, width).sum(axis=0))
        if x.requires_grad:
            dxhat = g * gamma.data
            x.grad += inv_std * (
                dxhat
                - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
            )

    return Tensor.from_op(xhat * gamma.data + beta.data, (x, gamma, beta), backward, "layer_norm")


def row_norm(a: Tensor) -> Tensor:
    """Euclidean norm of each row of a 2-D tensor (subgradient 0 at the origin)."""
    if a.ndim != 2:
        raise ValueError("row_norm expects a 2-D tensor")
    norms = np.sqrt((a.data * a.data).sum(axis=1))

    def backward(g: np.ndarray) -> None:
        safe = np.where(norms > 0, norms, 1.0)
        direction = np.where((norms > 0)[:, None], a.data / safe[:, None], 0.0)
        _accumulate(a, g[:, None] * direction)

    return Tensor.from_op(norms, (a,), backward, "row_norm")


def l2_normalize_rows(a: Tensor) -> Tensor:
    """Scale each row of a 2-D tensor to unit Euclidean norm."""
    if a.ndim != 2:
        raise ValueError("l2_normalize_rows expects a 2-D tensor")
    norms = np.sqrt((a.data * a.data).sum(axis=1, keepdims=True))
    if np.any(norms == 0):
        raise NumericError("cannot L2-normalise a zero-norm embedding")
    unit = a.data / norms

    def backward(g: np.ndarray) -> None:
        radial = (g * unit).sum(axis=1, keepdims=True)
        _accumulate(a, (g - unit * radial) / norms)

    return Tensor.from_op(unit, (a,), backward, "l2_normalize_rows")


# ---------------------------------------------------------------------------
# Attention
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttentionWeights:
    """Projection set for one multi-head attention layer.

    ``qkv_weight`` is ``[d, 3d]`` laid out as query | key | value columns;
    ``proj_weight`` is the ``[d, d]`` output projection.
    """

    qkv_weight: Tensor
    qkv_bias: Tensor | None
    proj_weight: Tensor
    proj_bias: Tensor


def attention_core(qkv: Tensor, heads: int) -> Tensor:
    """Scaled dot-product attention over packed ``[n, 3d]`` query/key/value rows."""
    n, width = qkv.shape
    dim = width // 3
    if width != 3 * dim or dim % heads != 0:
        raise ValueError(f"attention_core: width {width} incompatible with {heads} heads")
    head_dim = dim // heads
    scale = 1.0 / math.sqrt(head_dim)

    def split(block: np.ndarray) -> np.ndarray:
        return block.reshape(n, heads, head_dim).transpose(1, 0, 2)

    q = split(qkv.data[:, :dim])
    k = split(qkv.data[:, dim : 2 * dim])
    v = split(qkv.data[:, 2 * dim :])
    scores = (q @ k.transpose(0, 2, 1)) * scale
    scores -= scores.max(axis=-1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=-1, keepdims=True)
    out = (weights @ v).transpose(1, 0, 2).reshape(n, dim)

    def backward(g: np.ndarray) -> None:
        if not qkv.requires_grad:
            return
        g_heads = split(g)
        g_weights = g_heads @ v.transpose(0, 2, 1)
        g_v = weights.transpose(0, 2, 1) @ g_heads
        g_scores = weights * (g_weights - (g_weights * weights).sum(axis=-1, keepdims=True))
        g_q = (g_scores @ k) * scale
        g_k = (g_scores.transpose(0, 2, 1) @ q) * scale

        def merge(block: np.ndarray) -> np.ndarray:
            return block.transpose(1, 0, 2).reshape(n, dim)

        qkv.grad += np.concatenate([merge(g_q), merge(g_k), merge(g_v)], axis=1)

    return Tensor.from_op(out, (qkv,), backward, "attention_core")


def multi_head_attention(
    x: Tensor,
    weights: AttentionWeights,
    heads: int,
    qkv_bias: bool = True,
) -> Tensor:
    """Multi-head self-attention over the rows of ``x[n, d]``."""
    dim = x.shape[-1]
    if heads < 1 or dim % heads != 0:
        raise ValueError(f"multi_head_attention: d={dim} not divisible by heads={heads}")
    if weights.qkv_weight.shape != (dim, 3 * dim):
        raise ValueError(f"qkv projection {weights.qkv_weight.shape} != ({dim}, {3 * dim})")
    bias = weights.qkv_bias if qkv_bias else None
    qkv = linear(x, weights.qkv_weight, bias)
    attended = attention_core(qkv, heads)
    return linear(attended, weights.proj_weight, weights.proj_bias)
