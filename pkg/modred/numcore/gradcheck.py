"""
Finite-difference verification of reverse-mode gradients.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence

import numpy as np

from modred.numcore.tensor import Tensor, backward, no_grad


logger = logging.getLogger(__name__)


def grad_check(
    f: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    *,
    h: float = 1e-6,
    max_checks: int | None = None,
    seed: int = 0,
    atol: float = 1e-8,
) -> float:
    """
    Compare analytic gradients of a scalar computation against central differences.

    ``f`` takes no arguments and rebuilds the computation from the current
    values of ``inputs`` each call. Every input is perturbed in place by
    ``+-h`` and restored afterwards.

    Args:
        f: Zero-argument callable returning a single-element Tensor.
        inputs: Tensors with ``requires_grad=True`` to check.
        h: Finite-difference step.
        max_checks: Optional cap on coordinates checked per input (randomly
            sampled with ``seed``); ``None`` checks every coordinate.
        seed: Seed for coordinate sampling.
        atol: Floor on the error denominator so all-zero gradients compare as equal.

    Returns:
        Maximum over inputs of ``||analytic - numeric|| / max(||analytic|| + ||numeric||, atol)``.
    """
    for tensor in inputs:
        if not tensor.requires_grad:
            raise ValueError("grad_check inputs must require grad")
        tensor.zero_grad()

    out = f()
    if out.requires_grad:
        backward([(out, None)])
    analytic = [tensor.grad.copy() for tensor in inputs]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for tensor, exact in zip(inputs, analytic, strict=True):
        flat = tensor.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_checks is not None and flat.size > max_checks:
            coords = np.sort(rng.choice(flat.size, size=max_checks, replace=False))

        numeric = np.zeros(coords.size)
        with no_grad():
            for slot, coord in enumerate(coords):
                original = flat[coord]
                flat[coord] = original + h
                plus = f().item()
                flat[coord] = original - h
                minus = f().item()
                flat[coord] = original
                numeric[slot] = (plus - minus) / (2.0 * h)

        sampled = exact.reshape(-1)[coords]
        denom = max(float(np.linalg.norm(sampled) + np.linalg.norm(numeric)), atol)
        error = float(np.linalg.norm(sampled - numeric)) / denom
        logger.debug(
            "grad_check %s: rel. error %.3e over %d coords", tensor.name, error, coords.size
        )
        worst = max(worst, error)

    for tensor in inputs:
        tensor.zero_grad()
    return worst
