"""
Dense binary64 tensors with reverse-mode differentiation.

A ``Tensor`` wraps a ``numpy`` array. Operations in :mod:`modred.numcore.ops`
record their parents and a backward closure on the result whenever gradient
tracking is enabled and at least one input requires a gradient. Calling
:func:`backward` walks the recorded graph once in reverse topological order,
accumulates gradients into every participating tensor, and then frees the
graph so memory stays bounded over long runs.
"""

from __future__ import annotations

import contextvars
import logging
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager

import numpy as np

from modred.core.errors import NumericError


logger = logging.getLogger(__name__)

_GRAD_ENABLED: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "modred_grad_enabled", default=True
)

BackwardFn = Callable[[np.ndarray], None]


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording for inference code inside the block."""
    token = _GRAD_ENABLED.set(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.reset(token)


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED.get()


def check_finite(values: np.ndarray, where: str) -> None:
    """Raise ``NumericError`` if ``values`` holds NaN or Inf."""
    if not np.all(np.isfinite(values)):
        raise NumericError(f"non-finite values produced by {where}")


class Tensor:
    """
    A binary64 array plus optional gradient accumulator.

    ``grad`` is allocated (zero-filled, same shape) exactly when
    ``requires_grad`` is true. Leaf tensors created directly are parameters or
    inputs; tensors returned by ops are interior graph nodes.
    """

    __slots__ = ("_backward", "_op", "_parents", "data", "grad", "name", "requires_grad")

    def __init__(self, data, *, requires_grad: bool = False, name: str | None = None) -> None:
        values = np.array(data, dtype=np.float64)
        check_finite(values, name or "Tensor()")
        self.data: np.ndarray = values
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = np.zeros_like(values) if requires_grad else None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None
        self._op: str | None = None

    @classmethod
    def from_op(
        cls,
        data: np.ndarray,
        parents: Sequence[Tensor],
        backward: BackwardFn,
        op: str,
    ) -> Tensor:
        """Build an op result, recording the graph edge when gradients are needed."""
        check_finite(data, op)
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.name = None
        out._op = op
        tracked = is_grad_enabled() and any(p.requires_grad for p in parents)
        out.requires_grad = tracked
        out.grad = np.zeros_like(out.data) if tracked else None
        out._parents = tuple(parents) if tracked else ()
        out._backward = backward if tracked else None
        return out

    # -- basic properties ---------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        """Return the underlying array (no copy)."""
        return self.data

    def detach(self) -> Tensor:
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # -- operator sugar (delegates to ops) ----------------------------------

    def __add__(self, other):
        from modred.numcore import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from modred.numcore import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from modred.numcore import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from modred.numcore import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from modred.numcore import ops

        return ops.div(self, other)

    def __neg__(self):
        from modred.numcore import ops

        return ops.neg(self)

    def __matmul__(self, other):
        from modred.numcore import ops

        return ops.matmul(self, other)

    def backward(self, grad: np.ndarray | float | None = None) -> None:
        backward([(self, grad)])


def as_tensor(value) -> Tensor:
    """Wrap scalars/arrays as constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _topological_order(roots: Sequence[Tensor]) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    for root in roots:
        if id(root) in visited:
            continue
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
    return order


def backward(seeds: Sequence[tuple[Tensor, np.ndarray | float | None]]) -> None:
    """
    Run one reverse pass seeded at several nodes of the same graph.

    Each seed is ``(node, upstream_gradient)``; ``None`` means 1 for scalar
    nodes. Seeding an interior node injects an externally computed gradient
    (the coordinator's alignment gradient at the CLS embeddings) into the same
    accumulation as the local loss.
    """
    roots = [node for node, _ in seeds]
    for node, upstream in seeds:
        if not node.requires_grad:
            raise ValueError("backward() seed does not require grad")
        if upstream is None:
            if node.size != 1:
                raise ValueError("implicit backward seed needs a scalar tensor")
            seed = np.ones_like(node.data)
        else:
            seed = np.broadcast_to(np.asarray(upstream, dtype=np.float64), node.shape)
        check_finite(seed, "backward seed")
        node.grad = node.grad + seed

    order = _topological_order(roots)
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)

    # One graph per step: drop edges so interior buffers can be collected.
    for node in order:
        node._parents = ()
        node._backward = None
    logger.debug("backward pass over %d nodes", len(order))
