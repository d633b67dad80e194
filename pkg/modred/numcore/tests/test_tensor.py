"""Tests for the Tensor container, graph recording and gradient checking."""

from __future__ import annotations

import numpy as np
import pytest

from modred.core.errors import NumericError
from modred.numcore import ops
from modred.numcore.gradcheck import grad_check
from modred.numcore.tensor import Tensor, backward, is_grad_enabled, no_grad


def test_grad_present_iff_requires_grad():
    assert Tensor([1.0, 2.0]).grad is None
    t = Tensor(np.ones((2, 3)), requires_grad=True)
    assert t.grad.shape == t.shape == (2, 3)
    assert t.size == 6


def test_construction_rejects_non_finite_values():
    with pytest.raises(NumericError):
        Tensor([1.0, np.inf])


def test_data_is_copied_to_binary64():
    source = np.array([1, 2, 3], dtype=np.int32)
    t = Tensor(source)
    source[0] = 99
    assert t.data.dtype == np.float64
    assert t.data[0] == 1.0


def test_operator_sugar_builds_graph():
    a = Tensor([2.0], requires_grad=True)
    b = Tensor([3.0], requires_grad=True)
    out = a * b + a - 1.0
    out.backward()
    assert a.grad[0] == 4.0
    assert b.grad[0] == 2.0


def test_backward_frees_graph():
    a = Tensor([2.0], requires_grad=True)
    out = ops.square(a)
    assert not out.is_leaf
    out.backward()
    assert out.is_leaf


def test_no_grad_skips_recording():
    a = Tensor([2.0], requires_grad=True)
    with no_grad():
        assert not is_grad_enabled()
        out = ops.square(a)
    assert is_grad_enabled()
    assert not out.requires_grad
    assert out.is_leaf


def test_multi_seed_backward_injects_interior_gradient():
    x = Tensor([1.0, -2.0], requires_grad=True)
    hidden = ops.mul(x, 3.0)
    loss = ops.sum(ops.square(hidden))
    backward([(loss, 0.5), (hidden, np.array([1.0, 1.0]))])
    # d(0.5 * sum(9x^2))/dx = 9x ; injected ones at hidden add 3 per entry
    np.testing.assert_allclose(x.grad, [9.0 + 3.0, -18.0 + 3.0])


def test_gradients_accumulate_until_zeroed():
    x = Tensor([1.0], requires_grad=True)
    ops.square(x).backward()
    ops.square(x).backward()
    assert x.grad[0] == 4.0
    x.zero_grad()
    assert x.grad[0] == 0.0


def test_implicit_seed_needs_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ValueError, match="scalar"):
        ops.square(x).backward()


def test_grad_check_sum_of_squares():
    x = Tensor(np.random.default_rng(0).standard_normal(7), requires_grad=True)
    assert grad_check(lambda: ops.sum(ops.square(x)), [x]) < 1e-8


def test_grad_check_constant_function_reports_zero():
    x = Tensor(np.ones(3), requires_grad=True)
    constant = Tensor([4.0])
    assert grad_check(lambda: constant, [x]) == 0.0


def test_grad_check_subsamples_coordinates():
    x = Tensor(np.random.default_rng(1).standard_normal(50), requires_grad=True)
    assert grad_check(lambda: ops.sum(ops.gelu(x)), [x], max_checks=5) < 1e-7
    np.testing.assert_array_equal(x.grad, np.zeros(50))
