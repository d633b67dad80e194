"""Tests for the losses, the curriculum and triplet assignment."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modred.core.errors import InsufficientRecordsError, NumericError
from modred.numcore import ops
from modred.numcore.gradcheck import grad_check
from modred.numcore.tensor import Tensor
from modred.objectives import (
    CurriculumState,
    alignment_loss,
    assign_triplets,
    combined_loss,
    curriculum_weights,
    epoch_weights,
    masked_reconstruction_loss,
    reconstruction_loss,
    triplet_loss,
)


def _unit(angle: float) -> list[float]:
    return [math.cos(angle), math.sin(angle)]


# ==============================================================================
# Reconstruction
# ==============================================================================


def test_reconstruction_of_exact_copy_is_zero():
    x = np.random.default_rng(0).standard_normal((3, 20))
    assert reconstruction_loss(x, x.copy()).item() == 0.0


def test_reconstruction_hand_case():
    assert reconstruction_loss(np.zeros((1, 2)), np.ones((1, 2))).item() == 1.0


def test_reconstruction_scales_quadratically():
    rng = np.random.default_rng(1)
    x, x_hat = rng.standard_normal((2, 9)), rng.standard_normal((2, 9))
    base = reconstruction_loss(x, x_hat).item()
    assert reconstruction_loss(3 * x, 3 * x_hat).item() == pytest.approx(9 * base, rel=1e-12)


def test_reconstruction_matches_double_loop():
    rng = np.random.default_rng(2)
    x, x_hat = rng.standard_normal((4, 7)), rng.standard_normal((4, 7))
    total = 0.0
    for c in range(4):
        for t in range(7):
            total += (x[c, t] - x_hat[c, t]) ** 2
    assert abs(reconstruction_loss(x, x_hat).item() - total / 28) < 1e-12


def test_reconstruction_shape_mismatch():
    with pytest.raises(ValueError, match="shape mismatch"):
        reconstruction_loss(np.zeros((2, 3)), np.zeros((3, 2)))


def test_masked_reconstruction_counts_only_masked_rows():
    x = np.zeros((3, 2))
    x_hat = np.array([[5.0, 5.0], [1.0, 1.0], [9.0, 9.0]])
    flags = np.array([False, True, False])
    assert masked_reconstruction_loss(x, x_hat, flags).item() == 1.0


# ==============================================================================
# Triplet loss
# ==============================================================================


def test_satisfied_margin_gives_zero():
    a = Tensor([_unit(0.0)])
    n = Tensor([_unit(math.pi)])
    assert triplet_loss(a, a, n, margin=0.2).item() == 0.0


def test_triplet_hand_case():
    # chord lengths 1.0 and 0.8 between unit vectors
    a = Tensor([_unit(0.0)])
    p = Tensor([_unit(2 * math.asin(0.5))])
    n = Tensor([_unit(2 * math.asin(0.4))])
    assert triplet_loss(a, p, n, margin=0.5).item() == pytest.approx(0.7, abs=1e-12)


def test_triplet_is_scale_free():
    rng = np.random.default_rng(3)
    a, p, n = (rng.standard_normal((5, 4)) for _ in range(3))
    base = triplet_loss(Tensor(a), Tensor(p), Tensor(n)).item()
    scaled = triplet_loss(Tensor(4 * a), Tensor(0.5 * p), Tensor(2 * n)).item()
    assert scaled == pytest.approx(base, abs=1e-12)


def test_triplet_rotation_invariance():
    rng = np.random.default_rng(4)
    a, p, n = (rng.standard_normal((6, 5)) for _ in range(3))
    rotation, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    base = triplet_loss(Tensor(a), Tensor(p), Tensor(n)).item()
    rotated = triplet_loss(Tensor(a @ rotation), Tensor(p @ rotation), Tensor(n @ rotation))
    assert rotated.item() == pytest.approx(base, abs=1e-12)
    assert base >= 0.0


def test_triplet_zero_embedding_is_numeric_error():
    a = Tensor(np.zeros((1, 3)))
    with pytest.raises(NumericError):
        triplet_loss(a, Tensor(np.ones((1, 3))), Tensor(np.ones((1, 3))))


def test_triplet_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    a, p, n = (Tensor(rng.standard_normal((4, 8)), requires_grad=True) for _ in range(3))
    assert grad_check(lambda: triplet_loss(a, p, n, margin=1.0), [a, p, n]) < 1e-6


# ==============================================================================
# Curriculum
# ==============================================================================


def test_curriculum_endpoints():
    assert curriculum_weights(CurriculumState(0, 200)) == (0.0, 1.0)
    assert curriculum_weights(CurriculumState(200, 200)) == (1.0, 0.0)


def test_curriculum_midpoint():
    w_align, w_rec = curriculum_weights(CurriculumState(100, 200))
    assert w_align == pytest.approx(0.7071, abs=1e-4)
    assert w_rec == pytest.approx(0.7071, abs=1e-4)


@pytest.mark.parametrize("epoch", [0, 50, 100, 150, 200])
def test_curriculum_closed_form(epoch):
    w_align, w_rec = curriculum_weights(CurriculumState(epoch, 200))
    assert abs(w_align - math.sin(epoch / 200 * math.pi / 2)) < 1e-12
    assert abs(w_rec - math.cos(epoch / 200 * math.pi / 2)) < 1e-12


@given(total=st.integers(1, 500), data=st.data())
def test_curriculum_is_monotone_on_unit_circle(total, data):
    epoch = data.draw(st.integers(0, total - 1))
    w_align, w_rec = curriculum_weights(CurriculumState(epoch, total))
    next_align, next_rec = curriculum_weights(CurriculumState(epoch + 1, total))
    assert w_align >= 0.0 and w_rec >= 0.0
    assert next_align >= w_align
    assert next_rec <= w_rec
    assert abs(w_align**2 + w_rec**2 - 1.0) < 1e-12


def test_curriculum_state_rejects_out_of_range():
    with pytest.raises(ValueError):
        CurriculumState(201, 200)


def test_epoch_weights_modes():
    assert epoch_weights(3, 10, align=False) == (0.0, 1.0)
    assert epoch_weights(3, 10, curriculum=False) == (1.0, 1.0)
    assert epoch_weights(0, 10) == (0.0, 1.0)


def test_combined_loss_endpoints_are_exact():
    assert combined_loss(0.37, 0.91, CurriculumState(0, 10)) == 0.37
    assert combined_loss(0.37, 0.91, CurriculumState(10, 10)) == 0.91


def test_combined_loss_rejects_non_finite():
    with pytest.raises(NumericError):
        combined_loss(math.nan, 0.1, CurriculumState(1, 10))


def test_combined_loss_at_epoch_zero_has_no_alignment_gradient():
    align_in = Tensor([1.5, -0.5], requires_grad=True)
    rec_in = Tensor([2.0], requires_grad=True)
    rec = ops.sum(ops.square(rec_in))
    align = ops.sum(ops.square(align_in))
    total = combined_loss(rec, align, CurriculumState(0, 5))
    total.backward()
    np.testing.assert_array_equal(align_in.grad, [0.0, 0.0])
    assert rec_in.grad[0] == 4.0


# ==============================================================================
# Triplet assignment
# ==============================================================================


def test_two_by_two_assignment_is_valid():
    assignment = assign_triplets(["r0", "r1"], n_channels=2, rng_seed=0)
    assert sorted(assignment.anchor_index.tolist()) == [0, 1, 2, 3]
    a_rows, a_chans = assignment.split(assignment.anchor_index)
    p_rows, p_chans = assignment.split(assignment.positive_index)
    n_rows, _ = assignment.split(assignment.negative_index)
    np.testing.assert_array_equal(p_rows, a_rows)
    assert np.all(p_chans != a_chans)
    assert np.all(n_rows != a_rows)


def test_assignment_respects_keys():
    keys = ["s1", "s1", "s2", "s3", "s2"]
    assignment = assign_triplets(keys, n_channels=4, rng_seed=9)
    a_rows, _ = assignment.split(assignment.anchor_index)
    n_rows, _ = assignment.split(assignment.negative_index)
    for a, n in zip(a_rows, n_rows, strict=True):
        assert keys[a] != keys[n]


def test_assignment_is_seeded():
    first = assign_triplets(["a", "b", "c"], 3, rng_seed=4)
    second = assign_triplets(["a", "b", "c"], 3, rng_seed=4)
    np.testing.assert_array_equal(first.positive_index, second.positive_index)
    np.testing.assert_array_equal(first.negative_index, second.negative_index)


def test_single_record_batch_is_rejected():
    with pytest.raises(InsufficientRecordsError):
        assign_triplets(["only", "only"], n_channels=3, rng_seed=0)


def test_alignment_loss_over_channel_matrices():
    rng = np.random.default_rng(6)
    embeddings = [Tensor(rng.standard_normal((3, 4)), requires_grad=True) for _ in range(2)]
    assignment = assign_triplets(["a", "b", "c"], n_channels=2, rng_seed=1)
    loss = alignment_loss(embeddings, assignment)
    stacked = np.concatenate([e.data for e in embeddings])
    expected = triplet_loss(
        Tensor(stacked[assignment.anchor_index]),
        Tensor(stacked[assignment.positive_index]),
        Tensor(stacked[assignment.negative_index]),
    )
    assert loss.item() == pytest.approx(expected.item(), abs=1e-15)
