"""Distributed runs must reproduce the single-process reference trainer."""

from __future__ import annotations

import numpy as np
import pytest

from modred.disttrain.launch import run_local
from modred.disttrain.reference import train_reference
from modred.disttrain.worker import Worker


def _max_param_gap(left, right) -> float:
    gap = 0.0
    for name, values in left.params.items():
        gap = max(gap, float(np.max(np.abs(values - right.params[name]))))
    return gap


@pytest.mark.integration
@pytest.mark.parametrize("transport", ["memory", "socket"])
def test_distributed_matches_reference(tiny_records, make_config, transport):
    cfg = make_config(curriculum=False)
    reference = train_reference(cfg, records=tiny_records)
    distributed = run_local(cfg, transport=transport, records=tiny_records)

    assert distributed.summary.steps == 3
    assert distributed.summary.embeddings_received == 4 * 3
    assert distributed.summary.gradients_sent == 4 * 3
    for channel in cfg.channels:
        worker_ckpt = distributed.workers[channel].checkpoint
        assert worker_ckpt.step == 3
        assert _max_param_gap(reference.checkpoints[channel], worker_ckpt) < 1e-8
    assert distributed.summary.metrics == reference.metrics


@pytest.mark.integration
def test_epoch_zero_gradients_are_zero(tiny_records, make_config, mocker):
    spy = mocker.spy(Worker, "_await_gradients")
    cfg = make_config()
    run_local(cfg, records=tiny_records)

    assert len(spy.spy_return_list) == 4 * 3
    for grad in spy.spy_return_list:
        assert grad.shape == (2, cfg.model.enc_dim)
        assert not np.any(grad)


@pytest.mark.integration
def test_align_off_worker_never_waits_and_matches_standalone(tiny_records, make_config, mocker):
    spy = mocker.spy(Worker, "_await_gradients")
    distributed = run_local(make_config(align=False), records=tiny_records)

    assert spy.call_count == 0
    assert distributed.summary.embeddings_received == 0
    standalone = train_reference(make_config(align=False, channels=[2]), records=tiny_records)
    gap = _max_param_gap(standalone.checkpoints[2], distributed.workers[2].checkpoint)
    assert gap == 0.0


def test_align_on_and_off_agree_while_alignment_weight_is_zero(tiny_records, make_config):
    aligned = train_reference(make_config(), records=tiny_records)
    baseline = train_reference(make_config(align=False), records=tiny_records)
    for channel in (0, 3):
        left, right = aligned.checkpoints[channel], baseline.checkpoints[channel]
        assert _max_param_gap(left, right) == 0.0
    assert aligned.metrics[0].w_align == 0.0
    assert aligned.metrics[0].align_loss > 0.0


@pytest.mark.integration
def test_single_subject_batches_match_reference(one_subject_records, make_config):
    cfg = make_config(negative_key="subject", curriculum=False)
    reference = train_reference(cfg, records=one_subject_records)
    distributed = run_local(cfg, records=one_subject_records)
    for channel in cfg.channels:
        worker_ckpt = distributed.workers[channel].checkpoint
        assert _max_param_gap(reference.checkpoints[channel], worker_ckpt) < 1e-8
    assert distributed.summary.metrics == reference.metrics
