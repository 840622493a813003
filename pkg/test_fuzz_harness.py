"""Tests for the seeded generators and the fuzz runner."""

import logging

import pytest

from csp_engine import PinnedOrder
from fuzz_harness import (FuzzConfig, FuzzReport, FuzzRunner, random_closed_relation, random_near_affine,
                          random_pin, run_fuzz, run_fuzz_trial, trial_rng)
from gf2_affine import is_near_affine
from polymorphisms import Operation, preserves


def test_clamped_config_logs_a_warning(caplog):
    config = FuzzConfig(mode='normal-form', max_vars=6, max_constraints=12)
    with caplog.at_level(logging.WARNING, logger='fuzz_harness'):
        clamped = config.clamped()
    assert clamped.max_vars == 4
    assert clamped.max_constraints == 1
    assert 'clamped' in caplog.text


def test_config_within_caps_is_unchanged():
    config = FuzzConfig(max_vars=4, max_constraints=5)
    assert config.clamped() == config


@pytest.mark.parametrize('kwargs', [
    {'mode': 'sat'},
    {'engine': 'pp'},
    {'trials': -1},
    {'max_vars': 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        FuzzConfig(**kwargs)


def test_zero_trials():
    report = run_fuzz(FuzzConfig(trials=0))
    assert report.summary_line() == '0/0 agree'
    assert report.verdict_counts().empty
    assert report.to_frame().empty


def test_runs_are_deterministic():
    config = FuzzConfig(seed=42, trials=15, max_vars=4, max_constraints=6)
    first = run_fuzz(config)
    second = run_fuzz(config)
    assert first.results == second.results


def test_single_trial_replays():
    config = FuzzConfig(seed=42, trials=8, max_vars=4, max_constraints=6)
    report = run_fuzz(config)
    assert run_fuzz_trial(config, 5) == report.results[5]
    shifted = run_fuzz(FuzzConfig(seed=42, trials=3, start=5, max_vars=4, max_constraints=6))
    assert [r.index for r in shifted.results] == [5, 6, 7]
    assert shifted.results == report.results[5:]


def test_trial_rng_streams_differ():
    assert trial_rng(1, 0).integers(1 << 30) != trial_rng(1, 1).integers(1 << 30)
    assert trial_rng(1, 3).integers(1 << 30) == trial_rng(1, 3).integers(1 << 30)


def test_worker_pool_gives_the_same_report():
    config = FuzzConfig(seed=9, trials=6, max_vars=3, max_constraints=4)
    pooled = run_fuzz(FuzzConfig(seed=9, trials=6, max_vars=3, max_constraints=4, workers=2))
    assert pooled.results == run_fuzz(config).results


def test_runner_stats():
    runner = FuzzRunner(FuzzConfig(seed=5, trials=10, max_vars=4, max_constraints=6))
    report = runner.run()
    assert runner.stats['trials'] == 10
    assert runner.stats['agree'] == report.agreed == 10
    assert runner.stats['mismatches'] == []


def test_verdict_counts():
    report = run_fuzz(FuzzConfig(seed=5, trials=10, max_vars=4, max_constraints=6))
    counts = report.verdict_counts()
    assert set(counts.columns) == {'verdict', 'trials', 'agree'}
    assert counts['trials'].sum() == 10
    assert set(counts['verdict']) <= {'SAT', 'UNSAT'}


def test_replay_hint():
    config = FuzzConfig(seed=3, trials=1, max_vars=4, max_constraints=6, mode='qcsp', engine='mx')
    report = FuzzReport(config)
    result = run_fuzz_trial(config, 0)
    assert report.replay_hint(result) == ('fuzz --mode qcsp --engine mx --seed 3 --start 0 --trials 1 '
                                          '--max-vars 4 --max-constraints 6')


def test_normal_form_mode():
    report = run_fuzz(FuzzConfig(seed=1, trials=25, mode='normal-form', max_vars=3, max_constraints=1))
    assert report.agreed == 25, [r.detail for r in report.mismatches]


def test_preserve_mode():
    report = run_fuzz(FuzzConfig(seed=1, trials=25, mode='preserve', max_vars=3, max_constraints=3))
    assert report.agreed == 25, [r.detail for r in report.mismatches]


def test_random_near_affine():
    for index in range(20):
        rng = trial_rng(8, index)
        relation = random_near_affine(rng, 1 + index % 4)
        assert is_near_affine(relation).near_affine
        assert not any(t.is_ones() for t in relation.members)


@pytest.mark.parametrize('language, op', [
    ('min', Operation.MIN),
    ('mx', Operation.MX),
    ('max', Operation.MAX),
    ('dual-mx', Operation.DUAL_MX),
    ('pp', Operation.PP),
])
def test_random_closed_relations_are_closed(language, op):
    for index in range(15):
        relation = random_closed_relation(trial_rng(4, index), language, 1 + index % 3)
        assert preserves(op, relation).closed


def test_random_pin():
    names = ['a', 'b', 'c', 'd']
    pins = [random_pin(trial_rng(6, i), names) for i in range(30)]
    assert any(p is None for p in pins)
    for pin in pins:
        if pin is not None:
            assert isinstance(pin, PinnedOrder)
            assert pin.variables() <= set(names)
