"""
Test script for the Monte-Carlo experiment harness.

The N_s = 500 reproduction runs are marked slow; skip them with
`pytest -m "not slow"`.
"""

import math

import numpy as np
import pytest

from config import parse_config, with_overrides
from errors import InvalidArgumentError, TrialError
from harness import (
    ExperimentHarness,
    TrialSummary,
    aggregate_summaries,
    ddsa_wins,
    derive_trial_seed,
    run_comparison,
    run_experiment,
    run_trial,
    slots_to_threshold,
    trial_streams,
)
from strategies import Strategy, StrategyManager
from strategies.ddsa import quantization_efficiency
from trace_sink import ConvergenceTrace, TraceRecord


def small_spec(**overrides):
    base = {"n_transmitters": 20, "trials": 4, "master_seed": 5, "workers": 1}
    base.update(overrides)
    return with_overrides(parse_config("{}"), **base)


def trace_of(values):
    return ConvergenceTrace(
        trial_index=0,
        algorithm="ddsa",
        records=[TraceRecord(slot=i, rss=v, normalized_rss=v) for i, v in enumerate(values)],
    )


class ExplodingStrategy(Strategy):
    """Fails on odd trial indices."""

    name = "ddsa"
    description = "Raises on odd trials."
    parameters = {
        "sweeps": {
            "type": "int",
            "description": "Unused",
            "required": False
        }
    }
    category = "reference"

    def forward(self, channel, state, system, spec, rng, recorder):
        if recorder.trial_index % 2 == 1:
            raise FloatingPointError("synthetic overflow")
        recorder.record_slot(0.5 * recorder.aligned_rss)
        return recorder.to_trace()

    def feedback_bits_used(self, spec, trace, rounds):
        return 0


class SilentStrategy(Strategy):
    """Returns without recording a single slot."""

    name = "ddsa"
    description = "Records nothing."
    parameters = {
        "sweeps": {
            "type": "int",
            "description": "Unused",
            "required": False
        }
    }
    category = "reference"

    def forward(self, channel, state, system, spec, rng, recorder):
        return recorder.to_trace()

    def feedback_bits_used(self, spec, trace, rounds):
        return 0


def test_trial_seed_derivation():
    assert derive_trial_seed(0, 0) == derive_trial_seed(0, 0)
    assert derive_trial_seed(0, 0) != derive_trial_seed(0, 1)
    assert derive_trial_seed(0, 3) != derive_trial_seed(1, 3)
    assert 0 <= derive_trial_seed(2 ** 64 - 1, 99) < 2 ** 64


def test_trial_streams_are_independent_and_reproducible():
    channel_a, algorithm_a = trial_streams(123)
    channel_b, algorithm_b = trial_streams(123)
    assert channel_a.random() == channel_b.random()
    assert algorithm_a.random() == algorithm_b.random()
    channel, algorithm = trial_streams(123)
    assert channel.random() != algorithm.random()


def test_same_trial_gives_identical_trace():
    spec = small_spec()
    first, summary_a = run_trial(spec, 2)
    second, summary_b = run_trial(spec, 2)
    assert first.to_dict() == second.to_dict()
    assert summary_a == summary_b


def test_single_transmitter_is_aligned_immediately():
    spec = small_spec(n_transmitters=1)
    trace, summary = run_trial(spec, 0)
    assert len(trace) == 3
    assert all(r.normalized_rss == pytest.approx(1.0) for r in trace.records)
    assert summary.slots_to_threshold == 0


@pytest.mark.parametrize("n_transmitters,sweeps", [(1, 1), (20, 1), (20, 2), (7, 3)])
def test_ddsa_trace_length(n_transmitters, sweeps):
    spec = small_spec(n_transmitters=n_transmitters, sweeps=sweeps)
    trace, summary = run_trial(spec, 1)
    assert len(trace) == 1 + 2 * n_transmitters * sweeps
    assert [r.slot for r in trace.records] == list(range(len(trace)))
    assert summary.total_slots == len(trace)
    assert summary.feedback_bits_used == n_transmitters * sweeps * spec.feedback_bits


def test_normalized_rss_stays_within_bound():
    for algorithm in ("ddsa", "onebit"):
        report = run_experiment(small_spec(algorithm=algorithm, max_slots=400, trials=3))
        for trace in report.traces:
            assert all(0.0 <= r.normalized_rss <= 1.0 + 1e-12 for r in trace.records)


def test_paired_trials_share_the_channel():
    spec = small_spec(max_slots=50)
    for t in range(3):
        ddsa_trace, _ = run_trial(with_overrides(spec, algorithm="ddsa"), t)
        onebit_trace, _ = run_trial(with_overrides(spec, algorithm="onebit"), t)
        ddsa_bound = ddsa_trace.records[0].rss / ddsa_trace.records[0].normalized_rss
        onebit_bound = onebit_trace.records[0].rss / onebit_trace.records[0].normalized_rss
        assert ddsa_bound == pytest.approx(onebit_bound, rel=1e-12)
        assert ddsa_trace.seed == onebit_trace.seed


def test_slots_to_threshold_examples():
    assert slots_to_threshold(trace_of([0.50, 0.90, 0.96]), 0.95) == 2
    assert slots_to_threshold(trace_of([0.96, 0.97]), 0.95) == 0
    assert slots_to_threshold(trace_of([0.1, 0.2, 0.3]), 0.95) is None
    with pytest.raises(InvalidArgumentError):
        slots_to_threshold(trace_of([]), 0.95)
    with pytest.raises(InvalidArgumentError):
        slots_to_threshold(trace_of([0.5]), 1.5)


def test_slots_to_threshold_absolute_mode():
    trace = ConvergenceTrace(trial_index=0, algorithm="onebit", records=[
        TraceRecord(slot=0, rss=3.0, normalized_rss=0.3),
        TraceRecord(slot=1, rss=6.0, normalized_rss=0.6),
    ])
    assert slots_to_threshold(trace, 5.0, absolute=True) == 1
    assert slots_to_threshold(trace, 7.0, absolute=True) is None


def test_single_trial_aggregate_equals_summary():
    report = run_experiment(small_spec(trials=1))
    summary = report.summaries[0]
    aggregate = report.aggregate
    assert aggregate["completed"] == 1
    assert aggregate["final_normalized_rss"]["mean"] == summary.final_normalized_rss
    assert aggregate["final_normalized_rss"]["median"] == summary.final_normalized_rss
    assert aggregate["final_normalized_rss"]["std"] == 0.0
    assert aggregate["total_slots"]["mean"] == summary.total_slots
    if summary.reached:
        assert aggregate["slots_to_threshold"]["mean"] == summary.slots_to_threshold
        assert aggregate["fraction_reached"] == 1.0
    else:
        assert aggregate["slots_to_threshold"] is None
        assert aggregate["fraction_reached"] == 0.0


def test_aggregate_ignores_order():
    spec = small_spec()
    summaries = [
        TrialSummary(trial_index=i, algorithm="ddsa", seed=i, slots_to_threshold=s,
                     final_rss=1.0, final_normalized_rss=f, total_slots=41)
        for i, s, f in [(2, None, 0.5), (0, 10, 0.97), (1, 30, 0.96)]
    ]
    forward = aggregate_summaries(summaries, spec)
    backward = aggregate_summaries(list(reversed(summaries)), spec)
    assert forward == backward
    assert forward["fraction_reached"] == pytest.approx(2 / 3)
    assert forward["slots_to_threshold"]["mean"] == 20.0
    assert forward["analytic_target"] == pytest.approx(quantization_efficiency(3))


def test_worker_count_does_not_change_results():
    serial = run_experiment(small_spec(trials=6, workers=1))
    threaded = run_experiment(small_spec(trials=6, workers=3))
    assert [t.to_dict() for t in serial.traces] == [t.to_dict() for t in threaded.traces]
    assert serial.summary_dict() == threaded.summary_dict()


def test_failed_trials_are_aggregated_not_fatal():
    manager = StrategyManager()
    manager.add_strategy(ExplodingStrategy())
    harness = ExperimentHarness(small_spec(trials=5), manager=manager)

    with pytest.raises(TrialError) as info:
        harness.run_trial(3)
    assert info.value.trial_index == 3

    report = harness.run_experiment()
    assert not report.ok
    assert [s.trial_index for s in report.summaries] == [0, 2, 4]
    assert [f["trial_index"] for f in report.failures] == [1, 3]
    assert report.failures[0]["error"] == "FloatingPointError"
    assert report.aggregate["failed"] == 2
    assert report.aggregate["completed"] == 3


def test_empty_trace_is_a_trial_failure():
    manager = StrategyManager()
    manager.add_strategy(SilentStrategy())
    harness = ExperimentHarness(small_spec(trials=3, workers=2), manager=manager)

    with pytest.raises(TrialError) as info:
        harness.run_trial(1)
    assert isinstance(info.value.cause, InvalidArgumentError)

    report = harness.run_experiment()
    assert report.summaries == []
    assert report.traces == []
    assert [f["trial_index"] for f in report.failures] == [0, 1, 2]
    assert all(f["error"] == "InvalidArgumentError" for f in report.failures)
    assert report.aggregate["completed"] == 0
    assert report.aggregate["failed"] == 3


def test_ddsa_wins_rule():
    assert ddsa_wins(10, 20)
    assert ddsa_wins(10, None)
    assert not ddsa_wins(None, 5)
    assert not ddsa_wins(None, None)
    assert not ddsa_wins(20, 20)


def test_small_comparison_report():
    spec = small_spec(n_transmitters=30, trials=3, max_slots=300)
    comparison = run_comparison(spec)
    assert [row["trial"] for row in comparison.rows] == [0, 1, 2]
    assert comparison.ddsa.spec.algorithm == "ddsa"
    assert comparison.onebit.spec.algorithm == "onebit"
    data = comparison.to_dict()
    assert data["pairs"] == 3
    assert 0.0 <= data["win_fraction"] <= 1.0


@pytest.mark.slow
def test_one_sweep_convergence_at_500_transmitters():
    spec = small_spec(n_transmitters=500, feedback_bits=3, trials=100, master_seed=2014)
    report = run_experiment(spec)
    finals = [s.final_normalized_rss for s in report.summaries]
    assert 0.954 <= float(np.mean(finals)) <= 0.994
    assert sum(1 for f in finals if f >= 0.95) >= 95


@pytest.mark.slow
def test_ddsa_beats_onebit_on_paired_seeds():
    spec = small_spec(n_transmitters=500, trials=100, master_seed=2014,
                      delta_max=math.pi / 30.0, max_slots=20000, workers=4)
    comparison = run_comparison(spec)
    for row in comparison.rows:
        if row["ddsa_slots"] is not None:
            assert row["ddsa_slots"] <= 1001
    assert comparison.win_fraction >= 0.95


@pytest.mark.slow
def test_mean_rss_increases_with_feedback_bits():
    means = []
    for bits in (1, 2, 3, 4):
        report = run_experiment(small_spec(n_transmitters=200, trials=50, feedback_bits=bits, master_seed=7))
        mean = float(np.mean([s.final_normalized_rss for s in report.summaries]))
        assert abs(mean - quantization_efficiency(bits)) <= 0.02
        means.append(mean)
    assert all(b > a for a, b in zip(means, means[1:]))
