"""
Test script for the one-bit random perturbation baseline.
"""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from errors import InvalidArgumentError
from network_model import (
    BeamformerState,
    ChannelRealization,
    SystemConfig,
    aligned_rss,
    rss,
    sample_rayleigh_channel,
)
from strategies.onebit import OneBitConfig, OneBitStrategy, onebit_step, run_onebit
from trace_sink import TrialRecorder


def random_instance(n, seed):
    channel = sample_rayleigh_channel(n, np.random.default_rng(seed))
    return channel, BeamformerState.zeros(n), SystemConfig(n_transmitters=n)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        OneBitConfig(delta_max=0.0)
    with pytest.raises(InvalidArgumentError):
        OneBitConfig(delta_max=math.pi)
    with pytest.raises(InvalidArgumentError):
        OneBitConfig(max_slots=0)
    with pytest.raises(InvalidArgumentError):
        OneBitConfig(perturbation="gaussian")


def test_default_config():
    config = OneBitConfig()
    assert config.delta_max == pytest.approx(math.pi / 30.0)
    assert config.perturbation == "uniform"


def test_draw_respects_half_width():
    rng = np.random.default_rng(1)
    uniform = OneBitConfig(delta_max=0.2).draw(1000, rng)
    assert np.all(np.abs(uniform) <= 0.2)
    binary = OneBitConfig(delta_max=0.2, perturbation="binary").draw(1000, rng)
    assert set(np.round(binary, 12)) == {-0.2, 0.2}


def test_tiny_perturbation_leaves_state_unchanged():
    channel, state, system = random_instance(10, 3)
    state.psi[:] = 1.0
    best = rss(channel, state, system)
    state, new_best, _ = onebit_step(channel, state, system, OneBitConfig(delta_max=1e-18), best,
                                     np.random.default_rng(0))
    assert new_best == pytest.approx(best, rel=1e-15)
    assert np.all(state.psi == 1.0)


def test_single_transmitter_best_is_constant():
    channel = ChannelRealization(amplitudes=[0.7], phases=[0.3])
    state = BeamformerState.zeros(1)
    system = SystemConfig(n_transmitters=1)
    initial = rss(channel, state, system)
    trace = run_onebit(channel, state, system, OneBitConfig(max_slots=2000), np.random.default_rng(5))
    assert len(trace) == 2000
    assert {r.rss for r in trace.records} == {initial}
    assert initial == pytest.approx(0.7)
    assert np.all(state.psi == 0.0)


def test_rounding_noise_is_not_an_improvement():
    channel = ChannelRealization(amplitudes=[0.7], phases=[0.3])
    system = SystemConfig(n_transmitters=1)
    for seed in range(20):
        state = BeamformerState.zeros(1)
        best = rss(channel, state, system)
        rng = np.random.default_rng(seed)
        for _ in range(100):
            state, new_best, _measured = onebit_step(channel, state, system, OneBitConfig(), best, rng)
            assert new_best == best
        assert state.psi.tolist() == [0.0]


def test_reverted_step_restores_state_bitwise():
    channel, state, system = random_instance(10, 4)
    before = state.psi.copy()
    # best_rss above the aligned bound forces a revert
    state, best, measured = onebit_step(channel, state, system, OneBitConfig(), 1e9, np.random.default_rng(2))
    assert best == 1e9
    assert measured < 1e9
    assert np.array_equal(state.psi, before)


def test_best_rss_is_non_decreasing():
    """Best-so-far RSS per slot over 100 seeded trials."""
    onebit = OneBitConfig(max_slots=300)
    for seed in range(100):
        channel, state, system = random_instance(10, 2000 + seed)
        trace = run_onebit(channel, state, system, onebit, np.random.default_rng(seed))
        values = [r.rss for r in trace.records]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert trace.final.rss == pytest.approx(rss(channel, state, system))


def test_every_trial_improves():
    onebit = OneBitConfig(max_slots=1000)
    for seed in range(100):
        channel, state, system = random_instance(10, 3000 + seed)
        initial = rss(channel, state, system)
        trace = run_onebit(channel, state, system, onebit, np.random.default_rng(seed))
        assert trace.final.rss > initial


def test_single_slot_trace():
    channel, state, system = random_instance(5, 1)
    trace = run_onebit(channel, state, system, OneBitConfig(max_slots=1), np.random.default_rng(0))
    assert len(trace) == 1
    assert trace.records[0].slot == 0


def test_fixed_seed_is_deterministic():
    traces = []
    for _ in range(2):
        channel, state, system = random_instance(30, 8)
        traces.append(run_onebit(channel, state, system, OneBitConfig(max_slots=500), np.random.default_rng(77)))
    assert [r.rss for r in traces[0].records] == [r.rss for r in traces[1].records]


def test_stops_at_threshold():
    channel, state, system = random_instance(4, 21)
    trace = run_onebit(channel, state, system, OneBitConfig(delta_max=0.5, max_slots=20000),
                       np.random.default_rng(3), threshold=0.9)
    assert trace.final.normalized_rss >= 0.9
    assert all(r.normalized_rss < 0.9 for r in trace.records[:-1])


def test_approaches_aligned_bound():
    channel, state, system = random_instance(100, 42)
    trace = run_onebit(channel, state, system, OneBitConfig(max_slots=5000), np.random.default_rng(42))
    assert trace.final.normalized_rss > trace.records[0].normalized_rss
    assert trace.final.normalized_rss > 0.5


def test_strategy_records_into_recorder():
    channel, state, system = random_instance(20, 6)
    spec = SimpleNamespace(delta_max=0.2, max_slots=50, perturbation="binary",
                           threshold=None, threshold_mode="normalized")
    recorder = TrialRecorder(3, "onebit", aligned_rss(channel, system), seed=11)
    strategy = OneBitStrategy()
    trace = strategy(channel, state, system, spec, np.random.default_rng(1), recorder)
    assert trace.trial_index == 3
    assert trace.seed == 11
    assert len(trace) == 50
    assert strategy.feedback_bits_used(spec, trace, 0) == 50
