"""
Monte-Carlo experiment harness for phasealign.

This module contains the ExperimentHarness class which runs seeded trials of a
phase-alignment strategy on fresh Rayleigh channels, collects their
convergence traces and aggregates per-trial summaries. Every output is a pure
function of the ExperimentSpec: trial seeds are derived from
(master_seed, trial_index) and results are merged in trial-index order no
matter how many workers run them.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from config import ExperimentSpec, with_overrides
from errors import InvalidArgumentError, TrialError
from network_model import BeamformerState, aligned_rss, sample_rayleigh_channel
from register_strategies import register_strategies
from strategies.ddsa import quantization_efficiency
from strategies.strategy_manager import StrategyManager
from trace_sink import ConvergenceTrace, TraceSink

logger = logging.getLogger(__name__)

CHANNEL_STREAM = 0
ALGORITHM_STREAM = 1


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """64-bit per-trial seed: first word of SeedSequence(master_seed, spawn_key=(trial_index,))."""
    sequence = np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def trial_streams(trial_seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """Counter-based (Philox) channel and algorithm streams of one trial.

    The channel stream depends only on the trial seed, so two algorithms run
    with the same (master_seed, trial_index) see the identical channel.
    """
    def stream(key: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(trial_seed, spawn_key=(key,))))

    return stream(CHANNEL_STREAM), stream(ALGORITHM_STREAM)


def slots_to_threshold(trace: ConvergenceTrace, threshold: float, absolute: bool = False) -> Optional[int]:
    """First slot whose RSS reaches the threshold.

    Args:
        trace: Convergence trace of one trial
        threshold: Target, normalized RSS in (0, 1] unless `absolute`
        absolute: Compare raw RSS instead of normalized RSS

    Returns:
        The slot index, or None if the threshold was never reached
    """
    if not trace.records:
        raise InvalidArgumentError("Cannot search an empty trace")
    if threshold <= 0 or (not absolute and threshold > 1.0):
        raise InvalidArgumentError(f"threshold out of range: {threshold}")
    for record in trace.records:
        value = record.rss if absolute else record.normalized_rss
        if value >= threshold:
            return record.slot
    return None


@dataclass(frozen=True)
class TrialSummary:
    """Outcome of one trial."""

    trial_index: int
    algorithm: str
    seed: int
    slots_to_threshold: Optional[int]
    final_rss: float
    final_normalized_rss: float
    total_slots: int
    degenerate_rounds: int = 0
    feedback_bits_used: int = 0

    @property
    def reached(self) -> bool:
        return self.slots_to_threshold is not None

    def to_dict(self) -> Dict[str, Any]:
        """Convert TrialSummary to a dictionary for serialization"""
        return {
            "trial_index": self.trial_index,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "slots_to_threshold": self.slots_to_threshold,
            "final_rss": self.final_rss,
            "final_normalized_rss": self.final_normalized_rss,
            "total_slots": self.total_slots,
            "degenerate_rounds": self.degenerate_rounds,
            "feedback_bits_used": self.feedback_bits_used,
        }


def _stats(values: List[float]) -> Optional[Dict[str, float]]:
    if not values:
        return None
    array = np.asarray(values, dtype=float)
    return {
        "mean": float(np.mean(array)),
        "median": float(np.median(array)),
        "std": float(np.std(array)),
        "min": float(np.min(array)),
        "max": float(np.max(array)),
    }


def aggregate_summaries(summaries: List[TrialSummary], spec: ExperimentSpec,
                        failures: Optional[List[Dict[str, Any]]] = None) -> Dict[str, Any]:
    """Summary statistics over trials, computed in trial-index order.

    Args:
        summaries: Per-trial summaries of the successful trials
        spec: The experiment spec
        failures: Failed trials, counted but not averaged

    Returns:
        Dict with counts, fraction reached, and mean/median/std blocks
    """
    ordered = sorted(summaries, key=lambda s: s.trial_index)
    reached = [s.slots_to_threshold for s in ordered if s.reached]
    aggregate = {
        "algorithm": spec.algorithm,
        "trials": spec.trials,
        "completed": len(ordered),
        "failed": len(failures or []),
        "threshold": spec.threshold,
        "threshold_mode": spec.threshold_mode,
        "fraction_reached": (len(reached) / len(ordered)) if ordered else 0.0,
        "slots_to_threshold": _stats(reached),
        "final_normalized_rss": _stats([s.final_normalized_rss for s in ordered]),
        "total_slots": _stats([s.total_slots for s in ordered]),
    }
    if spec.algorithm == "ddsa" and not spec.exact_feedback:
        aggregate["analytic_target"] = quantization_efficiency(spec.feedback_bits)
    return aggregate


@dataclass
class ExperimentReport:
    """Everything one experiment produced."""

    spec: ExperimentSpec
    summaries: List[TrialSummary]
    traces: List[ConvergenceTrace]
    aggregate: Dict[str, Any]
    failures: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary_dict(self, strategy: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        data = {
            "spec": self.spec.result_dict(),
            "aggregate": self.aggregate,
            "trials": [s.to_dict() for s in self.summaries],
            "failures": self.failures,
        }
        if strategy is not None:
            data["strategy"] = strategy
        return data

    def to_dict(self, strategy: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Summary plus full traces."""
        data = self.summary_dict(strategy)
        data["traces"] = [t.to_dict() for t in self.traces]
        return data


class ExperimentHarness:
    """Runs the trials of one ExperimentSpec."""

    def __init__(self, spec: ExperimentSpec, manager: Optional[StrategyManager] = None,
                 sink: Optional[TraceSink] = None, show_progress: bool = False):
        """Initialize the harness.

        Args:
            spec: Validated experiment spec
            manager: Strategy registry (default: register_strategies())
            sink: Trace sink collecting committed traces
            show_progress: Show a tqdm progress bar over trials
        """
        self.spec = spec
        self.manager = manager or register_strategies()
        self.strategy = self.manager.get_strategy_by_name(spec.algorithm)
        self.sink = sink or TraceSink()
        self.show_progress = show_progress

    def run_trial(self, trial_index: int) -> Tuple[ConvergenceTrace, TrialSummary]:
        """Run a single seeded trial.

        Args:
            trial_index: Index of the trial within the experiment

        Returns:
            Tuple of (trace, summary)

        Raises:
            TrialError: Wrapping any failure inside the strategy
        """
        spec = self.spec
        seed = derive_trial_seed(spec.master_seed, trial_index)
        logger.debug(f"Trial {trial_index}: seed={seed}")

        try:
            channel_rng, algorithm_rng = trial_streams(seed)
            channel = sample_rayleigh_channel(spec.n_transmitters, channel_rng)
            system = spec.system_config()
            state = BeamformerState.zeros(spec.n_transmitters)
            bound = aligned_rss(channel, system)

            recorder = self.sink.open_trial(trial_index, self.strategy.name, bound, seed=seed)
            self.strategy(channel, state, system, spec, algorithm_rng, recorder)
            trace = recorder.to_trace()
            final = trace.final
            if final is None:
                raise InvalidArgumentError(f"Strategy '{self.strategy.name}' recorded no slots")
            rounds = len(recorder.round_logs)
            summary = TrialSummary(
                trial_index=trial_index,
                algorithm=self.strategy.name,
                seed=seed,
                slots_to_threshold=slots_to_threshold(trace, spec.threshold, spec.threshold_mode == "absolute"),
                final_rss=final.rss,
                final_normalized_rss=final.normalized_rss,
                total_slots=len(trace),
                degenerate_rounds=sum(1 for log in recorder.round_logs if log.estimate.degenerate),
                feedback_bits_used=self.strategy.feedback_bits_used(spec, trace, rounds),
            )
            # only trials that produced a summary reach the sink
            trace = self.sink.commit(recorder)
        except Exception as e:
            raise TrialError(trial_index, e) from e

        return trace, summary

    def run_experiment(self) -> ExperimentReport:
        """Run every trial and aggregate the results.

        Failed trials are collected into the report instead of aborting the
        remaining ones.

        Returns:
            ExperimentReport in trial-index order
        """
        spec = self.spec
        logger.info(
            f"Running {spec.trials} {spec.algorithm} trials "
            f"(N_s={spec.n_transmitters}, seed={spec.master_seed}, workers={spec.workers})"
        )
        results: Dict[int, Tuple[ConvergenceTrace, TrialSummary]] = {}
        failures: Dict[int, Dict[str, Any]] = {}

        def record(index: int, run) -> None:
            try:
                results[index] = run()
            except TrialError as e:
                logger.warning(str(e))
                failures[index] = {
                    "trial_index": index,
                    "error": type(e.cause).__name__,
                    "message": str(e.cause),
                }

        progress = tqdm(total=spec.trials, desc=spec.algorithm, disable=not self.show_progress)
        if spec.workers > 1:
            with ThreadPoolExecutor(max_workers=spec.workers) as executor:
                futures = {executor.submit(self.run_trial, t): t for t in range(spec.trials)}
                for future in as_completed(futures):
                    record(futures[future], future.result)
                    progress.update(1)
        else:
            for t in range(spec.trials):
                record(t, lambda t=t: self.run_trial(t))
                progress.update(1)
        progress.close()

        summaries = [results[t][1] for t in sorted(results)]
        traces = [results[t][0] for t in sorted(results)]
        failure_list = [failures[t] for t in sorted(failures)]
        aggregate = aggregate_summaries(summaries, spec, failure_list)
        logger.info(
            f"{spec.algorithm}: {aggregate['completed']}/{spec.trials} trials completed, "
            f"fraction reached {aggregate['fraction_reached']:.3f}"
        )
        return ExperimentReport(spec=spec, summaries=summaries, traces=traces,
                                aggregate=aggregate, failures=failure_list)


def run_trial(spec: ExperimentSpec, trial_index: int) -> Tuple[ConvergenceTrace, TrialSummary]:
    """Run one trial of `spec` with a fresh harness."""
    return ExperimentHarness(spec).run_trial(trial_index)


def run_experiment(spec: ExperimentSpec, show_progress: bool = False) -> ExperimentReport:
    """Run all trials of `spec`."""
    return ExperimentHarness(spec, show_progress=show_progress).run_experiment()


@dataclass
class ComparisonReport:
    """Paired DDSA vs one-bit experiment on shared channel seeds."""

    ddsa: ExperimentReport
    onebit: ExperimentReport
    rows: List[Dict[str, Any]]

    @property
    def win_fraction(self) -> float:
        if not self.rows:
            return 0.0
        return sum(1 for row in self.rows if row["ddsa_wins"]) / len(self.rows)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pairs": len(self.rows),
            "win_fraction": self.win_fraction,
            "ddsa": self.ddsa.aggregate,
            "onebit": self.onebit.aggregate,
        }


def ddsa_wins(ddsa_slots: Optional[int], onebit_slots: Optional[int]) -> bool:
    """DDSA wins a pair when it reaches the threshold in strictly fewer slots."""
    if ddsa_slots is None:
        return False
    return onebit_slots is None or ddsa_slots < onebit_slots


def run_comparison(spec: ExperimentSpec, show_progress: bool = False) -> ComparisonReport:
    """Run DDSA and one-bit on the same (master_seed, trial_index) pairs."""
    ddsa = run_experiment(with_overrides(spec, algorithm="ddsa"), show_progress)
    onebit = run_experiment(with_overrides(spec, algorithm="onebit"), show_progress)

    onebit_by_trial = {s.trial_index: s for s in onebit.summaries}
    rows = []
    for summary in ddsa.summaries:
        other = onebit_by_trial.get(summary.trial_index)
        if other is None:
            continue
        rows.append({
            "trial": summary.trial_index,
            "ddsa_slots": summary.slots_to_threshold,
            "onebit_slots": other.slots_to_threshold,
            "ddsa_wins": ddsa_wins(summary.slots_to_threshold, other.slots_to_threshold),
        })
    return ComparisonReport(ddsa=ddsa, onebit=onebit, rows=rows)
