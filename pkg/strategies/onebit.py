"""
One-bit feedback random-perturbation baseline.

Every slot each transmitter perturbs its phase by an independent random
offset. The receiver measures the resulting RSS and broadcasts a single bit:
keep the perturbation if RSS beats the best value seen so far, otherwise all
transmitters revert. Best-so-far RSS is therefore non-decreasing.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Optional, Tuple

import numpy as np

from errors import InvalidArgumentError
from network_model import BeamformerState, ChannelRealization, SystemConfig, aligned_rss, rss
from strategies.strategy import Strategy
from trace_sink import ConvergenceTrace, TrialRecorder

logger = logging.getLogger(__name__)

DEFAULT_DELTA_MAX = math.pi / 30.0
DEFAULT_MAX_SLOTS = 20000
PERTURBATIONS = ("uniform", "binary")
# Relative margin a measurement must clear to count as an improvement
ACCEPT_TOLERANCE = 4.0 * np.finfo(float).eps


@dataclass(frozen=True)
class OneBitConfig:
    """Parameters of the keep/revert random search."""

    delta_max: float = DEFAULT_DELTA_MAX
    max_slots: int = DEFAULT_MAX_SLOTS
    perturbation: str = "uniform"

    def __post_init__(self):
        if not 0.0 < self.delta_max < math.pi:
            raise InvalidArgumentError(f"delta_max must lie in (0, pi), got {self.delta_max}")
        if int(self.max_slots) != self.max_slots or self.max_slots < 1:
            raise InvalidArgumentError(f"max_slots must be a positive integer, got {self.max_slots}")
        if self.perturbation not in PERTURBATIONS:
            raise InvalidArgumentError(f"perturbation must be one of {PERTURBATIONS}, got {self.perturbation!r}")

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Independent per-transmitter phase perturbations."""
        if self.perturbation == "binary":
            return self.delta_max * rng.choice(np.array([-1.0, 1.0]), size=n)
        return rng.uniform(-self.delta_max, self.delta_max, size=n)


def onebit_step(channel: ChannelRealization, state: BeamformerState, system: SystemConfig,
                onebit: OneBitConfig, best_rss: float,
                rng: np.random.Generator) -> Tuple[BeamformerState, float, float]:
    """One perturb-measure-keep/revert slot.

    Args:
        channel: Channel realization
        state: Beamformer state whose RSS equals best_rss
        system: System parameters
        onebit: Perturbation parameters
        best_rss: Best RSS observed so far
        rng: Algorithm random stream

    Returns:
        Tuple of (state, updated best_rss, RSS measured this slot)
    """
    previous = state.psi
    state.psi = previous + onebit.draw(state.n_transmitters, rng)
    measured = rss(channel, state, system)
    if measured > best_rss * (1.0 + ACCEPT_TOLERANCE):
        return state, measured, measured
    state.psi = previous
    return state, best_rss, measured


def run_onebit(channel: ChannelRealization, state: BeamformerState, system: SystemConfig,
               onebit: OneBitConfig, rng: np.random.Generator,
               threshold: Optional[float] = None, absolute_threshold: bool = False,
               sink: Optional[TrialRecorder] = None) -> ConvergenceTrace:
    """Iterate onebit_step until max_slots or the threshold is reached.

    The initial best RSS is the RSS of the starting state. Slot s records the
    best-so-far RSS after the (s+1)-th perturbation measurement.

    Args:
        channel: Channel realization
        state: Initial beamformer state, updated in place
        system: System parameters
        onebit: Perturbation parameters
        rng: Algorithm random stream
        threshold: Optional stopping target
        absolute_threshold: Compare raw RSS instead of normalized RSS
        sink: Optional per-trial recorder; a private one is used otherwise

    Returns:
        ConvergenceTrace of best-so-far RSS per slot
    """
    bound = aligned_rss(channel, system)
    recorder = sink if sink is not None else TrialRecorder(0, OneBitStrategy.name, bound)
    best = rss(channel, state, system)
    accepted = 0

    for _ in range(onebit.max_slots):
        state, new_best, _measured = onebit_step(channel, state, system, onebit, best, rng)
        if new_best > best:
            accepted += 1
        best = new_best
        recorder.record_slot(best)
        if threshold is not None:
            level = best if absolute_threshold else best / bound
            if level >= threshold:
                break

    logger.debug(
        f"One-bit run: {recorder.next_slot} slots, {accepted} accepted, "
        f"normalized RSS {best / bound:.4f}"
    )
    return recorder.to_trace()


class OneBitStrategy(Strategy):
    """Random perturbation search driven by a one-bit keep/revert feedback."""

    name = "onebit"
    description = "Random phase perturbations kept only when RSS beats the best so far (1 bit per slot)."
    parameters = {
        "delta_max": {
            "type": "float",
            "description": "Perturbation half-width in radians",
            "required": True
        },
        "max_slots": {
            "type": "int",
            "description": "Maximum number of slots",
            "required": True
        },
        "perturbation": {
            "type": "str",
            "description": "Perturbation distribution (uniform or binary)",
            "required": False
        }
    }
    category = "random_perturbation"

    def forward(self, channel: ChannelRealization, state: BeamformerState, system: SystemConfig,
                spec: Any, rng: np.random.Generator, recorder: TrialRecorder) -> ConvergenceTrace:
        onebit = OneBitConfig(
            delta_max=spec.delta_max,
            max_slots=spec.max_slots,
            perturbation=getattr(spec, "perturbation", None) or "uniform",
        )
        return run_onebit(
            channel, state, system, onebit, rng,
            threshold=getattr(spec, "threshold", None),
            absolute_threshold=getattr(spec, "threshold_mode", "normalized") == "absolute",
            sink=recorder,
        )

    def feedback_bits_used(self, spec: Any, trace: ConvergenceTrace, rounds: int) -> int:
        return len(trace)
