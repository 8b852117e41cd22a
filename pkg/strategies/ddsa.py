"""
Deterministic differential search for distributed phase alignment.

Each round probes one transmitter at three phase offsets (0, 2*pi/3, 4*pi/3)
while every other transmitter holds its phase. The three RSS readings fix the
magnitude of the rest-of-network phasor r_i, the magnitude of the probed
phasor c_i and the angle beta = arg(c_i) - arg(r_i) in closed form:

    M_j^2 = R^2 + C^2 + 2*R*C*cos(beta + 2*pi*j/3),  j = 0, 1, 2

The receiver picks the quantization level that maximizes the predicted RSS
and feeds back its K-bit index; the transmitter subtracts that level from its
phase. All magnitudes are in RSS units, i.e. already scaled by sqrt(P).
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from errors import InvalidArgumentError, NumericInconsistencyError
from network_model import (
    BeamformerState,
    ChannelRealization,
    SystemConfig,
    rss,
    rss_of_phases,
    total_phases,
)
from strategies.strategy import Strategy
from trace_sink import ConvergenceTrace, TrialRecorder

logger = logging.getLogger(__name__)

PROBE_STEP = 2.0 * math.pi / 3.0
SQRT3 = math.sqrt(3.0)

# 2RC below DEGENERACY_TOLERANCE * max(1, S) leaves beta undefined
DEGENERACY_TOLERANCE = 1e-12
# negative discriminant S^2 - 4(RC)^2 within this fraction of max(1, S^2) is rounding
DISCRIMINANT_TOLERANCE = 1e-9
# a correction must beat the no-op by this much on the cosine scale to be chosen
TIE_TOLERANCE = 1e-9

SLOTS_PER_ROUND = 2
EXACT_FEEDBACK_BITS = 64
MAX_FEEDBACK_BITS = 16


def quantization_efficiency(bits: int) -> float:
    """Expected normalized RSS after one quantized sweep for large N_s.

    The residual misalignment is uniform on [-pi/2^K, pi/2^K], so the mean
    of cos(residual) is sin(pi/2^K) / (pi/2^K).
    """
    half_width = math.pi / (2 ** bits)
    return math.sin(half_width) / half_width


@dataclass(frozen=True)
class ProbeTriple:
    """RSS readings M_0, M_1, M_2 at offsets 0, 2*pi/3 and 4*pi/3."""

    m0: float
    m1: float
    m2: float

    def __post_init__(self):
        for name in ("m0", "m1", "m2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidArgumentError(f"probe {name} must be finite and non-negative, got {value}")

    @property
    def values(self) -> List[float]:
        return [self.m0, self.m1, self.m2]

    def to_dict(self) -> Dict[str, Any]:
        """Convert ProbeTriple to a dictionary for serialization"""
        return {"m": self.values}


@dataclass(frozen=True)
class DifferentialEstimate:
    """Recovered (|r_i|, |c_i|, beta) of one probe round.

    R and C enter the probe equations symmetrically, so only the unordered
    pair is identifiable; by convention r_mag >= c_mag.
    """

    r_mag: float
    c_mag: float
    beta: float
    degenerate: bool = False

    def predicted_rss(self, correction: float) -> float:
        """RSS after subtracting `correction` from the probed transmitter's phase."""
        value = (self.r_mag ** 2 + self.c_mag ** 2
                 + 2.0 * self.r_mag * self.c_mag * math.cos(self.beta - correction))
        return math.sqrt(max(value, 0.0))

    def to_dict(self) -> Dict[str, Any]:
        """Convert DifferentialEstimate to a dictionary for serialization"""
        return {
            "r_mag": self.r_mag,
            "c_mag": self.c_mag,
            "beta": self.beta,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class QuantizerConfig:
    """Uniform K-bit quantizer of the phase correction.

    Levels are 2*pi*m / 2^K for m = 0 .. 2^K - 1. With `exact` set, the
    receiver feeds back beta itself instead of a level index.
    """

    bits: int = 3
    exact: bool = False

    def __post_init__(self):
        if int(self.bits) != self.bits or not 1 <= self.bits <= MAX_FEEDBACK_BITS:
            raise InvalidArgumentError(f"bits must be an integer in [1, {MAX_FEEDBACK_BITS}], got {self.bits}")

    @property
    def n_levels(self) -> int:
        return 2 ** self.bits

    @property
    def levels(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_levels) / self.n_levels


@dataclass(frozen=True)
class FeedbackMessage:
    """Content of the reverse link for one round."""

    level_index: int
    exact_angle: Optional[float] = None

    def __post_init__(self):
        if self.level_index < 0:
            raise InvalidArgumentError(f"level_index must be >= 0, got {self.level_index}")

    def correction(self, quantizer: QuantizerConfig) -> float:
        """Phase the transmitter subtracts from psi_i."""
        if self.exact_angle is not None:
            return self.exact_angle
        if self.level_index >= quantizer.n_levels:
            raise InvalidArgumentError(
                f"level_index {self.level_index} out of range for a {quantizer.bits}-bit quantizer"
            )
        return float(quantizer.levels[self.level_index])

    def to_dict(self) -> Dict[str, Any]:
        """Convert FeedbackMessage to a dictionary for serialization"""
        return {"level_index": self.level_index, "exact_angle": self.exact_angle}


@dataclass(frozen=True)
class DdsaRoundLog:
    """Trace record of one DDSA round."""

    transmitter_index: int
    probes: ProbeTriple
    estimate: DifferentialEstimate
    feedback: FeedbackMessage
    rss_after: float
    slots_consumed: int = SLOTS_PER_ROUND

    def to_dict(self) -> Dict[str, Any]:
        """Convert DdsaRoundLog to a dictionary for serialization"""
        return {
            "transmitter_index": self.transmitter_index,
            "probes": self.probes.to_dict(),
            "estimate": self.estimate.to_dict(),
            "feedback": self.feedback.to_dict(),
            "rss_after": self.rss_after,
            "slots_consumed": self.slots_consumed,
        }


def _check_index(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise InvalidArgumentError(f"transmitter index {i} out of range [0, {n})")


def probe_round(channel: ChannelRealization, state: BeamformerState, config: SystemConfig,
                i: int, baseline: Optional[float] = None) -> ProbeTriple:
    """Measure RSS with transmitter i offset by 0, 2*pi/3 and 4*pi/3.

    All transmitters transmit in every probe slot; only psi_i is offset. The
    state is never modified.

    Args:
        channel: Channel realization
        state: Current beamformer state
        config: System parameters
        i: Index of the probed transmitter
        baseline: Known RSS of the unprobed state; when given it is used as
            M_0 instead of measuring again

    Returns:
        ProbeTriple with the three readings
    """
    _check_index(i, channel.n_transmitters)
    if config.n_transmitters != channel.n_transmitters:
        raise InvalidArgumentError("config.n_transmitters does not match the channel")

    theta = total_phases(channel, state)
    base = theta[i]
    readings = []
    for j in range(3):
        if j == 0 and baseline is not None:
            readings.append(float(baseline))
            continue
        theta[i] = base + PROBE_STEP * j
        readings.append(rss_of_phases(channel.amplitudes, theta, config.symbol_amplitude))
    return ProbeTriple(*readings)


def solve_differential(probes: ProbeTriple) -> DifferentialEstimate:
    """Recover (R, C, beta) from one probe triple in closed form.

    With S = (M_0^2 + M_1^2 + M_2^2)/3 = R^2 + C^2:

        u = (2 M_0^2 - M_1^2 - M_2^2) / 3 = 2RC cos(beta)
        v = (M_2^2 - M_1^2) / sqrt(3)     = 2RC sin(beta)

    beta = atan2(v, u) and R^2, C^2 are the roots of x^2 - S x + (RC)^2.

    Args:
        probes: The three RSS readings

    Returns:
        DifferentialEstimate; `degenerate` is set when 2RC is too small for
        beta to mean anything

    Raises:
        NumericInconsistencyError: If the readings cannot come from any state
    """
    q0, q1, q2 = (m * m for m in probes.values)
    s = (q0 + q1 + q2) / 3.0
    u = (2.0 * q0 - q1 - q2) / 3.0
    v = (q2 - q1) / SQRT3
    two_rc = math.hypot(u, v)

    if two_rc < DEGENERACY_TOLERANCE * max(1.0, s):
        return DifferentialEstimate(r_mag=math.sqrt(s), c_mag=0.0, beta=0.0, degenerate=True)

    rc = two_rc / 2.0
    discriminant = s * s - 4.0 * rc * rc
    if discriminant < 0.0:
        if discriminant < -DISCRIMINANT_TOLERANCE * max(1.0, s * s):
            raise NumericInconsistencyError(
                f"Inconsistent probes {probes.values}: S^2 - 4(RC)^2 = {discriminant:.3e}"
            )
        discriminant = 0.0

    r_sq = (s + math.sqrt(discriminant)) / 2.0
    r_mag = math.sqrt(r_sq)
    # C from the product avoids cancellation in (S - sqrt(disc)) / 2
    c_mag = rc / r_mag

    beta = math.atan2(v, u)
    if beta >= math.pi:
        beta -= 2.0 * math.pi
    return DifferentialEstimate(r_mag=r_mag, c_mag=c_mag, beta=beta)


def select_feedback(estimate: DifferentialEstimate, quantizer: QuantizerConfig) -> FeedbackMessage:
    """Pick the correction that maximizes the predicted RSS.

    Candidates whose score is within TIE_TOLERANCE of the best are treated as
    tied and the smallest index wins, so level 0 (no change) is kept unless
    another level is strictly better.

    Args:
        estimate: Output of solve_differential
        quantizer: Feedback quantizer

    Returns:
        FeedbackMessage for the probed transmitter
    """
    if estimate.degenerate:
        return FeedbackMessage(level_index=0)

    if quantizer.exact:
        if 1.0 - math.cos(estimate.beta) <= TIE_TOLERANCE:
            return FeedbackMessage(level_index=0)
        return FeedbackMessage(level_index=0, exact_angle=estimate.beta)

    scores = np.cos(estimate.beta - quantizer.levels)
    best = float(np.max(scores))
    level_index = int(np.flatnonzero(scores >= best - TIE_TOLERANCE)[0])
    return FeedbackMessage(level_index=level_index)


def apply_feedback(state: BeamformerState, i: int, feedback: FeedbackMessage,
                   quantizer: QuantizerConfig) -> BeamformerState:
    """Subtract the fed-back correction from psi_i; other entries are untouched."""
    _check_index(i, state.n_transmitters)
    correction = feedback.correction(quantizer)
    if correction != 0.0:
        state.psi[i] = state.psi[i] - correction
    return state


def run_ddsa_sweep(channel: ChannelRealization, state: BeamformerState, config: SystemConfig,
                   quantizer: QuantizerConfig, sink: Optional[TrialRecorder] = None,
                   baseline: Optional[float] = None) -> List[DdsaRoundLog]:
    """Run one DDSA round per transmitter in ascending index order.

    Slot accounting: when no `baseline` is carried in, one slot is spent on
    the initial measurement. Each round then spends two slots on offsets
    j = 1, 2; M_0 of a round is the previous round's post-adjustment RSS,
    which the receiver predicts in closed form without a new transmission.

    Args:
        channel: Channel realization
        state: Beamformer state, updated in place
        config: System parameters
        quantizer: Feedback quantizer
        sink: Optional per-trial recorder receiving slot records and round logs
        baseline: RSS of the current state carried over from a previous sweep

    Returns:
        One DdsaRoundLog per transmitter
    """
    n = channel.n_transmitters
    if state.n_transmitters != n or config.n_transmitters != n:
        raise InvalidArgumentError(
            f"dimension mismatch: channel={n}, state={state.n_transmitters}, config={config.n_transmitters}"
        )

    current = rss(channel, state, config) if baseline is None else float(baseline)
    if baseline is None and sink is not None:
        sink.record_slot(current)

    logs: List[DdsaRoundLog] = []
    for i in range(n):
        probes = probe_round(channel, state, config, i, baseline=current)
        estimate = solve_differential(probes)
        feedback = select_feedback(estimate, quantizer)
        correction = feedback.correction(quantizer)

        if correction == 0.0:
            rss_after = current
        else:
            apply_feedback(state, i, feedback, quantizer)
            rss_after = estimate.predicted_rss(correction)

        if estimate.degenerate:
            logger.debug(f"Round {i}: degenerate geometry, feedback level 0")
        else:
            logger.debug(
                f"Round {i}: beta={estimate.beta:.4f} level={feedback.level_index} "
                f"rss {current:.6f} -> {rss_after:.6f}"
            )

        log = DdsaRoundLog(
            transmitter_index=i,
            probes=probes,
            estimate=estimate,
            feedback=feedback,
            rss_after=rss_after,
        )
        logs.append(log)
        if sink is not None:
            sink.record_slot(current)
            sink.record_slot(rss_after)
            sink.record_round(log)
        current = rss_after

    return logs


class DdsaStrategy(Strategy):
    """Deterministic differential search with K-bit quantized feedback."""

    name = "ddsa"
    description = "Three-probe differential search with K-bit quantized phase feedback."
    parameters = {
        "feedback_bits": {
            "type": "int",
            "description": "Bits K on the reverse link per round",
            "required": True
        },
        "exact_feedback": {
            "type": "bool",
            "description": "Feed back beta unquantized (analysis mode)",
            "required": False
        },
        "sweeps": {
            "type": "int",
            "description": "Number of passes over all transmitters",
            "required": True
        }
    }
    category = "deterministic"

    def forward(self, channel: ChannelRealization, state: BeamformerState, system: SystemConfig,
                spec: Any, rng: np.random.Generator, recorder: TrialRecorder) -> ConvergenceTrace:
        quantizer = QuantizerConfig(bits=spec.feedback_bits, exact=bool(getattr(spec, "exact_feedback", False)))
        baseline = None
        for sweep in range(spec.sweeps):
            logs = run_ddsa_sweep(channel, state, system, quantizer, sink=recorder, baseline=baseline)
            baseline = logs[-1].rss_after
            logger.debug(f"Sweep {sweep + 1}/{spec.sweeps} done, RSS={baseline:.6f}")
        return recorder.to_trace()

    def feedback_bits_used(self, spec: Any, trace: ConvergenceTrace, rounds: int) -> int:
        bits = EXACT_FEEDBACK_BITS if getattr(spec, "exact_feedback", False) else spec.feedback_bits
        return rounds * bits
