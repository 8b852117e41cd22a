"""
Physical-layer model for distributed transmit beamforming.

This module houses the channel realization, the per-transmitter beamforming
phases and the received-signal-strength (RSS) oracle evaluated at the receiver.
The received baseband signal is sqrt(P) * sum_i a_i * exp(j * (phi_i + psi_i)),
with every transmit gain fixed to 1. RSS is assumed to be estimated without
noise, so SystemConfig.noise_variance is carried but never read by the oracle.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Union

import numpy as np

from errors import DegenerateChannelError, InvalidArgumentError

logger = logging.getLogger(__name__)

ArrayLike = Union[Sequence[float], np.ndarray]


def _frozen_array(values: ArrayLike, name: str) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(array)):
        raise InvalidArgumentError(f"{name} must be finite")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SystemConfig:
    """Static system parameters shared by every transmitter."""

    n_transmitters: int
    symbol_amplitude: float = 1.0  # sqrt(P)
    noise_variance: float = 0.0

    def __post_init__(self):
        if int(self.n_transmitters) != self.n_transmitters or self.n_transmitters < 1:
            raise InvalidArgumentError(f"n_transmitters must be a positive integer, got {self.n_transmitters}")
        if not self.symbol_amplitude > 0:
            raise InvalidArgumentError(f"symbol_amplitude must be > 0, got {self.symbol_amplitude}")
        if not self.noise_variance >= 0:
            raise InvalidArgumentError(f"noise_variance must be >= 0, got {self.noise_variance}")

    def to_dict(self) -> Dict[str, Any]:
        """Convert SystemConfig to a dictionary for serialization"""
        return {
            "n_transmitters": self.n_transmitters,
            "symbol_amplitude": self.symbol_amplitude,
            "noise_variance": self.noise_variance,
        }


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Flat-fading channel coefficients h_i = a_i * exp(j * phi_i)."""

    amplitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        amplitudes = _frozen_array(self.amplitudes, "amplitudes")
        phases = _frozen_array(self.phases, "phases")
        if amplitudes.size < 1:
            raise InvalidArgumentError("A channel needs at least one transmitter")
        if amplitudes.size != phases.size:
            raise InvalidArgumentError(
                f"amplitudes and phases differ in length ({amplitudes.size} != {phases.size})"
            )
        if np.any(amplitudes < 0):
            raise InvalidArgumentError("amplitudes must be non-negative")
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "phases", phases)

    @property
    def n_transmitters(self) -> int:
        return int(self.amplitudes.size)

    def coefficients(self) -> np.ndarray:
        """Complex channel coefficients h_i."""
        return self.amplitudes * np.exp(1j * self.phases)

    def to_dict(self) -> Dict[str, Any]:
        """Convert ChannelRealization to a dictionary for serialization"""
        return {
            "amplitudes": self.amplitudes.tolist(),
            "phases": self.phases.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ChannelRealization':
        """Create a ChannelRealization from a dictionary"""
        return cls(amplitudes=data["amplitudes"], phases=data["phases"])


@dataclass(eq=False)
class BeamformerState:
    """Beamforming phases psi_i owned by one trial.

    Phases are kept unwrapped; alignment comparisons happen modulo 2*pi.
    """

    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.array(self.psi, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.psi)):
            raise InvalidArgumentError("psi must be finite")

    @classmethod
    def zeros(cls, n: int) -> 'BeamformerState':
        """Cold start: every beamforming phase set to zero."""
        if n < 1:
            raise InvalidArgumentError(f"n must be >= 1, got {n}")
        return cls(psi=np.zeros(n))

    @property
    def gain(self) -> float:
        # fixed power constraint b_i = 1
        return 1.0

    @property
    def n_transmitters(self) -> int:
        return int(self.psi.size)

    def copy(self) -> 'BeamformerState':
        return BeamformerState(psi=self.psi.copy())


def sample_rayleigh_channel(n: int, rng: np.random.Generator) -> ChannelRealization:
    """Draw an i.i.d. zero-mean, unit-variance Rayleigh flat-fading channel.

    Each h_i is circularly-symmetric complex Gaussian: real and imaginary parts
    are drawn together as one (n, 2) standard-normal block scaled by 1/sqrt(2),
    which fixes the order in which the generator is consumed.

    Args:
        n: Number of transmitters
        rng: Seeded numpy Generator

    Returns:
        ChannelRealization with a_i = |h_i| and phi_i = arg(h_i) in [-pi, pi)
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")

    parts = rng.standard_normal((n, 2)) / math.sqrt(2.0)
    h = parts[:, 0] + 1j * parts[:, 1]
    phases = np.angle(h)
    phases[phases >= math.pi] -= 2.0 * math.pi
    return ChannelRealization(amplitudes=np.abs(h), phases=phases)


def _check_lengths(channel: ChannelRealization, state: BeamformerState) -> None:
    if channel.n_transmitters != state.n_transmitters:
        raise InvalidArgumentError(
            f"channel has {channel.n_transmitters} transmitters but state has {state.n_transmitters}"
        )


def _check_config(channel: ChannelRealization, config: SystemConfig) -> None:
    if config.n_transmitters != channel.n_transmitters:
        raise InvalidArgumentError(
            f"config.n_transmitters={config.n_transmitters} does not match channel length {channel.n_transmitters}"
        )


def total_phases(channel: ChannelRealization, state: BeamformerState) -> np.ndarray:
    """Total received phases theta_i = phi_i + psi_i."""
    _check_lengths(channel, state)
    return channel.phases + state.psi


def rss_of_phases(amplitudes: np.ndarray, theta: np.ndarray, symbol_amplitude: float) -> float:
    """sqrt(P) * |sum_i a_i exp(j theta_i)| for already-validated inputs."""
    return float(symbol_amplitude * np.abs(np.sum(amplitudes * np.exp(1j * theta))))


def rss(channel: ChannelRealization, state: BeamformerState, config: SystemConfig) -> float:
    """Received signal strength of the current beamformer state.

    Args:
        channel: Channel realization
        state: Beamformer phases
        config: System parameters (sqrt(P) is read from here)

    Returns:
        Non-negative RSS, bounded by sqrt(P) * sum(a_i)
    """
    _check_config(channel, config)
    theta = total_phases(channel, state)
    return rss_of_phases(channel.amplitudes, theta, config.symbol_amplitude)


def aligned_rss(channel: ChannelRealization, config: SystemConfig) -> float:
    """Global RSS maximum sqrt(P) * sum(a_i), reached when all theta_i agree."""
    _check_config(channel, config)
    total = float(np.sum(channel.amplitudes))
    if total <= 0.0:
        raise DegenerateChannelError("All channel amplitudes are zero; RSS cannot be normalized")
    return config.symbol_amplitude * total


def normalized_rss(channel: ChannelRealization, state: BeamformerState, config: SystemConfig) -> float:
    """RSS as a fraction of the fully aligned maximum, in [0, 1]."""
    bound = aligned_rss(channel, config)
    return rss(channel, state, config) / bound
