"""
Base Strategy class for phasealign.

This module contains the base Strategy class that every phase-alignment
algorithm inherits from.
"""

from typing import Any, Dict

import numpy as np

from errors import InvalidArgumentError
from network_model import BeamformerState, ChannelRealization, SystemConfig
from trace_sink import ConvergenceTrace, TrialRecorder


class Strategy:
    """
    A base class for the phase-alignment algorithms run by the harness. Subclass this and implement the `forward`
    method as well as the following class attributes:

    - **name** (`str`) -- The identifier used in configs and CSV rows.
    - **description** (`str`) -- A short description of the algorithm.
    - **parameters** (`Dict[str, Dict[str, Any]]`) -- The experiment-spec fields the algorithm reads.
    - **category** (`str`) -- Family of the algorithm (e.g. deterministic, random_perturbation).

    Subclasses also implement `feedback_bits_used` to report reverse-link overhead.
    """

    name = "base_strategy"
    description = "Base strategy class"
    parameters: Dict[str, Dict[str, Any]] = {}
    category = "misc"

    def __init__(self):
        """Initialize the strategy."""
        if self.name == "base_strategy":
            raise ValueError("Strategy name must be set")
        if self.description == "Base strategy class":
            raise ValueError("Strategy description must be set")
        if not self.parameters:
            raise ValueError("Strategy parameters must be set")
        if self.category == "misc":
            raise ValueError("Strategy category must be set")

    def __call__(self, channel: ChannelRealization, state: BeamformerState, system: SystemConfig,
                 spec: Any, rng: np.random.Generator, recorder: TrialRecorder) -> ConvergenceTrace:
        """
        Run the strategy on one trial.

        Args:
            channel: The trial's channel realization
            state: Initial beamformer state, mutated in place
            system: System parameters
            spec: Experiment spec carrying the strategy parameters
            rng: The trial's algorithm random stream
            recorder: Per-trial trace buffer

        Returns:
            ConvergenceTrace: The recorded trace
        """
        for param_name, param_info in self.parameters.items():
            if param_info.get("required", False) and getattr(spec, param_name, None) is None:
                raise InvalidArgumentError(f"Required parameter '{param_name}' not provided for {self.name}")

        return self.forward(channel, state, system, spec, rng, recorder)

    def forward(self, channel: ChannelRealization, state: BeamformerState, system: SystemConfig,
                spec: Any, rng: np.random.Generator, recorder: TrialRecorder) -> ConvergenceTrace:
        """
        Execute the strategy.

        This method should be overridden by subclasses.
        """
        raise NotImplementedError("Strategy.forward() must be implemented by subclasses")

    def feedback_bits_used(self, spec: Any, trace: ConvergenceTrace, rounds: int) -> int:
        """Reverse-link bits consumed by one trial."""
        raise NotImplementedError("Strategy.feedback_bits_used() must be implemented by subclasses")

    def to_dict(self, spec: Any = None) -> Dict[str, Any]:
        """
        Convert the strategy to a dictionary representation.

        Args:
            spec: Optional experiment spec; when given, parameter values are included

        Returns:
            Dict[str, Any]: Dictionary representation of the strategy
        """
        data = {
            "name": self.name,
            "description": self.description,
            "category": self.category,
            "parameters": sorted(self.parameters),
        }
        if spec is not None:
            data["values"] = {param: getattr(spec, param, None) for param in sorted(self.parameters)}
        return data
