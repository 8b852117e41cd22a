"""
Exception hierarchy for phasealign.

Every error raised on purpose by the simulation library derives from
PhaseAlignError so the CLI can map it onto an exit status.
"""

from typing import Optional


class PhaseAlignError(Exception):
    """Base class for all phasealign errors."""
    pass


class InvalidArgumentError(PhaseAlignError, ValueError):
    """Raised for out-of-range indices, mismatched lengths and bad counts."""
    pass


class DegenerateChannelError(PhaseAlignError):
    """Raised when every channel amplitude is zero and RSS cannot be normalized."""
    pass


class NumericInconsistencyError(PhaseAlignError, ArithmeticError):
    """Raised when probe measurements cannot come from any physical state."""
    pass


class ConfigError(PhaseAlignError):
    """Raised for malformed or invalid experiment configuration."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class TrialError(PhaseAlignError):
    """Wraps a failure inside a single Monte-Carlo trial."""

    def __init__(self, trial_index: int, cause: Exception):
        super().__init__(f"Trial {trial_index} failed: {type(cause).__name__}: {cause}")
        self.trial_index = trial_index
        self.cause = cause
