"""
Experiment configuration for phasealign.

Experiment configs are JSON documents validated into an ExperimentSpec. Unknown
keys are rejected so a typo can never silently fall back to a default.
Process-level settings (log level, default worker count) come from the
environment, optionally through a .env file.
"""

import itertools
import json
import logging
import math
import os
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    StrictBool,
    StrictInt,
    ValidationError,
    field_validator,
    model_validator,
)

from errors import ConfigError
from network_model import SystemConfig
from strategies.ddsa import MAX_FEEDBACK_BITS
from strategies.onebit import DEFAULT_DELTA_MAX, DEFAULT_MAX_SLOTS

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

# Grid axes that do not describe an experiment point
NON_GRID_FIELDS = {"grid", "workers"}

# Upper bound on sqrt(P); the DDSA solver squares squared probe RSS
MAX_SYMBOL_AMPLITUDE = 1e50

FLOAT_FIELDS = ("symbol_amplitude", "noise_variance", "delta_max", "threshold")


def get_log_level() -> str:
    """Log level from PHASEALIGN_LOG_LEVEL (default INFO).

    Unknown level names are ignored with a warning.
    """
    raw = os.environ.get("PHASEALIGN_LOG_LEVEL") or "INFO"
    level = raw.strip().upper()
    if not isinstance(logging.getLevelName(level), int):
        logger.warning(f"Ignoring invalid PHASEALIGN_LOG_LEVEL={raw!r}; using INFO")
        return "INFO"
    return level


def default_workers() -> int:
    """Default worker count from PHASEALIGN_WORKERS (default 1)."""
    raw = os.environ.get("PHASEALIGN_WORKERS")
    if not raw:
        return 1
    try:
        workers = int(raw)
    except ValueError:
        logger.warning(f"Ignoring invalid PHASEALIGN_WORKERS={raw!r}; using 1")
        return 1
    return max(workers, 1)


class ExperimentSpec(BaseModel):
    """A complete, validated Monte-Carlo experiment description."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    n_transmitters: StrictInt = Field(500, ge=1)
    symbol_amplitude: float = Field(1.0, gt=0, le=MAX_SYMBOL_AMPLITUDE)
    noise_variance: float = Field(0.0, ge=0)
    algorithm: Literal["ddsa", "onebit"] = "ddsa"
    feedback_bits: StrictInt = Field(3, ge=1, le=MAX_FEEDBACK_BITS)
    exact_feedback: StrictBool = False
    sweeps: StrictInt = Field(1, ge=1)
    delta_max: float = Field(DEFAULT_DELTA_MAX, gt=0, lt=math.pi)
    max_slots: StrictInt = Field(DEFAULT_MAX_SLOTS, ge=1)
    perturbation: Literal["uniform", "binary"] = "uniform"
    threshold: float = Field(0.95, gt=0)
    threshold_mode: Literal["normalized", "absolute"] = "normalized"
    trials: StrictInt = Field(100, ge=1)
    master_seed: StrictInt = Field(0, ge=0, lt=2 ** 64)
    workers: StrictInt = Field(default_factory=default_workers, ge=1)
    grid: Optional[Dict[str, List[Any]]] = None

    @field_validator(*FLOAT_FIELDS, mode="before")
    @classmethod
    def _reject_bool(cls, value: Any) -> Any:
        if isinstance(value, bool):
            raise ValueError("expected a number, got a boolean")
        return value

    @model_validator(mode="after")
    def _check_cross_fields(self) -> 'ExperimentSpec':
        if self.threshold_mode == "normalized" and self.threshold > 1.0:
            raise ValueError(f"threshold must be <= 1 in normalized mode, got {self.threshold}")
        if self.grid is not None:
            for key, values in self.grid.items():
                if key not in type(self).model_fields or key in NON_GRID_FIELDS:
                    raise ValueError(f"grid key '{key}' is not a sweepable field")
                if not values:
                    raise ValueError(f"grid key '{key}' needs at least one value")
        return self

    def system_config(self) -> SystemConfig:
        return SystemConfig(
            n_transmitters=self.n_transmitters,
            symbol_amplitude=self.symbol_amplitude,
            noise_variance=self.noise_variance,
        )

    def result_dict(self) -> Dict[str, Any]:
        """Spec as written into result files; the worker count never affects results."""
        return self.model_dump(mode="json", exclude={"workers"})


def _describe_validation_error(error: ValidationError) -> Tuple[str, Optional[str]]:
    messages = []
    first_field = None
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"])
        if first_field is None and location:
            first_field = location
        if item["type"] == "extra_forbidden":
            messages.append(f"Unknown key '{location}'")
        elif location:
            messages.append(f"Invalid value for '{location}': {item['msg']}")
        else:
            messages.append(item["msg"])
    return "; ".join(messages), first_field


def validate_spec(data: Dict[str, Any]) -> ExperimentSpec:
    """Validate a decoded config mapping into an ExperimentSpec.

    Raises:
        ConfigError: Naming the offending field and bound
    """
    if not isinstance(data, dict):
        raise ConfigError(f"Config must be a JSON object, got {type(data).__name__}")
    try:
        return ExperimentSpec.model_validate(data)
    except ValidationError as e:
        message, field = _describe_validation_error(e)
        raise ConfigError(message, field=field) from e


def parse_config(text: str) -> ExperimentSpec:
    """Parse a JSON config document.

    Args:
        text: UTF-8 JSON text

    Returns:
        Validated ExperimentSpec; missing keys take their defaults

    Raises:
        ConfigError: On malformed JSON (with line and column) or invalid values
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return validate_spec(data)


def serialize_config(spec: ExperimentSpec) -> str:
    """Canonical JSON rendering; parse_config(serialize_config(s)) == s."""
    return json.dumps(spec.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def load_config(path: str) -> ExperimentSpec:
    """Read and parse a config file. OSError propagates for missing files."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    logger.info(f"Loaded config from {path}")
    return parse_config(text)


def with_overrides(spec: ExperimentSpec, **overrides: Any) -> ExperimentSpec:
    """Re-validated copy of `spec` with some fields replaced."""
    data = spec.model_dump()
    data.update(overrides)
    return validate_spec(data)


def grid_points(spec: ExperimentSpec) -> List[Tuple[Dict[str, Any], ExperimentSpec]]:
    """Expand spec.grid into (point, spec) pairs over the Cartesian product.

    Keys are visited in the order they appear in the config.
    """
    if not spec.grid:
        return [({}, spec)]
    keys = list(spec.grid)
    points = []
    for values in itertools.product(*(spec.grid[key] for key in keys)):
        point = dict(zip(keys, values))
        points.append((point, with_overrides(spec, grid=None, **point)))
    return points
