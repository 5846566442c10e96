"""Flat ``key = value`` run configuration and sweep descriptions."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from .model import SYSTEM_DEFAULTS, ModelParams, State
from .solver import DEFAULT_EPSILON, DEFAULT_MAX_ITERS
from .simulator import DEFAULT_RUNS, DEFAULT_SLOTS


class ConfigError(ValueError):
    pass


_MODEL_INT = ("battery_capacity", "cost_primary", "cost_backup", "harvest_amount",
              "age_fresh", "age_stale", "age_max")
_MODEL_FLOAT = ("reliability_primary", "reliability_backup", "harvest_prob")
_REQUIRED = ("harvest_prob", "reliability_backup", "cost_primary", "cost_backup")
_RUN_INT = ("max_iters", "slots", "runs", "seed", "warmup", "initial_battery", "initial_age")
_RUN_FLOAT = ("epsilon", "aperiodicity")
_KNOWN = set(_MODEL_INT) | set(_MODEL_FLOAT) | set(_RUN_INT) | set(_RUN_FLOAT) | {"strict"}

SWEEP_PARAMETERS = ("cost_ratio", "harvest_prob", "reliability_backup")
SWEEP_POLICIES = ("optimal", "aggressive")


@dataclass(frozen=True)
class RunSettings:
    epsilon: float = DEFAULT_EPSILON
    max_iters: int = DEFAULT_MAX_ITERS
    # weight of the original kernel in RVI; 1.0 is plain iteration
    aperiodicity: float = 1.0
    slots: int = DEFAULT_SLOTS
    runs: int = DEFAULT_RUNS
    seed: int = 0
    warmup: int = 0
    initial_battery: int = 0
    # None means age_max
    initial_age: Optional[int] = None

    def start_state(self, params: ModelParams) -> State:
        age = params.age_max if self.initial_age is None else self.initial_age
        return State(self.initial_battery, age)


@dataclass(frozen=True)
class Config:
    params: ModelParams
    run: RunSettings = field(default_factory=RunSettings)


def _parse_bool(key: str, text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def parse_config_text(text: str, source: str = "<config>") -> Config:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if value:
            raw[key] = (lineno, value)

    def convert(key, kind):
        lineno, value = raw[key]
        try:
            return kind(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key}: cannot parse {value!r} "
                              f"as {kind.__name__}") from None

    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"{source}: missing required key(s): {', '.join(missing)}")

    model = dict(SYSTEM_DEFAULTS)
    for key in _MODEL_INT:
        if key in raw:
            model[key] = convert(key, int)
    for key in _MODEL_FLOAT:
        if key in raw:
            model[key] = convert(key, float)
    if "strict" in raw:
        model["strict"] = _parse_bool("strict", raw["strict"][1])
    params = ModelParams(**model)

    run = {}
    for key in _RUN_FLOAT:
        if key in raw:
            run[key] = convert(key, float)
    for key in _RUN_INT:
        if key in raw:
            run[key] = convert(key, int)
    settings = RunSettings(**run)
    if not settings.epsilon > 0:
        raise ConfigError("epsilon must be positive")
    if not 0.0 < settings.aperiodicity <= 1.0:
        raise ConfigError("aperiodicity must lie in (0, 1]")
    start = settings.start_state(params)
    if not (0 <= start.battery <= params.battery_capacity and 1 <= start.age <= params.age_max):
        raise ConfigError(f"initial state {tuple(start)} outside the state space")
    return Config(params, settings)


def parse_config(path) -> Config:
    path = Path(path)
    return parse_config_text(path.read_text(), str(path))


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: Tuple[float, ...]
    policies: Tuple[str, ...] = SWEEP_POLICIES
    evaluation: str = "oracle"

    def __post_init__(self) -> None:
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {self.parameter!r}; "
                              f"choose from {', '.join(SWEEP_PARAMETERS)}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError("sweep needs at least one value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if self.parameter == "cost_ratio" and not all(0.0 <= v <= 1.0 for v in values):
            raise ConfigError("cost_ratio values must lie in [0, 1]")
        unknown = set(self.policies) - set(SWEEP_POLICIES)
        if unknown or not self.policies:
            raise ConfigError(f"sweep policies must be a non-empty subset of "
                              f"{', '.join(SWEEP_POLICIES)}")
        if self.evaluation not in ("oracle", "monte_carlo"):
            raise ConfigError("evaluation must be 'oracle' or 'monte_carlo'")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "policies", tuple(self.policies))
