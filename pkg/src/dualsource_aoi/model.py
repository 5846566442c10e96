"""System model for a monitoring node that queries a primary or a backup source.

The node holds a finite battery fed by Bernoulli energy arrivals and tracks the
age of its freshest status update.  Each slot it idles or pays the energy cost
of one source; a source answers with a fresh (age ``age_fresh``) or stale (age
``age_stale``) update.  This module owns the parameter record, the state and
action types and the exact one-step transition kernel.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace
from typing import Dict, Iterator, List, NamedTuple, Tuple

import numpy as np
import scipy.sparse as sp


class InvalidParamsError(ValueError):
    """Raised when a parameter combination violates the model invariants."""


class InfeasibleActionError(ValueError):
    """Raised when an action is requested that the battery cannot pay for."""


class Action(enum.IntEnum):
    """Per-slot decision.  Integer values are the CSV action codes."""

    IDLE = 0
    PRIMARY = 1
    BACKUP = 2

    @property
    def rank(self) -> int:
        # tie-break order: spend less energy when indifferent
        return _ACTION_RANK[self]


_ACTION_RANK = {Action.IDLE: 0, Action.BACKUP: 1, Action.PRIMARY: 2}

#: Actions sorted by tie-breaking preference.
ACTIONS_BY_RANK: Tuple[Action, ...] = (Action.IDLE, Action.BACKUP, Action.PRIMARY)


class State(NamedTuple):
    battery: int
    age: int


@dataclass(frozen=True)
class ModelParams:
    """All scalar parameters of the dual-source system.

    Attributes:
        battery_capacity: Battery size ``B`` in energy units.
        cost_primary: Energy units spent on a primary-source request.
        cost_backup: Energy units spent on a backup-source request.
        reliability_primary: Probability the primary source answers fresh.
        reliability_backup: Probability the backup source answers fresh.
        harvest_prob: Per-slot probability that ``harvest_amount`` arrives.
        harvest_amount: Energy units delivered by one arrival.
        age_fresh: Age of a fresh update.
        age_stale: Age of a stale update.
        age_max: Age cap; older information is worth the same as this.
        strict: When true, also enforce the modelling assumptions that the
            primary source is strictly costlier and strictly more reliable
            than the backup, that a fresh update is strictly younger than a
            stale one and that the primary source fits in the battery.
            Degenerate test and experiment configurations switch this off.
    """

    battery_capacity: int
    cost_primary: int
    cost_backup: int
    reliability_primary: float
    reliability_backup: float
    harvest_prob: float
    harvest_amount: int = 3
    age_fresh: int = 1
    age_stale: int = 20
    age_max: int = 30
    strict: bool = True

    def __post_init__(self) -> None:
        for name in ("battery_capacity", "cost_primary", "cost_backup",
                     "harvest_amount", "age_fresh", "age_stale", "age_max"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidParamsError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        for name in ("reliability_primary", "reliability_backup", "harvest_prob"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0:
                raise InvalidParamsError(f"{name} must lie in [0, 1], got {value}")
            object.__setattr__(self, name, value)

        if self.battery_capacity < 0:
            raise InvalidParamsError("battery_capacity must be >= 0")
        if self.cost_primary < 0 or self.cost_backup < 0:
            raise InvalidParamsError("energy costs must be >= 0")
        if self.harvest_amount < 1:
            raise InvalidParamsError("harvest_amount must be >= 1")
        if self.age_fresh < 1:
            raise InvalidParamsError("age_fresh must be >= 1")
        if not self.age_fresh <= self.age_stale <= self.age_max:
            raise InvalidParamsError(
                "ages must satisfy age_fresh <= age_stale <= age_max, got "
                f"{self.age_fresh}, {self.age_stale}, {self.age_max}")

        if not self.strict:
            return
        if self.battery_capacity < 1:
            raise InvalidParamsError("battery_capacity must be >= 1")
        if self.cost_backup < 1:
            raise InvalidParamsError("cost_backup must be >= 1")
        if not self.cost_primary > self.cost_backup:
            raise InvalidParamsError(
                f"cost_primary ({self.cost_primary}) must exceed cost_backup "
                f"({self.cost_backup})")
        if not self.reliability_primary > self.reliability_backup:
            raise InvalidParamsError(
                f"reliability_primary ({self.reliability_primary}) must exceed "
                f"reliability_backup ({self.reliability_backup})")
        if not self.age_fresh < self.age_stale:
            raise InvalidParamsError("age_fresh must be < age_stale")
        if self.cost_primary > self.battery_capacity:
            raise InvalidParamsError(
                f"cost_primary ({self.cost_primary}) exceeds battery_capacity "
                f"({self.battery_capacity}); the primary source would be unusable")

    @property
    def n_states(self) -> int:
        return (self.battery_capacity + 1) * self.age_max

    @property
    def cost_ratio(self) -> float:
        return self.cost_backup / self.cost_primary

    def cost(self, action: Action) -> int:
        if action is Action.PRIMARY:
            return self.cost_primary
        if action is Action.BACKUP:
            return self.cost_backup
        return 0

    def reliability(self, action: Action) -> float:
        if action is Action.PRIMARY:
            return self.reliability_primary
        if action is Action.BACKUP:
            return self.reliability_backup
        return 0.0

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> Dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


#: Values held fixed across all experiments; the remaining fields are varied.
SYSTEM_DEFAULTS: Dict[str, object] = {
    "battery_capacity": 20,
    "age_max": 30,
    "age_fresh": 1,
    "age_stale": 20,
    "harvest_amount": 3,
    "reliability_primary": 0.9,
}


def default_params(*, harvest_prob: float, reliability_backup: float,
                   cost_primary: int = 5, cost_backup: int, **overrides) -> ModelParams:
    """Build parameters from the fixed defaults plus the experiment axes."""
    values = dict(SYSTEM_DEFAULTS)
    values.update(harvest_prob=harvest_prob, reliability_backup=reliability_backup,
                  cost_primary=cost_primary, cost_backup=cost_backup)
    values.update(overrides)
    return ModelParams(**values)


@dataclass(frozen=True)
class TransitionDist:
    """Finite distribution over successor states, canonicalised.

    Zero-probability outcomes are dropped, duplicates merged and entries kept
    in state-space order.
    """

    entries: Tuple[Tuple[State, float], ...]

    @classmethod
    def from_outcomes(cls, outcomes) -> "TransitionDist":
        merged: Dict[State, float] = {}
        for state, prob in outcomes:
            if prob > 0.0:
                merged[state] = merged.get(state, 0.0) + prob
        return cls(tuple(sorted(merged.items())))

    def __iter__(self) -> Iterator[Tuple[State, float]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def as_dict(self) -> Dict[State, float]:
        return dict(self.entries)

    def total(self) -> float:
        return float(sum(p for _, p in self.entries))

    def expected_age(self) -> float:
        return float(sum(p * s.age for s, p in self.entries))


def state_space(params: ModelParams) -> List[State]:
    """Every (battery, age) pair, battery-major."""
    return [State(b, d)
            for b in range(params.battery_capacity + 1)
            for d in range(1, params.age_max + 1)]


def state_index(state: State, params: ModelParams) -> int:
    """Position of ``state`` in :func:`state_space` order."""
    return state.battery * params.age_max + (state.age - 1)


def check_state(state: State, params: ModelParams) -> None:
    if not (0 <= state.battery <= params.battery_capacity
            and 1 <= state.age <= params.age_max):
        raise ValueError(f"state {tuple(state)} outside the state space")


def is_feasible(state: State, action: Action, params: ModelParams) -> bool:
    return state.battery >= params.cost(action)


def feasible_actions(state: State, params: ModelParams) -> frozenset:
    return frozenset(a for a in Action if is_feasible(state, a, params))


def transition(state: State, action: Action, params: ModelParams) -> TransitionDist:
    """One-step successor distribution for ``action`` taken in ``state``.

    Energy harvested during the slot is credited to the post-action battery
    but cannot pay for the action itself.
    """
    action = Action(action)
    if not is_feasible(state, action, params):
        raise InfeasibleActionError(
            f"action {action.name} needs {params.cost(action)} energy units, "
            f"battery holds {state.battery}")
    b, d = state
    B = params.battery_capacity
    lam = params.harvest_prob
    aged = min(d + 1, params.age_max)

    if action is Action.IDLE:
        if b == B:
            return TransitionDist.from_outcomes([(State(B, aged), 1.0)])
        return TransitionDist.from_outcomes([
            (State(b, aged), 1.0 - lam),
            (State(min(b + params.harvest_amount, B), aged), lam),
        ])

    cost = params.cost(action)
    gamma = params.reliability(action)
    charged = min(b + params.harvest_amount - cost, B)
    drained = b - cost
    fresh = min(params.age_fresh, d + 1)
    stale = min(params.age_stale, d + 1)
    return TransitionDist.from_outcomes([
        (State(charged, fresh), lam * gamma),
        (State(charged, stale), lam * (1.0 - gamma)),
        (State(drained, fresh), (1.0 - lam) * gamma),
        (State(drained, stale), (1.0 - lam) * (1.0 - gamma)),
    ])


@dataclass(frozen=True)
class KernelMatrices:
    """The kernel tabulated per action, in state-space order.

    ``matrices[a]`` is a sparse |S|x|S| matrix whose rows for infeasible
    states are empty; ``feasible[a]`` masks those rows and
    ``expected_age[a]`` holds the expected successor age per row.
    """

    states: Tuple[State, ...]
    matrices: Dict[Action, sp.csr_matrix]
    feasible: Dict[Action, np.ndarray]
    expected_age: Dict[Action, np.ndarray]


def build_kernel(params: ModelParams) -> KernelMatrices:
    states = state_space(params)
    n = len(states)
    ages = np.array([s.age for s in states], dtype=float)
    matrices, feasible, expected = {}, {}, {}
    for action in Action:
        rows, cols, vals = [], [], []
        mask = np.zeros(n, dtype=bool)
        for i, s in enumerate(states):
            if not is_feasible(s, action, params):
                continue
            mask[i] = True
            for succ, p in transition(s, action, params):
                rows.append(i)
                cols.append(state_index(succ, params))
                vals.append(p)
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        matrices[action] = mat
        feasible[action] = mask
        expected[action] = mat @ ages
    return KernelMatrices(tuple(states), matrices, feasible, expected)
