"""Stationary deterministic policies stored as lookup tables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .model import Action, ModelParams, State, check_state, state_index, state_space


class InfeasiblePolicyError(ValueError):
    """A policy table maps some state to an action the battery cannot afford."""


@dataclass(frozen=True, eq=False)
class Policy:
    """Total map from states to actions.

    ``actions`` is indexed in :func:`~dualsource_aoi.model.state_space`
    order and holds the integer action codes.
    """

    params: ModelParams
    actions: np.ndarray
    label: str = "policy"

    def __post_init__(self) -> None:
        table = np.asarray(self.actions, dtype=np.int8).copy()
        if table.shape != (self.params.n_states,):
            raise ValueError(
                f"policy table has shape {table.shape}, expected ({self.params.n_states},)")
        if not np.isin(table, [a.value for a in Action]).all():
            raise ValueError("policy table contains unknown action codes")
        costs = np.array([0, self.params.cost_primary, self.params.cost_backup])[table]
        batteries = np.repeat(np.arange(self.params.battery_capacity + 1),
                              self.params.age_max)
        bad = np.flatnonzero(batteries < costs)
        if bad.size:
            s = state_space(self.params)[bad[0]]
            raise InfeasiblePolicyError(
                f"{self.label}: {Action(table[bad[0]]).name} is not affordable in "
                f"state {tuple(s)} ({bad.size} infeasible states)")
        table.setflags(write=False)
        object.__setattr__(self, "actions", table)

    def __call__(self, state: State) -> Action:
        check_state(state, self.params)
        return Action(int(self.actions[state_index(state, self.params)]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Policy):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.actions, other.actions)

    def grid(self) -> np.ndarray:
        """Actions reshaped to ``(battery_capacity + 1, age_max)``."""
        return self.actions.reshape(self.params.battery_capacity + 1, self.params.age_max)

    def count(self, action: Action) -> int:
        return int(np.count_nonzero(self.actions == action))

    def rows(self) -> Iterable[tuple]:
        for s, a in zip(state_space(self.params), self.actions):
            yield s.battery, s.age, int(a)


def aggressive_action(state: State, params: ModelParams) -> Action:
    """Query the most expensive source the battery can pay for."""
    if state.battery >= params.cost_primary:
        return Action.PRIMARY
    if state.battery >= params.cost_backup:
        return Action.BACKUP
    return Action.IDLE


def materialize_aggressive(params: ModelParams) -> Policy:
    table = [aggressive_action(s, params) for s in state_space(params)]
    return Policy(params, np.array(table), label="aggressive")


def idle_policy(params: ModelParams) -> Policy:
    return Policy(params, np.zeros(params.n_states, dtype=np.int8), label="idle")
