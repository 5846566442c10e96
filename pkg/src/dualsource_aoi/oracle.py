"""Exact long-run average age of a fixed policy via its induced Markov chain.

This is deliberately independent of the solver: it never runs value
iteration, only linear algebra on the chain a policy induces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from .model import Action, ModelParams, State, state_index, state_space, transition
from .policies import Policy

DENSE_LIMIT = 2000
STOCHASTIC_TOL = 1e-12
RESIDUAL_TOL = 1e-10


class ChainError(ValueError):
    """Invalid chain or failed stationary solve."""


@dataclass(frozen=True, eq=False)
class InducedChain:
    states: Tuple[State, ...]
    matrix: np.ndarray
    cost: np.ndarray
    params: ModelParams

    def index(self, state: State) -> int:
        return state_index(state, self.params)


def induce_chain(policy: Policy, params: ModelParams) -> InducedChain:
    """Row ``s`` is the kernel row for ``policy(s)``; cost is the state's age."""
    states = state_space(params)
    n = len(states)
    P = np.zeros((n, n))
    for i, s in enumerate(states):
        for succ, p in transition(s, Action(int(policy.actions[i])), params):
            P[i, state_index(succ, params)] += p
    cost = np.array([s.age for s in states], dtype=float)
    return InducedChain(tuple(states), P, cost, params)


def _check_stochastic(P: np.ndarray) -> None:
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ChainError("transition matrix must be square")
    if (P < 0).any():
        raise ChainError("transition matrix has negative entries")
    worst = np.abs(P.sum(axis=1) - 1.0).max()
    if worst > STOCHASTIC_TOL:
        raise ChainError(f"rows do not sum to one (max deviation {worst:.2e})")


def closed_classes(P: np.ndarray) -> list:
    """Recurrent classes: strongly connected components with no exit."""
    n_comp, labels = connected_components(P > 0, directed=True, connection="strong")
    classes = []
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        outside = np.ones(P.shape[0], dtype=bool)
        outside[members] = False
        if not (P[np.ix_(members, outside)] > 0).any():
            classes.append(members)
    return classes


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Stationary law of an irreducible stochastic matrix (dense solve)."""
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        mu = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ChainError(f"stationary solve failed: {exc}") from None
    residual = np.abs(mu @ P - mu).max()
    if residual > RESIDUAL_TOL or abs(mu.sum() - 1.0) > RESIDUAL_TOL:
        raise ChainError(f"stationary solve residual {residual:.2e}")
    return mu


def _absorption(P: np.ndarray, classes: list, start: int) -> np.ndarray:
    """Probability of ending in each closed class when started at ``start``."""
    n = P.shape[0]
    recurrent = np.zeros(n, dtype=bool)
    for members in classes:
        recurrent[members] = True
    if recurrent[start]:
        return np.array([float(start in members) for members in classes])
    transient = np.flatnonzero(~recurrent)
    pos = {s: k for k, s in enumerate(transient)}
    Q = P[np.ix_(transient, transient)]
    R = np.column_stack([P[np.ix_(transient, members)].sum(axis=1) for members in classes])
    try:
        N_R = np.linalg.solve(np.eye(transient.size) - Q, R)
    except np.linalg.LinAlgError as exc:
        raise ChainError(f"absorption solve failed: {exc}") from None
    return N_R[pos[start]]


def _lazy_power(P, cost: np.ndarray, start: int, max_steps: int = 1_000_000) -> float:
    """Limit of ``dist @ ((I + P) / 2)^t`` from ``start``, dotted with ``cost``.

    The lazy chain is aperiodic with the same stationary laws and absorption
    probabilities as ``P``, so its limit equals the Cesaro limit of ``P``.
    """
    dist = np.zeros(P.shape[0])
    dist[start] = 1.0
    for _ in range(max_steps):
        nxt = 0.5 * (dist + dist @ P)
        if np.abs(nxt - dist).sum() < RESIDUAL_TOL * 1e-2:
            if np.abs(nxt @ P - nxt).sum() < RESIDUAL_TOL:
                return float(nxt @ cost)
        dist = nxt
    raise ChainError("power iteration did not reach residual below 1e-10")


def exact_average_aoi(chain: InducedChain, start: State) -> float:
    """Long-run expected average age starting from ``start``.

    Each closed class contributes its stationary mean age, weighted by the
    probability of being absorbed into it from ``start``.
    """
    P = chain.matrix
    _check_stochastic(P)
    s0 = chain.index(start)
    if P.shape[0] > DENSE_LIMIT:
        return _lazy_power(P, chain.cost, s0)
    classes = closed_classes(P)
    weights = _absorption(P, classes, s0)
    total = 0.0
    for w, members in zip(weights, classes):
        if w <= 0.0:
            continue
        mu = stationary_distribution(P[np.ix_(members, members)])
        total += w * float(mu @ chain.cost[members])
    return total


def expected_running_average(chain: InducedChain, start: State, slots: int) -> np.ndarray:
    """Exact ``E[(1/t) sum_{k=1..t} age_k]`` for ``t = 1..slots``.

    The finite-horizon counterpart of :func:`exact_average_aoi`; it gives the
    expected value of a simulated running average, transient included.
    """
    dist = np.zeros(len(chain.states))
    dist[chain.index(start)] = 1.0
    out = np.empty(slots)
    acc = 0.0
    for t in range(slots):
        dist = dist @ chain.matrix
        acc += dist @ chain.cost
        out[t] = acc / (t + 1)
    return out


def policy_average_aoi(policy: Policy, start: State | None = None) -> float:
    """Convenience wrapper: average age of ``policy`` from ``start``.

    The default start is the simulator's initial state ``(0, age_max)``.
    """
    params = policy.params
    if start is None:
        start = State(0, params.age_max)
    return exact_average_aoi(induce_chain(policy, params), start)
