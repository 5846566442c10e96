"""Relative value iteration for the average-age MDP."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model import ACTIONS_BY_RANK, KernelMatrices, ModelParams, State, build_kernel, state_index
from .policies import Policy

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6
DEFAULT_MAX_ITERS = 100_000
# Q-values closer than this are treated as tied and resolved by action rank.
TIE_TOLERANCE = 1e-9


class ConvergenceError(RuntimeError):
    """RVI hit its iteration budget before the span criterion was met."""

    def __init__(self, iterations: int, last_span: float, epsilon: float):
        super().__init__(
            f"RVI did not converge: span {last_span:.3e} >= epsilon {epsilon:.1e} "
            f"after {iterations} iterations")
        self.iterations = iterations
        self.last_span = last_span
        self.epsilon = epsilon


@dataclass(frozen=True, eq=False)
class SolveResult:
    policy: Policy
    gain: float
    value: np.ndarray
    iterations: int
    final_span: float
    reference_state: State

    def value_at(self, state: State) -> float:
        return float(self.value[state_index(state, self.policy.params)])


def span(v) -> float:
    """``max(v) - min(v)``."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("span of an empty vector is undefined")
    return float(v.max() - v.min())


def reference_state(params: ModelParams) -> State:
    return State(params.battery_capacity, params.age_fresh)


def _q_values(kernel: KernelMatrices, values: np.ndarray, tau: float = 1.0) -> np.ndarray:
    """Expected (successor age + value) per action, ``inf`` where infeasible.

    Columns follow :data:`ACTIONS_BY_RANK` so that ``argmin`` breaks ties
    towards the cheaper action.  ``tau < 1`` mixes in a self-loop of weight
    ``1 - tau``, which keeps gains and optimal policies but removes
    periodicity.
    """
    q = np.empty((values.size, len(ACTIONS_BY_RANK)))
    for j, action in enumerate(ACTIONS_BY_RANK):
        expected_next = kernel.matrices[action] @ values
        if tau != 1.0:
            expected_next = tau * expected_next + (1.0 - tau) * values
        col = kernel.expected_age[action] + expected_next
        col[~kernel.feasible[action]] = np.inf
        q[:, j] = col
    return q


def _greedy(q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    best = q.min(axis=1)
    # first column within tolerance of the minimum = lowest-rank tied action
    choice = np.argmax(q <= best[:, None] + TIE_TOLERANCE, axis=1)
    codes = np.array([a.value for a in ACTIONS_BY_RANK], dtype=np.int8)[choice]
    return best, codes


def _check_tau(tau: float) -> None:
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"aperiodicity weight must lie in (0, 1], got {tau}")


def bellman_backup(values, params: ModelParams,
                   kernel: Optional[KernelMatrices] = None,
                   aperiodicity: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """One undiscounted Bellman backup.

    Args:
        values: Relative values in state-space order.
        params: Model parameters.
        kernel: Pre-built kernel; built from ``params`` when omitted.
        aperiodicity: Weight ``tau`` of the original kernel; see ``rvi_solve``.

    Returns:
        ``(new_values, actions)`` where ``actions`` holds the argmin action
        code per state, ties broken Idle < Backup < Primary.
    """
    if kernel is None:
        kernel = build_kernel(params)
    values = np.asarray(values, dtype=float)
    if values.shape != (len(kernel.states),):
        raise ValueError(f"value vector has shape {values.shape}, "
                         f"expected ({len(kernel.states)},)")
    _check_tau(aperiodicity)
    return _greedy(_q_values(kernel, values, aperiodicity))


def rvi_solve(params: ModelParams, epsilon: float = DEFAULT_EPSILON,
              max_iters: int = DEFAULT_MAX_ITERS,
              kernel: Optional[KernelMatrices] = None,
              aperiodicity: float = 1.0) -> SolveResult:
    """Minimise long-run average age with relative value iteration.

    Iterates ``v = T(V)``, ``V = v - v(s*)`` with ``s* = (B, age_fresh)``
    until ``span(v - V_prev) < epsilon``.  The one-step increments
    ``T(V) - V`` bracket the optimal gain; their midpoint is reported.
    The returned policy is greedy with respect to the returned values.

    Plain iteration can oscillate when an optimal chain is periodic.
    ``aperiodicity = tau < 1`` runs on ``tau * P + (1 - tau) * I`` instead,
    which has the same gain and optimal policies.
    """
    _check_tau(aperiodicity)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if kernel is None:
        kernel = build_kernel(params)
    ref = reference_state(params)
    ref_idx = state_index(ref, params)

    values = np.zeros(len(kernel.states))
    last_span = np.inf
    for it in range(1, max_iters + 1):
        new, _ = _greedy(_q_values(kernel, values, aperiodicity))
        increment = new - values
        last_span = span(increment)
        gain = 0.5 * (increment.max() + increment.min())
        values = new - new[ref_idx]
        if last_span < epsilon:
            break
    else:
        raise ConvergenceError(max_iters, last_span, epsilon)

    _, actions = _greedy(_q_values(kernel, values, aperiodicity))
    log.debug("RVI converged in %d iterations, span %.3e, gain %.9f",
              it, last_span, gain)
    values.setflags(write=False)
    return SolveResult(policy=Policy(params, actions, label="optimal"),
                       gain=float(gain), value=values, iterations=it,
                       final_span=float(last_span), reference_state=ref)
