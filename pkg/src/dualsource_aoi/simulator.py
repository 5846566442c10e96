"""Seeded Monte Carlo simulation of the node under a tabulated policy.

Every episode owns a ``numpy.random.default_rng(seed)`` stream from which it
draws, per slot, one uniform for the energy arrival and one for the source's
freshness (the latter is drawn even when idling so streams stay aligned).
Run ``m`` of a Monte Carlo batch uses seed ``base_seed + m`` for
``m = 1..M``, so a batch is bit-identical to the episodes run one by one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .model import Action, ModelParams, State, check_state
from .policies import InfeasiblePolicyError, Policy

DEFAULT_SLOTS = 5000
DEFAULT_RUNS = 1000
# runs simulated together; bounds memory at 2 * CHUNK * T doubles
CHUNK = 250

TRAJECTORY_HEADER = ("slot", "battery", "age", "action", "running_avg_aoi")


@dataclass(frozen=True)
class EpisodeResult:
    time_avg_aoi: float
    seed: int
    trajectory: Optional[List[Tuple[int, int, int, int]]] = None

    def running_average(self) -> np.ndarray:
        if self.trajectory is None:
            raise ValueError("episode was run without record_trajectory")
        ages = np.array([row[2] for row in self.trajectory], dtype=float)
        return np.cumsum(ages) / np.arange(1, ages.size + 1)


@dataclass(frozen=True)
class MonteCarloStats:
    mean_aoi: float
    std_aoi: float
    runs: int
    slots: int
    per_run: Tuple[float, ...] = ()

    @property
    def stderr(self) -> float:
        return self.std_aoi / np.sqrt(self.runs)


def initial_state(params: ModelParams) -> State:
    return State(0, params.age_max)


def _simulate(policy: Policy, params: ModelParams, slots: int,
              seeds: Sequence[int], record: bool,
              start: Optional[State], warmup: int):
    """Vectorised over runs; returns (time averages, per-slot records)."""
    if slots < 1:
        raise ValueError("slots must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    if policy.params != params:
        raise ValueError("policy was built for different parameters")
    if start is None:
        start = initial_state(params)
    check_state(start, params)
    horizon = warmup + slots
    m = len(seeds)
    harvest_u = np.empty((m, horizon))
    fresh_u = np.empty((m, horizon))
    for k, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        harvest_u[k] = rng.random(horizon)
        fresh_u[k] = rng.random(horizon)

    table = policy.actions.astype(np.intp)
    cost_of = np.array([0, params.cost_primary, params.cost_backup])
    gamma_of = np.array([0.0, params.reliability_primary, params.reliability_backup])
    B, dmax = params.battery_capacity, params.age_max

    battery = np.full(m, start.battery, dtype=np.int64)
    age = np.full(m, start.age, dtype=np.int64)
    total = np.zeros(m)
    history = np.empty((slots, m, 3), dtype=np.int64) if record else None

    for t in range(horizon):
        action = table[battery * dmax + age - 1]
        cost = cost_of[action]
        if (battery < cost).any():
            k = int(np.flatnonzero(battery < cost)[0])
            raise InfeasiblePolicyError(
                f"{policy.label} chose {Action(action[k]).name} with battery "
                f"{battery[k]} at slot {t + 1}")
        harvest = np.where(harvest_u[:, t] < params.harvest_prob, params.harvest_amount, 0)
        battery = np.minimum(battery - cost + harvest, B)
        aged = age + 1
        fresh = fresh_u[:, t] < gamma_of[action]
        requested = np.where(fresh, np.minimum(params.age_fresh, aged),
                             np.minimum(params.age_stale, aged))
        age = np.where(action == Action.IDLE, np.minimum(aged, dmax), requested)
        if t < warmup:
            continue
        total += age
        if record:
            history[t - warmup, :, 0] = battery
            history[t - warmup, :, 1] = age
            history[t - warmup, :, 2] = action
    return total / slots, history


def simulate_episode(policy: Policy, params: ModelParams, slots: int = DEFAULT_SLOTS,
                     seed: int = 0, record_trajectory: bool = False, *,
                     start: Optional[State] = None, warmup: int = 0) -> EpisodeResult:
    """Run one episode and return its time-average age.

    The episode starts in ``start`` (default ``(0, age_max)``); the first
    ``warmup`` slots are simulated but excluded from the average and the
    trajectory.  The recorded trajectory lists ``(slot, battery, age,
    action)`` with battery and age observed at the end of the slot.
    """
    averages, history = _simulate(policy, params, slots, [seed], record_trajectory,
                                  start, warmup)
    trajectory = None
    if record_trajectory:
        trajectory = [(t + 1, int(b), int(d), int(a))
                      for t, (b, d, a) in enumerate(history[:, 0, :])]
    return EpisodeResult(float(averages[0]), seed, trajectory)


def monte_carlo(policy: Policy, params: ModelParams, slots: int = DEFAULT_SLOTS,
                runs: int = DEFAULT_RUNS, base_seed: int = 0, *,
                start: Optional[State] = None, warmup: int = 0) -> MonteCarloStats:
    """Mean and sample standard deviation (``ddof=1``) of per-run averages."""
    if runs < 2:
        raise ValueError("monte_carlo needs at least 2 runs for a standard deviation")
    seeds = [base_seed + m for m in range(1, runs + 1)]
    chunks = [_simulate(policy, params, slots, seeds[i:i + CHUNK], False, start, warmup)[0]
              for i in range(0, runs, CHUNK)]
    per_run = np.concatenate(chunks)
    return MonteCarloStats(mean_aoi=float(per_run.mean()),
                           std_aoi=float(per_run.std(ddof=1)),
                           runs=runs, slots=slots,
                           per_run=tuple(float(x) for x in per_run))


def write_trajectory_csv(episode: EpisodeResult, path) -> None:
    running = episode.running_average()
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for (slot, b, d, a), avg in zip(episode.trajectory, running):
            writer.writerow((slot, b, d, a, repr(float(avg))))
