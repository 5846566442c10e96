"""Experiment drivers shared by the CLI: sweeps and convergence traces."""

from __future__ import annotations

import logging
import math
from typing import List, Optional, Tuple

from .config import Config, RunSettings, SweepSpec
from .model import ModelParams
from .oracle import exact_average_aoi, induce_chain
from .policies import Policy, idle_policy, materialize_aggressive
from .simulator import monte_carlo, simulate_episode
from .solver import rvi_solve

log = logging.getLogger(__name__)

POLICY_NAMES = ("optimal", "aggressive", "idle")


def build_policy(name: str, params: ModelParams, run: RunSettings) -> Policy:
    if name == "optimal":
        return rvi_solve(params, run.epsilon, run.max_iters, aperiodicity=run.aperiodicity).policy
    if name == "aggressive":
        return materialize_aggressive(params)
    if name == "idle":
        return idle_policy(params)
    raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")


def cost_for_ratio(ratio: float, cost_primary: int) -> int:
    # round half up; Python's round() would send 2.5 to 2
    return int(math.floor(ratio * cost_primary + 0.5))


def sweep_points(spec: SweepSpec, params: ModelParams) -> List[Tuple[float, ModelParams]]:
    """Parameter sets in sweep order, paired with the value to report.

    Cost ratios are realised as integer backup costs; requested ratios that
    map to an already used cost are dropped and the effective ratio
    ``cost_backup / cost_primary`` is reported.
    """
    points = []
    if spec.parameter == "cost_ratio":
        seen = set()
        for ratio in spec.values:
            c2 = cost_for_ratio(ratio, params.cost_primary)
            if c2 in seen:
                log.warning("cost ratio %g maps to cost_backup=%d already swept; skipped",
                            ratio, c2)
                continue
            seen.add(c2)
            points.append((c2 / params.cost_primary, params.replace(cost_backup=c2)))
    else:
        for value in spec.values:
            points.append((value, params.replace(**{spec.parameter: value})))
    return points


def evaluate(policy: Policy, params: ModelParams, run: RunSettings,
             evaluation: str) -> Tuple[float, Optional[float]]:
    start = run.start_state(params)
    if evaluation == "oracle":
        return exact_average_aoi(induce_chain(policy, params), start), None
    stats = monte_carlo(policy, params, run.slots, run.runs, run.seed,
                        start=start, warmup=run.warmup)
    return stats.mean_aoi, stats.std_aoi


def run_sweep(spec: SweepSpec, config: Config) -> List[tuple]:
    """Rows ``(param_value, policy, avg_aoi, std_aoi)`` in sweep order."""
    rows = []
    for value, params in sweep_points(spec, config.params):
        for name in spec.policies:
            policy = build_policy(name, params, config.run)
            avg, std = evaluate(policy, params, config.run, spec.evaluation)
            rows.append((float(value), name, avg, std))
    return rows


def convergence_rows(config: Config, policies=("optimal", "aggressive")) -> List[tuple]:
    """Running average age per slot for one seeded episode per policy."""
    params, run = config.params, config.run
    rows = []
    for name in policies:
        policy = build_policy(name, params, run)
        episode = simulate_episode(policy, params, run.slots, run.seed,
                                   record_trajectory=True,
                                   start=run.start_state(params), warmup=run.warmup)
        for slot, avg in enumerate(episode.running_average(), 1):
            rows.append((slot, name, float(avg)))
    return rows
