"""Average-age-of-information scheduling for an energy-harvesting node with a
primary and a backup information source."""

from .model import (
    Action,
    InfeasibleActionError,
    InvalidParamsError,
    ModelParams,
    State,
    TransitionDist,
    default_params,
    feasible_actions,
    state_space,
    transition,
)
from .oracle import InducedChain, exact_average_aoi, induce_chain, policy_average_aoi
from .policies import Policy, aggressive_action, idle_policy, materialize_aggressive
from .simulator import EpisodeResult, MonteCarloStats, monte_carlo, simulate_episode
from .solver import ConvergenceError, SolveResult, bellman_backup, rvi_solve, span

__all__ = [
    "Action", "ConvergenceError", "EpisodeResult", "InducedChain", "InfeasibleActionError",
    "InvalidParamsError", "ModelParams", "MonteCarloStats", "Policy", "SolveResult", "State",
    "TransitionDist", "aggressive_action", "bellman_backup", "default_params",
    "exact_average_aoi", "feasible_actions", "idle_policy", "induce_chain",
    "materialize_aggressive", "monte_carlo", "policy_average_aoi", "rvi_solve", "simulate_episode", "span",
    "state_space", "transition",
]
