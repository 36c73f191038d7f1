"""Finite mean-field games: environments, equilibrium solvers, exploitability and tuning."""

from meanfield.core import (
    Environment,
    InvariantError,
    QFunction,
    best_response,
    exploitability,
    induced_mean_field,
    policy_from_mean_field,
    policy_q_values,
    uniform_policy,
)
from meanfield.envs import ENVIRONMENTS, make_env
from meanfield.solvers import ALGORITHMS, SolveResult, SolveSettings, solve

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "ENVIRONMENTS",
    "Environment",
    "InvariantError",
    "QFunction",
    "SolveResult",
    "SolveSettings",
    "best_response",
    "exploitability",
    "induced_mean_field",
    "make_env",
    "policy_from_mean_field",
    "policy_q_values",
    "solve",
    "uniform_policy",
]
