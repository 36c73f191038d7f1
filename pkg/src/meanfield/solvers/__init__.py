"""Equilibrium solvers and the algorithm registry."""

from meanfield.solvers.base import NumericalError, SolveResult, SolveSettings, check_stop, run
from meanfield.solvers.fictitious_play import fictitious_play_iterates, solve_fictitious_play
from meanfield.solvers.mfomo import (
    MfomoPoint,
    caps,
    mfomo_gradient,
    mfomo_iterates,
    mfomo_objective,
    project_point,
    solve_mfomo,
)
from meanfield.solvers.mirror_descent import mirror_descent_iterates, softmax_rows, solve_online_mirror_descent
from meanfield.solvers.prior_descent import prior_descent_iterates, soft_best_response, solve_prior_descent
from meanfield.solvers.simplex import project_simplex

ALGORITHMS = {
    "fictitious_play": solve_fictitious_play,
    "online_mirror_descent": solve_online_mirror_descent,
    "prior_descent": solve_prior_descent,
    "mfomo": solve_mfomo,
}

# Hyperparameters each registry entry accepts, with their defaults.
HYPERPARAMETERS = {
    "fictitious_play": {"alpha": None},
    "online_mirror_descent": {"alpha": 1.0},
    "prior_descent": {"eta": 1.0, "n_inner": 50},
    "mfomo": {"lr": 0.1, "c1": 1.0, "c2": 1.0, "c3": 1.0},
}


def solve(alg_name: str, env, settings: SolveSettings | None = None, callback=None, **params) -> SolveResult:
    """Run a registered algorithm by name."""
    try:
        solver = ALGORITHMS[alg_name]
    except KeyError:
        raise KeyError(f"unknown algorithm {alg_name!r}; choose from {sorted(ALGORITHMS)}") from None
    unknown = set(params) - set(HYPERPARAMETERS[alg_name])
    if unknown:
        raise TypeError(f"{alg_name} does not take {sorted(unknown)}; expected {sorted(HYPERPARAMETERS[alg_name])}")
    return solver(env, settings, callback=callback, **params)


__all__ = [
    "ALGORITHMS",
    "HYPERPARAMETERS",
    "MfomoPoint",
    "NumericalError",
    "SolveResult",
    "SolveSettings",
    "caps",
    "check_stop",
    "fictitious_play_iterates",
    "mfomo_gradient",
    "mfomo_iterates",
    "mfomo_objective",
    "mirror_descent_iterates",
    "prior_descent_iterates",
    "project_point",
    "project_simplex",
    "run",
    "soft_best_response",
    "softmax_rows",
    "solve",
    "solve_fictitious_play",
    "solve_mfomo",
    "solve_online_mirror_descent",
    "solve_prior_descent",
]
