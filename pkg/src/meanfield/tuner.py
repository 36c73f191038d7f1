"""Seeded random-search hyperparameter tuning over environment suites."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from meanfield.core import Environment
from meanfield.solvers import ALGORITHMS, SolveSettings, solve

METRICS = ("shifted_geo_mean", "failure_rate")


@dataclass(frozen=True)
class Param:
    """One searchable hyperparameter.

    ``kind`` is ``"continuous"``, ``"integer"`` or ``"categorical"``.  With
    ``nullable`` the parameter is left unset (``None``) half of the time.
    """

    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    choices: tuple = ()
    log: bool = False
    nullable: bool = False

    def __post_init__(self):
        if self.kind == "categorical":
            if not self.choices:
                raise ValueError(f"{self.name}: categorical parameter needs choices")
        elif self.kind in ("continuous", "integer"):
            if self.low is None or self.high is None or self.low > self.high:
                raise ValueError(f"{self.name}: need low <= high")
            if self.log and self.low <= 0:
                raise ValueError(f"{self.name}: log scale needs positive bounds")
        else:
            raise ValueError(f"{self.name}: unknown kind {self.kind!r}")

    def sample(self, rng: np.random.Generator):
        if self.nullable and rng.random() < 0.5:
            return None
        if self.kind == "categorical":
            return self.choices[int(rng.integers(len(self.choices)))]
        if self.kind == "integer":
            if self.log:
                return int(round(math.exp(rng.uniform(math.log(self.low), math.log(self.high)))))
            return int(rng.integers(int(self.low), int(self.high) + 1))
        if self.log:
            return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))
        return float(rng.uniform(self.low, self.high))


ParamSpace = Sequence[Param]

DEFAULT_SPACES: dict[str, tuple[Param, ...]] = {
    "fictitious_play": (Param("alpha", "continuous", 1e-3, 1.0, log=True, nullable=True),),
    "online_mirror_descent": (Param("alpha", "continuous", 1e-2, 1e2, log=True),),
    "prior_descent": (
        Param("eta", "continuous", 1e-3, 1e2, log=True),
        Param("n_inner", "integer", 1, 100),
    ),
    "mfomo": (
        Param("lr", "continuous", 1e-4, 1.0, log=True),
        Param("c3", "continuous", 1e-2, 1e2, log=True),
    ),
}


def sample_config(space: ParamSpace, rng: np.random.Generator) -> dict[str, Any]:
    """Draw every parameter independently, in the order given."""
    return {p.name: p.sample(rng) for p in space}


@dataclass
class Outcome:
    converged: bool
    iterations: int
    final_exploitability: float
    error: str | None = None


@dataclass
class TuneSettings:
    metric: str = "shifted_geo_mean"
    n_trials: int = 20
    timeout: float | None = None
    seed: int = 0
    max_iter: int = 300
    atol: float = 1e-8
    rtol: float = 1e-8

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; choose from {list(METRICS)}")
        if self.n_trials < 1:
            raise ValueError("n_trials must be positive")

    @property
    def solve_settings(self) -> SolveSettings:
        return SolveSettings(max_iter=self.max_iter, atol=self.atol, rtol=self.rtol)


@dataclass
class TrialRecord:
    index: int
    config: dict[str, Any]
    outcomes: list[Outcome]
    score: float
    tiebreak: float
    wall_time: float = field(compare=False)

    @property
    def key(self) -> tuple[float, float, int]:
        return (self.score, self.tiebreak, self.index)


def evaluate_config(
    alg_name: str, config: dict[str, Any], env_suite: Sequence[Environment], settings: SolveSettings
) -> list[Outcome]:
    """Solve every environment of the suite; solver errors become failures."""
    outcomes = []
    for env in env_suite:
        try:
            res = solve(alg_name, env, settings, **config)
        except (ArithmeticError, ValueError, FloatingPointError) as exc:
            outcomes.append(Outcome(False, settings.max_iter, math.inf, f"{type(exc).__name__}: {exc}"))
            continue
        outcomes.append(Outcome(res.converged, res.iterations_run, res.exploitabilities[-1]))
    return outcomes


def score_failure_rate(outcomes: Sequence[Outcome]) -> tuple[float, float]:
    """``(fraction unconverged, mean final exploitability)``; compare lexicographically."""
    rate = sum(not o.converged for o in outcomes) / len(outcomes)
    return rate, float(np.mean([o.final_exploitability for o in outcomes]))


def score_shifted_geo_mean(outcomes: Sequence[Outcome], max_iter: int) -> float:
    """``exp(mean log(c + 1)) - 1`` of iteration costs; a failure costs ``2 * max_iter``."""
    costs = np.array([o.iterations if o.converged else 2 * max_iter for o in outcomes], dtype=float)
    return float(np.exp(np.mean(np.log1p(costs))) - 1.0)


def _score(metric, outcomes, max_iter):
    if metric == "failure_rate":
        return score_failure_rate(outcomes)
    return score_shifted_geo_mean(outcomes, max_iter), 0.0


def tune(
    alg_name: str,
    env_suite: Sequence[Environment],
    space: ParamSpace | None = None,
    settings: TuneSettings | None = None,
    callback=None,
) -> tuple[dict[str, Any], list[TrialRecord]]:
    """Random search; returns the best config and the full trial history.

    No new trial starts once ``timeout`` seconds have elapsed; the first
    trial always runs so a best config exists.
    ``callback(record)`` is called after each trial.
    """
    settings = settings or TuneSettings()
    if alg_name not in ALGORITHMS:
        raise KeyError(f"unknown algorithm {alg_name!r}; choose from {sorted(ALGORITHMS)}")
    if not env_suite:
        raise ValueError("env_suite must not be empty")
    space = DEFAULT_SPACES[alg_name] if space is None else space
    rng = np.random.default_rng(settings.seed)
    solve_settings = settings.solve_settings
    history: list[TrialRecord] = []
    start = time.perf_counter()
    for i in range(settings.n_trials):
        if i and settings.timeout is not None and time.perf_counter() - start >= settings.timeout:
            break
        t0 = time.perf_counter()
        config = sample_config(space, rng)
        # an unset parameter falls back to the solver default
        config = {k: v for k, v in config.items() if v is not None}
        outcomes = evaluate_config(alg_name, config, env_suite, solve_settings)
        score, tiebreak = _score(settings.metric, outcomes, settings.max_iter)
        record = TrialRecord(i, config, outcomes, score, tiebreak, time.perf_counter() - t0)
        history.append(record)
        if callback is not None:
            callback(record)
    best = min(history, key=lambda r: r.key)
    return best.config, history
