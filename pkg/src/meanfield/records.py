"""JSON formats: run records, tune reports and tabular environment files.

Arrays are stored as row-major nested lists next to an explicit shape.
Python's float repr is shortest-round-trip, so every float survives a
write/read cycle bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from meanfield.core import PROB_ATOL, Environment, induced_mean_field, uniform_policy


class TabularEnvError(ValueError):
    """A tabular environment file is malformed or breaks a model invariant."""


@dataclass
class RunRecord:
    env: dict[str, Any]
    algorithm: dict[str, Any]
    settings: dict[str, Any]
    iterations: list[int]
    exploitabilities: list[float]
    runtimes: list[float]
    converged: bool
    final_policy: np.ndarray
    version: str = field(default="")

    def __post_init__(self):
        if not self.version:
            from meanfield import __version__

            self.version = __version__
        if not self.iterations:
            raise ValueError("a run record needs at least one recorded iteration")

    @classmethod
    def from_result(cls, result, env: dict, algorithm: dict, settings) -> "RunRecord":
        return cls(
            env=env,
            algorithm=algorithm,
            settings={
                "max_iter": settings.max_iter,
                "atol": settings.atol,
                "rtol": settings.rtol,
                "record_every": settings.record_every,
            },
            iterations=list(result.iterations),
            exploitabilities=[float(x) for x in result.exploitabilities],
            runtimes=[float(x) for x in result.runtimes],
            converged=bool(result.converged),
            final_policy=np.asarray(result.policy),
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "env": self.env,
            "algorithm": self.algorithm,
            "settings": self.settings,
            "series": [
                {"iter": int(n), "expl": float(e), "elapsed_s": float(s)}
                for n, e, s in zip(self.iterations, self.exploitabilities, self.runtimes)
            ],
            "converged": self.converged,
            "final_policy": {"shape": list(self.final_policy.shape), "data": self.final_policy.tolist()},
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "RunRecord":
        series = obj["series"]
        policy = np.array(obj["final_policy"]["data"], dtype=float)
        policy = policy.reshape(obj["final_policy"]["shape"])
        return cls(
            env=obj["env"],
            algorithm=obj["algorithm"],
            settings=obj["settings"],
            iterations=[row["iter"] for row in series],
            exploitabilities=[row["expl"] for row in series],
            runtimes=[row["elapsed_s"] for row in series],
            converged=obj["converged"],
            final_policy=policy,
            version=obj["version"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RunRecord":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def finite_or_none(x: float) -> float | None:
    return x if math.isfinite(x) else None


def tune_report(alg_name: str, settings, best_config: dict, history) -> dict[str, Any]:
    from meanfield import __version__

    best = min(history, key=lambda r: r.key)
    return {
        "version": __version__,
        "algorithm": alg_name,
        "metric": settings.metric,
        "seed": settings.seed,
        "n_trials": settings.n_trials,
        "timeout": settings.timeout,
        "solve_settings": {"max_iter": settings.max_iter, "atol": settings.atol, "rtol": settings.rtol},
        "best_config": best_config,
        "best_score": best.score,
        "best_trial": best.index,
        "trials": [
            {
                "index": r.index,
                "config": r.config,
                "score": r.score,
                "tiebreak": finite_or_none(r.tiebreak),
                "wall_time": r.wall_time,
                "outcomes": [
                    {
                        "converged": o.converged,
                        "iterations": o.iterations,
                        "final_exploitability": finite_or_none(o.final_exploitability),
                        "error": o.error,
                    }
                    for o in r.outcomes
                ],
            }
            for r in history
        ],
    }


# Tabular environments


def _index_path(flat_index: int, shape: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(int(i) for i in np.unravel_index(flat_index, shape))


def _array(obj: dict, key: str, shape: tuple[int, ...]) -> np.ndarray:
    if key not in obj:
        raise TabularEnvError(f"missing field {key!r}")
    try:
        arr = np.array(obj[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise TabularEnvError(f"field {key!r} is not a numeric array: {exc}") from None
    if arr.size == 0 and 0 in shape:
        arr = arr.reshape(shape)
    if arr.shape != shape:
        raise TabularEnvError(f"field {key!r} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        idx = _index_path(int(np.argmax(~np.isfinite(arr.reshape(-1)))), shape)
        raise TabularEnvError(f"field {key!r} has a non-finite entry at {idx}")
    return arr


def tabular_env_from_json(obj: dict[str, Any]) -> Environment:
    """Build and validate a population-independent environment from tables."""
    try:
        T = int(obj["T"])
        S = tuple(int(n) for n in obj["S"])
        A = tuple(int(n) for n in obj["A"])
        r_max = float(obj["r_max"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TabularEnvError(f"bad header field: {exc!r}") from None
    if T < 0 or not S or not A or min(S + A) < 1 or not r_max > 0:
        raise TabularEnvError(f"invalid header T={T}, S={S}, A={A}, r_max={r_max}")

    mu0 = _array(obj, "mu0", S)
    rewards = _array(obj, "rewards", (T + 1, *S, *A))
    transitions = _array(obj, "transitions", (T, *S, *S, *A))

    if np.any(mu0 < 0) or abs(mu0.sum() - 1.0) > PROB_ATOL:
        raise TabularEnvError(f"mu0 must be a distribution (sum = {mu0.sum()!r})")
    over = np.abs(rewards) > r_max + PROB_ATOL
    if np.any(over):
        t, *rest = _index_path(int(np.argmax(over.reshape(-1))), rewards.shape)
        raise TabularEnvError(f"reward at t={t}, (s, a)={tuple(rest)} exceeds r_max={r_max}")
    neg = transitions < 0
    if np.any(neg):
        t, *rest = _index_path(int(np.argmax(neg.reshape(-1))), transitions.shape)
        raise TabularEnvError(f"negative transition probability at t={t}, (s', s, a)={tuple(rest)}")
    sums = transitions.sum(axis=tuple(range(1, 1 + len(S))))  # (T, *S, *A)
    bad = np.abs(sums - 1.0) > PROB_ATOL
    if np.any(bad):
        t, *rest = _index_path(int(np.argmax(bad.reshape(-1))), sums.shape)
        s, a = tuple(rest[: len(S)]), tuple(rest[len(S):])
        raise TabularEnvError(
            f"transition column at t={t}, s={s}, a={a} sums to {sums[(t, *rest)]!r}, not 1"
        )

    rewards.setflags(write=False)
    transitions.setflags(write=False)
    return Environment(
        T=T,
        S=S,
        A=A,
        mu0=mu0,
        r_max=r_max,
        reward_fn=lambda t, L_t: rewards[t],
        transition_fn=lambda t, L_t: transitions[t],
        static_rewards=True,
        static_transitions=True,
    )


def load_tabular_env(path) -> Environment:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise TabularEnvError(f"cannot read {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise TabularEnvError("top level must be a JSON object")
    return tabular_env_from_json(obj)


def tabular_env_to_json(env: Environment, flow: np.ndarray | None = None) -> dict[str, Any]:
    """Freeze an environment's tables along ``flow`` (default: the uniform policy's flow)."""
    if flow is None:
        flow = induced_mean_field(env, uniform_policy(env))
    L = env.flat(flow)
    rewards = np.stack([env.reward(t, L[t]) for t in range(env.T + 1)])
    transitions = np.array([env.transition(t, L[t]) for t in range(env.T)]).reshape(
        env.T, env.n_states, env.n_states, env.n_actions
    )
    return {
        "T": env.T,
        "S": list(env.S),
        "A": list(env.A),
        "mu0": env.mu0.tolist(),
        "r_max": env.r_max,
        "rewards": rewards.reshape(env.T + 1, *env.S, *env.A).tolist(),
        "transitions": transitions.reshape(env.T, *env.S, *env.S, *env.A).tolist(),
    }


def dump_tabular_env(env: Environment, path, flow: np.ndarray | None = None) -> None:
    Path(path).write_text(json.dumps(tabular_env_to_json(env, flow)) + "\n", encoding="utf-8")
