"""Online mirror descent: accumulate policy Q-values, map through softmax."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from meanfield.core import Environment, induced_mean_field, policy_q_values
from meanfield.solvers.base import IterationCallback, SolveResult, SolveSettings, run


def softmax_rows(y: np.ndarray, n_lead: int) -> np.ndarray:
    """Softmax over all axes after the first ``n_lead`` ones (max-shifted)."""
    flat = y.reshape(*y.shape[:n_lead], -1)
    z = np.exp(flat - flat.max(axis=-1, keepdims=True))
    return (z / z.sum(axis=-1, keepdims=True)).reshape(y.shape)


def mirror_descent_iterates(env: Environment, alpha: float = 1.0) -> Iterator[np.ndarray]:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    n_lead = 1 + len(env.S)
    y = np.zeros(env.policy_shape)
    while True:
        pi = softmax_rows(y, n_lead)
        yield pi
        Q = policy_q_values(env, pi, induced_mean_field(env, pi)).Q
        y = y + alpha * Q


def solve_online_mirror_descent(
    env: Environment,
    settings: SolveSettings | None = None,
    alpha: float = 1.0,
    callback: IterationCallback | None = None,
) -> SolveResult:
    return run(env, mirror_descent_iterates(env, alpha), settings or SolveSettings(), callback)
