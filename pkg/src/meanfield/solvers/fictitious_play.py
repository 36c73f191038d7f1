"""(Damped) fictitious play in mean-field averaging form.

The state is an averaged flow ``M``.  Each iteration reads off the policy
of ``M``, best-responds to the flow that policy induces, and mixes the
best response's own flow into ``M`` with weight ``1/(n+2)`` or a constant
``alpha``.  ``alpha=1`` is plain fixed-point (best-response) iteration.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from meanfield.core import (
    Environment,
    best_response,
    induced_mean_field,
    policy_from_mean_field,
    uniform_policy,
)
from meanfield.solvers.base import IterationCallback, SolveResult, SolveSettings, run


def fictitious_play_iterates(
    env: Environment, alpha: float | None = None
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(policy, averaged_flow)`` for n = 0, 1, ... without end."""
    if alpha is not None and not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    action_ndim = len(env.A)
    M = induced_mean_field(env, uniform_policy(env))
    n = 0
    while True:
        pi = policy_from_mean_field(M, action_ndim)
        yield pi, M
        br, _ = best_response(env, induced_mean_field(env, pi))
        L_br = induced_mean_field(env, br)
        w = alpha if alpha is not None else 1.0 / (n + 2)
        M = (1.0 - w) * M + w * L_br
        n += 1


def solve_fictitious_play(
    env: Environment,
    settings: SolveSettings | None = None,
    alpha: float | None = None,
    callback: IterationCallback | None = None,
) -> SolveResult:
    steps = (pi for pi, _ in fictitious_play_iterates(env, alpha))
    return run(env, steps, settings or SolveSettings(), callback)
