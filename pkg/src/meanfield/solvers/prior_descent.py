"""Prior descent.

An inner loop solves the entropy-regularized game anchored at a prior ``q``
by repeated soft best responses; every ``n_inner`` steps the prior is
replaced by the current policy.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np
from scipy.special import logsumexp

from meanfield.core import Environment, _tables, induced_mean_field, uniform_policy
from meanfield.solvers.base import IterationCallback, SolveResult, SolveSettings, run


def soft_best_response(env: Environment, flow: np.ndarray, prior: np.ndarray, eta: float) -> np.ndarray:
    """Prior-weighted softmax policy of the soft Bellman recursion against ``flow``.

    ``V[t,s] = eta * log sum_a q[t,s,a] exp(Q[t,s,a] / eta)``.  Actions with
    zero prior weight get zero probability.
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    rewards, kernels = _tables(env, env.flat(flow))
    q = env.flat(prior)
    pi = np.empty_like(q)
    V_next = None
    for t in range(env.T, -1, -1):
        Q = rewards[t] if V_next is None else rewards[t] + np.einsum("psa,p->sa", kernels[t], V_next)
        logits = Q / eta
        # logsumexp with weights b=q is max-shifted internally
        lse = logsumexp(logits, axis=1, b=q[t], keepdims=True)
        with np.errstate(divide="ignore"):
            pi[t] = np.exp(logits - lse + np.log(q[t]))
        V_next = eta * lse[:, 0]
    return env.unflat(pi)


def prior_descent_iterates(env: Environment, eta: float = 1.0, n_inner: int = 50) -> Iterator[np.ndarray]:
    if int(n_inner) != n_inner or n_inner < 1:
        raise ValueError(f"n_inner must be a positive int, got {n_inner}")
    prior = uniform_policy(env)
    pi = prior
    step = 0
    while True:
        yield pi
        pi = soft_best_response(env, induced_mean_field(env, pi), prior, eta)
        step += 1
        if step % n_inner == 0:
            prior = pi


def solve_prior_descent(
    env: Environment,
    settings: SolveSettings | None = None,
    eta: float = 1.0,
    n_inner: int = 50,
    callback: IterationCallback | None = None,
) -> SolveResult:
    return run(env, prior_descent_iterates(env, eta, n_inner), settings or SolveSettings(), callback)
