"""Mean-field occupation measure optimization (MFOMO).

The equilibrium conditions are written as a penalty over an occupation
measure ``L``, a value variable ``y`` and a Bellman-gap slack ``z``::

    c1 * ||flow residual||^2 + c2 * ||y - P y_next - z - r||^2 + c3 * <z, L>

It is zero exactly at an equilibrium certificate and is minimized by
projected gradient descent: ``L`` stage-wise onto the simplex, ``z`` and
``y`` onto boxes sized by the horizon and reward bound.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from meanfield.core import Environment, induced_mean_field, policy_from_mean_field, uniform_policy
from meanfield.solvers.base import IterationCallback, NumericalError, SolveResult, SolveSettings, run
from meanfield.solvers.simplex import project_simplex

COMPLEX_STEP = 1e-30
FD_STEP = 1e-6


@dataclass
class MfomoPoint:
    """Optimization variables; arrays keep the environment's original axes.

    ``L``: (T+1, *S, *A), ``y``: (T+1, *S), ``z``: (T+1, *S, *A).
    """

    L: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @classmethod
    def initial(cls, env: Environment) -> "MfomoPoint":
        """Flow of the uniform policy with ``y = z = 0``."""
        L = induced_mean_field(env, uniform_policy(env))
        return cls(L, np.zeros((env.T + 1, *env.S)), np.zeros(env.policy_shape))


def caps(env: Environment) -> tuple[float, float]:
    """Box bounds ``(y_cap, z_cap)``."""
    y_cap = (env.T + 1) * env.r_max
    return y_cap, 2.0 * y_cap


def _flat_point(env, point):
    L = env.flat(point.L)
    y = np.asarray(point.y, dtype=float).reshape(env.T + 1, env.n_states)
    z = env.flat(point.z)
    return L, y, z


def _residuals(env, L, y, z):
    """Flow residual (T+1, S), dual residual (T+1, S, A) and the stage tables."""
    rewards = [env.reward(t, L[t]) for t in range(env.T + 1)]
    kernels = [env.transition(t, L[t]) for t in range(env.T)]
    flow_res = L.sum(axis=2)
    flow_res[0] -= env.mu0.reshape(-1)
    dual_res = y[:, :, None] - z - np.stack(rewards)
    for t in range(env.T):
        flow_res[t + 1] -= np.einsum("psa,sa->p", kernels[t], L[t])
        dual_res[t] -= np.einsum("psa,p->sa", kernels[t], y[t + 1])
    return flow_res, dual_res, rewards, kernels


def mfomo_objective(env: Environment, point: MfomoPoint, c1: float = 1.0, c2: float = 1.0, c3: float = 1.0) -> float:
    L, y, z = _flat_point(env, point)
    flow_res, dual_res, _, _ = _residuals(env, L, y, z)
    return float(c1 * np.sum(flow_res**2) + c2 * np.sum(dual_res**2) + c3 * np.sum(z * L))


def _stage_vjp(fn, t, L_t, cotangent, shape):
    """Gradient of ``<cotangent, fn(t, L_t)>`` w.r.t. the flat ``L_t``.

    Complex-step when ``fn`` propagates complex input, central differences
    otherwise.
    """
    n_s, n_a = L_t.shape
    grad = np.empty(L_t.size)
    basis = np.eye(L_t.size)
    probe = np.asarray(fn(t, (L_t + 1j * COMPLEX_STEP * basis[0].reshape(L_t.shape)).reshape(shape)))
    if np.iscomplexobj(probe):
        for k in range(L_t.size):
            bumped = (L_t + 1j * COMPLEX_STEP * basis[k].reshape(L_t.shape)).reshape(shape)
            out = np.asarray(fn(t, bumped)).reshape(cotangent.shape)
            grad[k] = np.sum(cotangent * out.imag) / COMPLEX_STEP
    else:
        warnings.warn(
            "environment callable drops complex input; using central differences for the MFOMO gradient",
            RuntimeWarning,
            stacklevel=4,
        )
        for k in range(L_t.size):
            e = FD_STEP * basis[k].reshape(L_t.shape)
            hi = np.asarray(fn(t, (L_t + e).reshape(shape))).reshape(cotangent.shape)
            lo = np.asarray(fn(t, (L_t - e).reshape(shape))).reshape(cotangent.shape)
            grad[k] = np.sum(cotangent * (hi - lo)) / (2 * FD_STEP)
    return grad.reshape(n_s, n_a)


def mfomo_gradient(
    env: Environment, point: MfomoPoint, c1: float = 1.0, c2: float = 1.0, c3: float = 1.0
) -> tuple[float, MfomoPoint]:
    """Objective value and its gradient, returned as a point of the same shapes.

    Derivatives through population-dependent rewards and kernels are taken
    stage by stage with :func:`_stage_vjp`.
    """
    L, y, z = _flat_point(env, point)
    flow_res, dual_res, rewards, kernels = _residuals(env, L, y, z)
    value = float(c1 * np.sum(flow_res**2) + c2 * np.sum(dual_res**2) + c3 * np.sum(z * L))
    g1 = 2.0 * c1 * flow_res
    g2 = 2.0 * c2 * dual_res

    gL = g1[:, :, None] + c3 * z
    gy = g2.sum(axis=2)
    gz = -g2 + c3 * L
    for t in range(env.T):
        gL[t] -= np.einsum("psa,p->sa", kernels[t], g1[t + 1])
        gy[t + 1] -= np.einsum("psa,sa->p", kernels[t], g2[t])

    shape = (*env.S, *env.A)
    for t in range(env.T + 1):
        if not env.static_rewards:
            gL[t] += _stage_vjp(env.reward_fn, t, L[t], -g2[t], shape)
        if t < env.T and not env.static_transitions:
            # d obj / d P_t[s', s, a]
            gP = -(g1[t + 1][:, None, None] * L[t][None] + y[t + 1][:, None, None] * g2[t][None])
            gL[t] += _stage_vjp(env.transition_fn, t, L[t], gP, shape)

    grad = MfomoPoint(env.unflat(gL), env.unflat(gy, states_only=True), env.unflat(gz))
    return value, grad


def project_point(env: Environment, point: MfomoPoint) -> MfomoPoint:
    y_cap, z_cap = caps(env)
    L = env.flat(point.L)
    L = project_simplex(L.reshape(env.T + 1, -1)).reshape(L.shape)
    return MfomoPoint(
        env.unflat(L),
        np.clip(point.y, -y_cap, y_cap),
        np.clip(point.z, 0.0, z_cap),
    )


def mfomo_iterates(
    env: Environment,
    lr: float = 0.1,
    c1: float = 1.0,
    c2: float = 1.0,
    c3: float = 1.0,
    init: MfomoPoint | None = None,
) -> Iterator[tuple[MfomoPoint, float]]:
    """Yield ``(point, objective)`` for n = 0, 1, ... (objective at that point)."""
    if not lr > 0:
        raise ValueError(f"lr must be positive, got {lr}")
    point = init if init is not None else MfomoPoint.initial(env)
    n = 0
    while True:
        value, grad = mfomo_gradient(env, point, c1, c2, c3)
        finite = np.isfinite(value) and all(np.all(np.isfinite(g)) for g in (grad.L, grad.y, grad.z))
        if not finite:
            raise NumericalError("non-finite MFOMO objective or gradient", n)
        yield point, value
        point = project_point(
            env,
            MfomoPoint(point.L - lr * grad.L, point.y - lr * grad.y, point.z - lr * grad.z),
        )
        n += 1


def solve_mfomo(
    env: Environment,
    settings: SolveSettings | None = None,
    lr: float = 0.1,
    c1: float = 1.0,
    c2: float = 1.0,
    c3: float = 1.0,
    init: MfomoPoint | None = None,
    callback: IterationCallback | None = None,
) -> SolveResult:
    """Projected gradient descent on the MFOMO objective.

    The recorded policy is the conditional policy of the current ``L``.
    """
    action_ndim = len(env.A)
    steps = (
        policy_from_mean_field(point.L, action_ndim)
        for point, _ in mfomo_iterates(env, lr, c1, c2, c3, init)
    )
    return run(env, steps, settings or SolveSettings(), callback)
