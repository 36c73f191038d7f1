"""Finite-horizon mean-field game model and its exact recursions.

Conventions
-----------
``T`` counts transitions, so a game has ``T + 1`` decision stages
``t = 0, ..., T`` and rewards are collected at every stage, including the
terminal one.  Policies and mean-field flows are arrays of shape
``(T + 1, *S, *A)``; the state and action axes keep their original
(possibly multidimensional) layout.  Internally the recursions work on
flattened ``(n_states, n_actions)`` views and reshape on the way out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Callable, NamedTuple

import numpy as np

PROB_ATOL = 1e-9
ZERO_MASS = 1e-12

RewardFn = Callable[[int, np.ndarray], np.ndarray]
TransitionFn = Callable[[int, np.ndarray], np.ndarray]


class InvariantError(ValueError):
    """An environment callable or input array broke a model invariant."""

    def __init__(self, invariant: str, message: str, t: int | None = None):
        self.invariant = invariant
        self.t = t
        where = "" if t is None else f" at t={t}"
        super().__init__(f"{invariant} violated{where}: {message}")


def _as_shape(shape) -> tuple[int, ...]:
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    shape = tuple(int(n) for n in shape)
    if not shape or any(n < 1 for n in shape):
        raise ValueError(f"shape must be a nonempty tuple of positive ints, got {shape}")
    return shape


@dataclass(frozen=True, eq=False)
class Environment:
    """A discrete-time, finite-horizon mean-field game.

    Args:
        T: Number of transitions; there are ``T + 1`` stages.
        S: State space shape (an int is promoted to a 1-tuple).
        A: Action space shape.
        mu0: Initial state distribution, shape ``S``.
        r_max: Bound on the absolute one-stage reward.
        reward_fn: ``(t, L_t) -> array of shape (*S, *A)``.
        transition_fn: ``(t, L_t) -> array of shape (*S, *S, *A)`` holding
            the next-state distribution for every current ``(s, a)``.
        validate: Check callable outputs on every call.  Turn off once an
            environment is trusted.
        static_rewards, static_transitions: Promise that the corresponding
            callable ignores ``L_t``.  Only used to skip derivative work.
    """

    T: int
    S: tuple[int, ...]
    A: tuple[int, ...]
    mu0: np.ndarray
    r_max: float
    reward_fn: RewardFn
    transition_fn: TransitionFn
    validate: bool = True
    static_rewards: bool = False
    static_transitions: bool = False
    n_states: int = field(init=False)
    n_actions: int = field(init=False)

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 0:
            raise ValueError(f"T must be a nonnegative integer, got {self.T}")
        set_ = object.__setattr__
        set_(self, "T", int(self.T))
        set_(self, "S", _as_shape(self.S))
        set_(self, "A", _as_shape(self.A))
        set_(self, "n_states", prod(self.S))
        set_(self, "n_actions", prod(self.A))
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        set_(self, "r_max", float(self.r_max))

        mu0 = np.array(self.mu0, dtype=float)
        if mu0.shape != self.S:
            raise InvariantError("mu0 shape", f"expected {self.S}, got {mu0.shape}")
        if np.any(mu0 < 0) or abs(mu0.sum() - 1.0) > PROB_ATOL:
            raise InvariantError("mu0 distribution", "entries must be >= 0 and sum to 1")
        mu0.setflags(write=False)
        set_(self, "mu0", mu0)

    @property
    def policy_shape(self) -> tuple[int, ...]:
        return (self.T + 1, *self.S, *self.A)

    # Flat views used by every recursion.

    def reward(self, t: int, L_t: np.ndarray) -> np.ndarray:
        """Rewards at stage ``t`` as an ``(n_states, n_actions)`` array."""
        r = np.asarray(self.reward_fn(t, L_t.reshape(*self.S, *self.A)))
        if r.shape != (*self.S, *self.A):
            raise InvariantError("reward shape", f"expected {(*self.S, *self.A)}, got {r.shape}", t)
        r = r.reshape(self.n_states, self.n_actions)
        if self.validate:
            if not np.all(np.isfinite(r)):
                raise InvariantError("reward finiteness", "non-finite reward", t)
            if np.max(np.abs(r)) > self.r_max + PROB_ATOL:
                raise InvariantError(
                    "reward bound", f"max |r| = {np.max(np.abs(r))!r} exceeds r_max = {self.r_max!r}", t
                )
        return r

    def transition(self, t: int, L_t: np.ndarray) -> np.ndarray:
        """Kernel at stage ``t`` as an ``(n_states', n_states, n_actions)`` array."""
        P = np.asarray(self.transition_fn(t, L_t.reshape(*self.S, *self.A)))
        expected = (*self.S, *self.S, *self.A)
        if P.shape != expected:
            raise InvariantError("transition shape", f"expected {expected}, got {P.shape}", t)
        P = P.reshape(self.n_states, self.n_states, self.n_actions)
        if self.validate:
            check_kernel(P, t)
        return P

    def flat(self, arr: np.ndarray) -> np.ndarray:
        """View a ``(T+1, *S, *A)`` array as ``(T+1, n_states, n_actions)``."""
        arr = np.asarray(arr)
        if arr.shape != self.policy_shape:
            raise InvariantError("array shape", f"expected {self.policy_shape}, got {arr.shape}")
        return arr.reshape(self.T + 1, self.n_states, self.n_actions)

    def unflat(self, arr: np.ndarray, states_only: bool = False) -> np.ndarray:
        if states_only:
            return arr.reshape(arr.shape[0], *self.S)
        return arr.reshape(arr.shape[0], *self.S, *self.A)


def check_kernel(P: np.ndarray, t: int | None = None) -> None:
    """Raise unless every ``(s, a)`` column of a flat kernel is a distribution."""
    if not np.all(np.isfinite(P)):
        raise InvariantError("transition finiteness", "non-finite entry", t)
    if np.any(P < 0):
        idx = tuple(int(i) for i in np.argwhere(P < 0)[0])
        raise InvariantError("transition nonnegativity", f"negative entry at (s', s, a) = {idx}", t)
    sums = P.sum(axis=0)
    bad = np.abs(sums - 1.0) > PROB_ATOL
    if np.any(bad):
        s, a = (int(i) for i in np.argwhere(bad)[0])
        raise InvariantError(
            "transition normalization", f"column (s, a) = ({s}, {a}) sums to {sums[s, a]!r}", t
        )


class QFunction(NamedTuple):
    """Stage-to-go action values ``Q`` (T+1, *S, *A) and state values ``V`` (T+1, *S)."""

    Q: np.ndarray
    V: np.ndarray


def check_policy(env: Environment, policy: np.ndarray) -> np.ndarray:
    pi = env.flat(policy)
    if np.any(pi < -PROB_ATOL) or np.any(np.abs(pi.sum(axis=2) - 1.0) > PROB_ATOL):
        raise InvariantError("policy rows", "entries must be >= 0 and each row sum to 1")
    return pi


def check_flow(env: Environment, flow: np.ndarray) -> np.ndarray:
    L = env.flat(flow)
    if np.any(L < -PROB_ATOL) or np.any(np.abs(L.sum(axis=(1, 2)) - 1.0) > PROB_ATOL):
        raise InvariantError("flow stages", "entries must be >= 0 and each stage sum to 1")
    return L


def uniform_policy(env: Environment) -> np.ndarray:
    return np.full(env.policy_shape, 1.0 / env.n_actions)


def _tables(env: Environment, L: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Rewards for every stage and kernels for t < T, evaluated along a flat flow."""
    rewards = [env.reward(t, L[t]) for t in range(env.T + 1)]
    kernels = [env.transition(t, L[t]) for t in range(env.T)]
    return rewards, kernels


def _induce_flat(env: Environment, pi: np.ndarray) -> np.ndarray:
    L = np.empty_like(pi, dtype=float)
    mu = env.mu0.reshape(-1)
    for t in range(env.T + 1):
        L[t] = mu[:, None] * pi[t]
        if t < env.T:
            P = env.transition(t, L[t])
            mu = np.einsum("psa,sa->p", P, L[t])
    return L


def induced_mean_field(env: Environment, policy: np.ndarray) -> np.ndarray:
    """Push ``mu0`` forward under ``policy``; returns the flow ``L`` (T+1, *S, *A).

    The kernel at stage ``t`` is evaluated at the just-computed ``L_t``.
    """
    pi = check_policy(env, policy)
    return env.unflat(_induce_flat(env, pi))


def _evaluate_flat(env, pi, rewards, kernels):
    Q = np.empty((env.T + 1, env.n_states, env.n_actions))
    V = np.empty((env.T + 1, env.n_states))
    for t in range(env.T, -1, -1):
        Q[t] = rewards[t]
        if t < env.T:
            Q[t] += np.einsum("psa,p->sa", kernels[t], V[t + 1])
        V[t] = np.sum(pi[t] * Q[t], axis=1)
    return Q, V


def _best_response_flat(env, rewards, kernels):
    Q = np.empty((env.T + 1, env.n_states, env.n_actions))
    V = np.empty((env.T + 1, env.n_states))
    br = np.zeros_like(Q)
    for t in range(env.T, -1, -1):
        Q[t] = rewards[t]
        if t < env.T:
            Q[t] += np.einsum("psa,p->sa", kernels[t], V[t + 1])
        # argmax returns the first maximizer in row-major action order
        best = np.argmax(Q[t], axis=1)
        br[t, np.arange(env.n_states), best] = 1.0
        V[t] = Q[t, np.arange(env.n_states), best]
    return br, Q, V


def policy_q_values(env: Environment, policy: np.ndarray, flow: np.ndarray) -> QFunction:
    """Evaluate ``policy`` by backward induction against a frozen flow."""
    pi = check_policy(env, policy)
    rewards, kernels = _tables(env, check_flow(env, flow))
    Q, V = _evaluate_flat(env, pi, rewards, kernels)
    return QFunction(env.unflat(Q), env.unflat(V, states_only=True))


def best_response(env: Environment, flow: np.ndarray) -> tuple[np.ndarray, QFunction]:
    """Deterministic optimal policy against a frozen flow, with its optimal values.

    Ties go to the first maximizing action in row-major order.
    """
    rewards, kernels = _tables(env, check_flow(env, flow))
    br, Q, V = _best_response_flat(env, rewards, kernels)
    return env.unflat(br), QFunction(env.unflat(Q), env.unflat(V, states_only=True))


def policy_from_mean_field(flow: np.ndarray, action_ndim: int = 1) -> np.ndarray:
    """Conditional action distributions of a flow.

    ``action_ndim`` is the number of trailing action axes.  States whose mass
    is at most ``ZERO_MASS`` get a uniform row.
    """
    flow = np.asarray(flow, dtype=float)
    lead = flow.shape[: flow.ndim - action_ndim]
    L = flow.reshape(*lead, -1)
    mass = L.sum(axis=-1, keepdims=True)
    n_actions = L.shape[-1]
    safe = np.where(mass > ZERO_MASS, mass, 1.0)
    pi = np.where(mass > ZERO_MASS, L / safe, 1.0 / n_actions)
    return pi.reshape(flow.shape)


def exploitability(env: Environment, policy: np.ndarray) -> float:
    """Gain of the best deviation against the flow ``policy`` induces.

    Both values are weighted by ``mu0``; zero exactly at a Nash equilibrium.
    """
    pi = check_policy(env, policy)
    L = _induce_flat(env, pi)
    rewards, kernels = _tables(env, L)
    _, _, V_br = _best_response_flat(env, rewards, kernels)
    _, V_pi = _evaluate_flat(env, pi, rewards, kernels)
    mu0 = env.mu0.reshape(-1)
    return float(mu0 @ V_br[0] - mu0 @ V_pi[0])
