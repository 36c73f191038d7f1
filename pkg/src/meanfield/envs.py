"""Built-in environments, also used as test fixtures.

Every constructor returns a validating :class:`~meanfield.core.Environment`.
The reward and transition callables only use array operations that also
work on complex input, which lets the MFOMO gradient differentiate through
them by complex-step.
"""

from __future__ import annotations

import inspect
import math

import numpy as np

from meanfield.core import Environment

LEFT_RIGHT_STATES = ("init", "left", "right")
RPS_STATES = ("init", "rock", "paper", "scissors")


def make_left_right() -> Environment:
    """Two-sided crowd-avoidance game with one transition.

    From ``init`` the agent moves left (action 0) or right (action 1) and is
    then penalized by the fraction of the population on the same side.  The
    even split is the unique equilibrium.
    """
    P = np.zeros((3, 3, 2))
    P[1, :, 0] = 1.0
    P[2, :, 1] = 1.0

    def reward_fn(t, L_t):
        r = np.zeros(L_t.shape, dtype=L_t.dtype)
        if t == 1:
            mass = L_t.sum(axis=1)
            r[1:, :] = -mass[1:, None]
        return r

    return Environment(
        T=1,
        S=(3,),
        A=(2,),
        mu0=np.array([1.0, 0.0, 0.0]),
        r_max=1.0,
        reward_fn=reward_fn,
        transition_fn=lambda t, L_t: P,
        static_transitions=True,
    )


def make_beach_bar(
    n: int = 10, bar: int | None = None, noise: float = 0.1, T: int = 5, log_eps: float = 1e-3
) -> Environment:
    """Agents on a line of ``n`` spots want to be near the bar but not crowded.

    Actions are moves ``-1, 0, +1`` clipped to the line.  With probability
    ``noise`` the move is replaced by a uniformly random one.  The stage
    reward is ``-|s - bar| / n - log(m_t(s) + log_eps)``.  ``bar`` defaults
    to the middle spot ``n // 2``.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if bar is None:
        bar = n // 2
    if not 0 <= bar < n:
        raise ValueError(f"bar must lie in [0, n), got {bar}")
    if not 0.0 <= noise <= 1.0:
        raise ValueError(f"noise must lie in [0, 1], got {noise}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not log_eps > 0:
        raise ValueError(f"log_eps must be positive, got {log_eps}")

    positions = np.arange(n)
    moves = np.array([-1, 0, 1])
    dest = np.clip(positions[:, None] + moves[None, :], 0, n - 1)  # (s, a)
    P = np.zeros((n, n, 3))
    s_idx, a_idx = np.meshgrid(positions, np.arange(3), indexing="ij")
    np.add.at(P, (dest, s_idx, a_idx), 1.0 - noise)
    for k in range(3):
        np.add.at(P, (dest[:, [k]].repeat(3, axis=1), s_idx, a_idx), noise / 3.0)

    distance = np.abs(positions - bar) / n

    def reward_fn(t, L_t):
        mass = L_t.sum(axis=1)
        r = -distance - np.log(mass + log_eps)
        return np.repeat(r[:, None], 3, axis=1)

    # -log(m + eps) ranges over [-log(1 + eps), -log(eps)] for m in [0, 1]
    r_max = 1.0 + max(abs(math.log(log_eps)), abs(math.log1p(log_eps)))
    return Environment(
        T=T,
        S=(n,),
        A=(3,),
        mu0=np.full(n, 1.0 / n),
        r_max=r_max,
        reward_fn=reward_fn,
        transition_fn=lambda t, L_t: P,
        static_transitions=True,
    )


def make_rock_paper_scissors() -> Environment:
    """One-shot population rock-paper-scissors.

    Action ``i`` moves to state ``i + 1`` (rock, paper, scissors); at the
    last stage each state earns the mass it beats minus the mass beating it.
    """
    P = np.zeros((4, 4, 3))
    for a in range(3):
        P[a + 1, :, a] = 1.0

    def reward_fn(t, L_t):
        r = np.zeros(L_t.shape, dtype=L_t.dtype)
        if t == 1:
            m = L_t.sum(axis=1)
            r[1, :] = m[3] - m[2]
            r[2, :] = m[1] - m[3]
            r[3, :] = m[2] - m[1]
        return r

    return Environment(
        T=1,
        S=(4,),
        A=(3,),
        mu0=np.array([1.0, 0.0, 0.0, 0.0]),
        r_max=1.0,
        reward_fn=reward_fn,
        transition_fn=lambda t, L_t: P,
        static_transitions=True,
    )


def make_random_linear(
    seed: int, T: int, n_states: int, n_actions: int, coupling: float = 0.5
) -> Environment:
    """Seeded random game whose rewards are affine in the population flow.

    ``r_t = R0[t] + coupling * <W[t], L_t>`` with ``R0, W ~ U(-1, 1)``;
    transitions are random but fixed.  Smooth in ``L`` and cheap to
    enumerate, so it backs the oracle tests.
    """
    if T < 0 or n_states < 1 or n_actions < 1:
        raise ValueError("need T >= 0, n_states >= 1, n_actions >= 1")
    rng = np.random.default_rng(seed)
    S, A = n_states, n_actions
    base = rng.uniform(-1.0, 1.0, size=(T + 1, S, A))
    kernels = rng.uniform(0.05, 1.0, size=(T, S, S, A))
    kernels /= kernels.sum(axis=1, keepdims=True)
    W = rng.uniform(-1.0, 1.0, size=(T + 1, S, A, S, A))

    def reward_fn(t, L_t):
        if coupling == 0:
            return base[t]
        return base[t] + coupling * np.einsum("sabc,bc->sa", W[t], L_t)

    return Environment(
        T=T,
        S=(S,),
        A=(A,),
        mu0=np.full(S, 1.0 / S),
        r_max=1.0 + abs(coupling) * float(np.max(np.abs(W))),
        reward_fn=reward_fn,
        transition_fn=lambda t, L_t: kernels[t],
        static_rewards=coupling == 0,
        static_transitions=True,
    )


ENVIRONMENTS = {
    "left_right": make_left_right,
    "beach_bar": make_beach_bar,
    "rock_paper_scissors": make_rock_paper_scissors,
    "random_linear": make_random_linear,
}


def make_env(name: str, **kwargs) -> Environment:
    """Build a registered environment by name."""
    try:
        factory = ENVIRONMENTS[name]
    except KeyError:
        raise KeyError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None
    return factory(**kwargs)


def env_signature(name: str) -> str:
    """``name(kw=default, ...)`` for listings."""
    params = inspect.signature(ENVIRONMENTS[name]).parameters.values()
    parts = [p.name if p.default is p.empty else f"{p.name}={p.default!r}" for p in params]
    return f"{name}({', '.join(parts)})"
