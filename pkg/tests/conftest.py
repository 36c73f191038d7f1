import itertools

import numpy as np
import pytest

from meanfield.core import Environment
from meanfield.envs import make_left_right, make_rock_paper_scissors


def random_policy(env, rng):
    """Random policy with rows drawn from a Dirichlet, in the env's original shape."""
    pi = rng.dirichlet(np.ones(env.n_actions), size=(env.T + 1, env.n_states))
    return pi.reshape(env.policy_shape)


def random_flow(env, rng):
    L = rng.dirichlet(np.ones(env.n_states * env.n_actions), size=env.T + 1)
    return L.reshape(env.policy_shape)


def coupled_env(seed, T=None, S=None, A=None, coupling=0.5):
    """Random env whose rewards AND transitions depend smoothly on L_t.

    Shapes may be multidimensional.  Uses only complex-safe operations.
    """
    rng = np.random.default_rng(seed)
    T = int(rng.integers(0, 4)) if T is None else T
    S = S or tuple(int(n) for n in rng.integers(1, 4, size=rng.integers(1, 3)))
    A = A or tuple(int(n) for n in rng.integers(1, 4, size=rng.integers(1, 3)))
    nS, nA = int(np.prod(S)), int(np.prod(A))
    R0 = rng.uniform(-1, 1, size=(T + 1, nS, nA))
    W = rng.uniform(-1, 1, size=(T + 1, nS, nA, nS, nA))
    logits = rng.normal(size=(T, nS, nS, nA))
    K = rng.uniform(-1, 1, size=(T, nS, nS * nA))

    def reward_fn(t, L_t):
        L = L_t.reshape(nS, nA)
        r = R0[t] + coupling * np.einsum("sabc,bc->sa", W[t], L)
        return r.reshape(*S, *A)

    def transition_fn(t, L_t):
        shift = coupling * (K[t] @ L_t.reshape(-1))  # (s',)
        z = np.exp(logits[t] + shift[:, None, None])
        P = z / z.sum(axis=0, keepdims=True)
        return P.reshape(*S, *S, *A)

    mu0 = rng.dirichlet(np.ones(nS)).reshape(S)
    return Environment(
        T=T,
        S=S,
        A=A,
        mu0=mu0,
        r_max=1.0 + coupling * float(np.max(np.abs(W))),
        reward_fn=reward_fn,
        transition_fn=transition_fn,
    )


def frozen_value(env, flow, det_policy):
    """Forward accounting of a policy's value against a frozen flow.

    The agent's own state distribution is pushed through the kernels the
    frozen flow induces.  Independent of the library's backward recursions.
    """
    L = flow.reshape(env.T + 1, env.n_states, env.n_actions)
    pi = det_policy.reshape(env.T + 1, env.n_states, env.n_actions)
    mu = env.mu0.reshape(-1).copy()
    total = 0.0
    for t in range(env.T + 1):
        r = np.asarray(env.reward_fn(t, L[t].reshape(*env.S, *env.A))).reshape(env.n_states, env.n_actions)
        for s in range(env.n_states):
            for a in range(env.n_actions):
                total += mu[s] * pi[t, s, a] * r[s, a]
        if t < env.T:
            P = np.asarray(env.transition_fn(t, L[t].reshape(*env.S, *env.A)))
            P = P.reshape(env.n_states, env.n_states, env.n_actions)
            nxt = np.zeros(env.n_states)
            for s in range(env.n_states):
                for a in range(env.n_actions):
                    nxt += mu[s] * pi[t, s, a] * P[:, s, a]
            mu = nxt
    return total


def brute_force_best_value(env, flow):
    """Max of ``frozen_value`` over every deterministic policy."""
    cells = (env.T + 1) * env.n_states
    best = -np.inf
    for choice in itertools.product(range(env.n_actions), repeat=cells):
        pi = np.zeros((cells, env.n_actions))
        pi[np.arange(cells), choice] = 1.0
        best = max(best, frozen_value(env, flow, pi.reshape(env.policy_shape)))
    return best


@pytest.fixture
def left_right():
    return make_left_right()


@pytest.fixture
def rps():
    return make_rock_paper_scissors()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
