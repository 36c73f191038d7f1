"""
Defining a mean-field game
==========================

A game is a horizon, a state and action shape, an initial distribution and
two callables that receive the current state-action distribution L_t.
Here we build a small congestion game by hand and look at the basic
quantities: the flow a policy induces, its best response and its
exploitability.
"""

import numpy as np

from meanfield import Environment, best_response, exploitability, induced_mean_field, uniform_policy

# Three cells on a line; moving costs a little, crowded cells cost more.
n, T = 3, 4
move = np.array([-1, 0, 1])


def reward(t, L_t):
    crowd = L_t.sum(axis=1)  # mass per state
    return -crowd[:, None] - 0.1 * np.abs(move)[None, :]


def transition(t, L_t):
    P = np.zeros((n, n, 3))
    for s in range(n):
        for a, d in enumerate(move):
            P[min(max(s + d, 0), n - 1), s, a] = 1.0
    return P


mu0 = np.array([0.8, 0.2, 0.0])
env = Environment(T=T, S=n, A=3, mu0=mu0, r_max=1.2, reward_fn=reward, transition_fn=transition)

# The uniform policy spreads the crowd, but not optimally.
pi = uniform_policy(env)
L = induced_mean_field(env, pi)
print("state marginals under the uniform policy:")
print(np.round(L.sum(axis=2), 3))

# Against a frozen flow the best response is plain backward induction.
br, q = best_response(env, L)
print("best-response actions at t=0:", br[0].argmax(axis=1))
print("exploitability of uniform:", exploitability(env, pi))
