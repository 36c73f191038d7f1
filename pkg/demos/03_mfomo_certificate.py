"""
MFOMO as an optimisation problem
================================

MFOMO searches jointly over a state-action flow L, values y and slacks z.
The objective is zero exactly at an equilibrium, so a known equilibrium of
left/right gives a certificate, while a random game shows the projected
gradient steps driving the penalty down.
"""

import itertools

import numpy as np

from meanfield.envs import make_left_right, make_random_linear
from meanfield.solvers import MfomoPoint, mfomo_gradient, mfomo_iterates, mfomo_objective

# Left/right: everyone splits evenly at t=1 and collects -1/2.
L = np.zeros((2, 3, 2))
L[0, 0] = 0.5
L[1, 1:] = 0.25
y = np.array([[-0.5, -0.5, -0.5], [0.0, -0.5, -0.5]])
point = MfomoPoint(L, y, np.zeros((2, 3, 2)))
print("objective at the equilibrium:", mfomo_objective(make_left_right(), point))

# Away from it the gradient is nonzero.
value, grad = mfomo_gradient(make_left_right(), MfomoPoint.initial(make_left_right()))
print("objective at the initial point:", value, " |grad L| =", np.linalg.norm(grad.L))

env = make_random_linear(seed=0, T=2, n_states=3, n_actions=2)
values = [v for _, v in itertools.islice(mfomo_iterates(env, lr=0.01), 301)]
for k in (0, 10, 100, 300):
    print(f"step {k:>3}: objective {values[k]:.5f}")
