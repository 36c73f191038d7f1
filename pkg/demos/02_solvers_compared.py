"""
Four solvers on the beach bar
=============================

Every solver shares the same loop: exploitability is recorded and the run
stops once it falls below ``atol + rtol * expl_0``.  We run each one with its
default hyperparameters and print how far it got.
"""

from meanfield import SolveSettings, solve
from meanfield.envs import make_beach_bar

env = make_beach_bar(n=6, T=4)
settings = SolveSettings(max_iter=200, atol=1e-6, rtol=0.0, record_every=10)

for alg in ("fictitious_play", "online_mirror_descent", "prior_descent", "mfomo"):
    res = solve(alg, env, settings)
    print(
        f"{alg:<22} iterations={res.iterations_run:>4}  "
        f"first={res.exploitabilities[0]:.3e}  last={res.exploitabilities[-1]:.3e}  "
        f"converged={res.converged}"
    )

# Defaults are not tuned per game: prior descent and MFOMO need other
# settings here (see 04_tuning.py).  Hyperparameters are keyword arguments.
res = solve("online_mirror_descent", env, settings, alpha=5.0)
print("OMD with alpha=5:", res.exploitabilities[-1])
