"""
Tuning hyperparameters
======================

Random search draws configurations with a seeded generator, runs each one
on every environment of a suite and scores the suite.  The same seed gives
the same history.
"""

from meanfield.envs import make_beach_bar, make_left_right, make_rock_paper_scissors
from meanfield.tuner import TuneSettings, tune

suite = [make_left_right(), make_rock_paper_scissors(), make_beach_bar(n=4, T=3)]
settings = TuneSettings(metric="shifted_geo_mean", n_trials=12, seed=1, max_iter=100, atol=1e-6)

best, history = tune("online_mirror_descent", suite, settings=settings)
for rec in history:
    iters = [o.iterations if o.converged else "fail" for o in rec.outcomes]
    print(f"trial {rec.index:>2}  alpha={rec.config['alpha']:<10.4g} score={rec.score:8.3f}  {iters}")
print("best:", best)

# failure_rate ranks by the share of unconverged runs first.
settings = TuneSettings(metric="failure_rate", n_trials=6, seed=1, max_iter=100, atol=1e-6)
best, _ = tune("prior_descent", suite, settings=settings)
print("best prior descent config:", best)
