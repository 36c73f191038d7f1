import math
import time

import numpy as np
import pytest

from meanfield.envs import make_left_right, make_rock_paper_scissors
from meanfield.solvers import SolveSettings
from meanfield.tuner import (
    DEFAULT_SPACES,
    Outcome,
    Param,
    TuneSettings,
    evaluate_config,
    sample_config,
    score_failure_rate,
    score_shifted_geo_mean,
    tune,
)


def ok(iters, expl=0.0):
    return Outcome(True, iters, expl)


def failed(max_iter=100, expl=0.5):
    return Outcome(False, max_iter, expl)


def test_single_choice_categorical():
    rng = np.random.default_rng(0)
    space = [Param("method", "categorical", choices=("a",))]
    assert all(sample_config(space, rng) == {"method": "a"} for _ in range(50))


def test_log_uniform_median():
    rng = np.random.default_rng(0)
    p = Param("lr", "continuous", 0.1, 10, log=True)
    samples = np.array([p.sample(rng) for _ in range(10_000)])
    assert 0.5 < np.median(samples) < 2
    assert samples.min() >= 0.1 and samples.max() <= 10


def test_integer_param_covers_bounds():
    rng = np.random.default_rng(0)
    p = Param("n", "integer", 1, 3)
    assert {p.sample(rng) for _ in range(200)} == {1, 2, 3}


def test_nullable_param_is_sometimes_unset():
    rng = np.random.default_rng(0)
    values = [sample_config(DEFAULT_SPACES["fictitious_play"], rng)["alpha"] for _ in range(200)]
    assert any(v is None for v in values)
    assert all(1e-3 <= v <= 1 for v in values if v is not None)


def test_same_seed_same_configs():
    space = DEFAULT_SPACES["prior_descent"]
    a = np.random.default_rng(5)
    b = np.random.default_rng(5)
    assert [sample_config(space, a) for _ in range(10)] == [sample_config(space, b) for _ in range(10)]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"name": "x", "kind": "continuous", "low": 0, "high": 1, "log": True},
        {"name": "x", "kind": "continuous", "low": 2, "high": 1},
        {"name": "x", "kind": "categorical"},
        {"name": "x", "kind": "weird", "low": 0, "high": 1},
    ],
)
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ValueError):
        Param(**kwargs)


def test_failure_rate_scores():
    assert score_failure_rate([ok(3), ok(4)])[0] == 0.0
    assert score_failure_rate([ok(3), failed()])[0] == 0.5
    # tie on rate is broken by mean final exploitability
    assert score_failure_rate([ok(3, 1e-9), ok(3, 1e-9)]) < score_failure_rate([ok(3, 1e-3), ok(3, 1e-3)])


def test_shifted_geo_mean_scores():
    assert score_shifted_geo_mean([ok(3), ok(7)], max_iter=10) == pytest.approx(math.sqrt(32) - 1, abs=1e-12)
    assert score_shifted_geo_mean([ok(0), ok(0)], max_iter=10) == 0.0
    assert score_shifted_geo_mean([failed(100)], max_iter=100) == pytest.approx(200.0, abs=1e-12)


def test_scores_are_monotone():
    rng = np.random.default_rng(0)
    for _ in range(50):
        outcomes = [ok(int(n)) for n in rng.integers(0, 50, size=4)]
        base = score_shifted_geo_mean(outcomes, 50)
        i = int(rng.integers(4))
        worse = list(outcomes)
        worse[i] = ok(outcomes[i].iterations + int(rng.integers(1, 10)))
        assert score_shifted_geo_mean(worse, 50) >= base
        worse[i] = failed(50)
        assert score_shifted_geo_mean(worse, 50) >= base
        assert score_failure_rate(worse)[0] >= score_failure_rate(outcomes)[0]


def test_evaluate_config_preserves_suite_order():
    suite = [make_rock_paper_scissors(), make_left_right()]
    out = evaluate_config("online_mirror_descent", {"alpha": 1.0}, suite, SolveSettings(max_iter=20))
    assert len(out) == 2
    assert all(o.converged and o.iterations <= 20 for o in out)


def test_evaluate_config_records_failures():
    suite = [make_left_right()]
    out = evaluate_config("fictitious_play", {"alpha": 5.0}, suite, SolveSettings(max_iter=5))
    assert not out[0].converged and out[0].error and "alpha" in out[0].error


def test_tune_single_trial():
    best, history = tune("online_mirror_descent", [make_left_right()], settings=TuneSettings(n_trials=1))
    assert len(history) == 1 and best == history[0].config


def test_tune_is_deterministic_and_best_is_minimal():
    suite = [make_left_right(), make_rock_paper_scissors()]
    settings = TuneSettings(n_trials=20, seed=3, max_iter=50)
    best_a, hist_a = tune("online_mirror_descent", suite, settings=settings)
    best_b, hist_b = tune("online_mirror_descent", suite, settings=settings)
    assert best_a == best_b
    assert [(r.config, r.score, r.outcomes) for r in hist_a] == [(r.config, r.score, r.outcomes) for r in hist_b]
    assert best_a in [r.config for r in hist_a]
    best_score = next(r.score for r in hist_a if r.config == best_a)
    assert all(best_score <= r.score for r in hist_a)


def test_tune_prefers_converging_configs():
    from meanfield.envs import make_beach_bar

    suite = [make_beach_bar(n=4, T=2)]
    settings = TuneSettings(n_trials=8, seed=0, max_iter=60, atol=1e-4, metric="failure_rate")
    best, history = tune("online_mirror_descent", suite, settings=settings)
    best_rec = min(history, key=lambda r: r.key)
    assert best_rec.config == best
    assert all(best_rec.key <= r.key for r in history)


def test_tune_timeout_stops_starting_trials():
    suite = [make_left_right()]
    start = time.perf_counter()
    _, history = tune("mfomo", suite, settings=TuneSettings(n_trials=10_000, timeout=0.3, max_iter=20))
    elapsed = time.perf_counter() - start
    assert 1 <= len(history) < 10_000
    slowest = max(r.wall_time for r in history)
    assert elapsed <= 0.3 + slowest + 0.05


def test_tune_input_errors():
    with pytest.raises(ValueError):
        tune("online_mirror_descent", [])
    with pytest.raises(ValueError):
        TuneSettings(metric="geo")
    with pytest.raises(KeyError):
        tune("nope", [make_left_right()])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_trials_become_failures():
    from meanfield.records import tabular_env_from_json, tabular_env_to_json

    obj = tabular_env_to_json(make_left_right())
    obj["r_max"] = 10.0
    obj["rewards"][1][1] = [10.0, 10.0]
    obj["rewards"][1][2] = [0.0, 0.0]
    env = tabular_env_from_json(obj)
    space = [Param("alpha", "categorical", choices=(1e308,))]
    best, history = tune("online_mirror_descent", [env], space, TuneSettings(n_trials=2, max_iter=5))
    assert len(history) == 2
    for record in history:
        assert not record.outcomes[0].converged
        assert "NumericalError" in record.outcomes[0].error
        assert math.isfinite(record.score)
