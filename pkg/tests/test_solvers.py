import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from meanfield.core import best_response, exploitability, induced_mean_field, uniform_policy
from meanfield.envs import make_beach_bar, make_random_linear
from meanfield.solvers import (
    ALGORITHMS,
    NumericalError,
    SolveSettings,
    check_stop,
    fictitious_play_iterates,
    mirror_descent_iterates,
    prior_descent_iterates,
    soft_best_response,
    softmax_rows,
    solve,
    solve_fictitious_play,
)

from conftest import coupled_env, random_flow, random_policy


def take(iterator, n):
    return list(itertools.islice(iterator, n))


@pytest.mark.parametrize(
    "atol,rtol,e0,en,expected",
    [(1e-8, 0, 5.0, 0.0, True), (0, 0.5, 2, 1.1, False), (0, 0.5, 2, 0.9, True), (0, 0.5, 2, 1.0, True)],
)
def test_check_stop(atol, rtol, e0, en, expected):
    assert check_stop(SolveSettings(atol=atol, rtol=rtol), e0, en) is expected


@pytest.mark.parametrize("kwargs", [{"max_iter": 0}, {"atol": -1}, {"record_every": 5, "max_iter": 3}])
def test_settings_validation(kwargs):
    with pytest.raises(ValueError):
        SolveSettings(**kwargs)


def test_registry_names():
    assert list(ALGORITHMS) == ["fictitious_play", "online_mirror_descent", "prior_descent", "mfomo"]


# Fictitious play


def test_fp_converges_on_left_right(left_right):
    res = solve_fictitious_play(left_right, SolveSettings(max_iter=500))
    assert min(res.exploitabilities) <= 1e-2


def test_fp_converges_from_a_nontrivial_start():
    env = make_beach_bar(n=5, T=3)
    res = solve("fictitious_play", env, SolveSettings(max_iter=200))
    assert res.exploitabilities[-1] < 0.05 * res.exploitabilities[0]


def test_fixed_point_iteration_oscillates_on_left_right(left_right):
    expl = [exploitability(left_right, pi) for pi, _ in take(fictitious_play_iterates(left_right, alpha=1.0), 8)]
    assert expl[0] == 0.0
    assert expl[1:] == [1.0] * 7
    sides = [np.argmax(pi[0, 0]) for pi, _ in take(fictitious_play_iterates(left_right, alpha=1.0), 5)]
    assert sides[1:] == [0, 1, 0, 1]


@pytest.mark.parametrize("alpha", [None, 0.3])
def test_fp_averaging_is_convex(alpha):
    env = coupled_env(3, T=2)
    it = fictitious_play_iterates(env, alpha)
    prev_pi, prev_M = next(it)
    for n in range(10):
        pi, M = next(it)
        br, _ = best_response(env, induced_mean_field(env, prev_pi))
        L_br = induced_mean_field(env, br)
        lo, hi = np.minimum(prev_M, L_br), np.maximum(prev_M, L_br)
        assert np.all(M >= lo - 1e-15) and np.all(M <= hi + 1e-15)
        assert np.allclose(M.reshape(env.T + 1, -1).sum(axis=1), 1.0, atol=1e-12)
        prev_pi, prev_M = pi, M


def test_fp_rejects_bad_alpha(left_right):
    with pytest.raises(ValueError):
        next(fictitious_play_iterates(left_right, alpha=1.5))


# Online mirror descent


def test_omd_uniform_is_fixed_point_on_rps(rps):
    pis = take(mirror_descent_iterates(rps, alpha=1.0), 20)
    for pi in pis:
        np.testing.assert_array_equal(pi, uniform_policy(rps))
        assert abs(exploitability(rps, pi)) <= 1e-10


@given(arrays(np.float64, (3, 4, 5), elements=st.floats(-30, 30)), st.floats(-100, 100))
def test_softmax_shift_invariance_and_argmax(y, c):
    pi = softmax_rows(y, 2)
    np.testing.assert_allclose(softmax_rows(y + c, 2), pi, atol=1e-12)
    np.testing.assert_allclose(pi.sum(axis=2), 1.0, atol=1e-12)
    top2 = np.sort(y, axis=2)[..., -2:]
    clear = top2[..., 1] - top2[..., 0] > 1e-9
    np.testing.assert_array_equal(np.argmax(pi, axis=2)[clear], np.argmax(y, axis=2)[clear])


def test_omd_halves_exploitability_on_beach_bar():
    env = make_beach_bar(n=5, T=3)
    res = solve("online_mirror_descent", env, SolveSettings(max_iter=300), alpha=1.0)
    assert min(res.exploitabilities) <= 0.5 * res.exploitabilities[0]


def test_omd_multidimensional_spaces():
    env = coupled_env(2, T=2, S=(2, 2), A=(2, 2), coupling=0.2)
    res = solve("online_mirror_descent", env, SolveSettings(max_iter=50), alpha=0.5)
    assert res.policy.shape == env.policy_shape


# Prior descent


def test_prior_descent_uniform_fixed_point_on_rps(rps):
    for pi in take(prior_descent_iterates(rps, eta=0.7, n_inner=3), 20):
        np.testing.assert_allclose(pi, uniform_policy(rps), atol=1e-15)
        assert exploitability(rps, pi) <= 1e-10


def test_soft_best_response_large_eta_returns_prior():
    env = coupled_env(5, T=2)
    rng = np.random.default_rng(0)
    prior = random_policy(env, rng)
    pi = soft_best_response(env, random_flow(env, rng), prior, eta=1e6)
    assert np.max(np.abs(pi - prior)) <= 1e-6


def test_soft_best_response_small_eta_approaches_best_response():
    env = make_random_linear(seed=2, T=2, n_states=3, n_actions=3)
    flow = random_flow(env, np.random.default_rng(1))
    br, _ = best_response(env, flow)
    pi = soft_best_response(env, flow, uniform_policy(env), eta=1e-4)
    np.testing.assert_allclose(pi, br, atol=1e-6)


def test_soft_best_response_no_overflow():
    env = make_random_linear(seed=2, T=1, n_states=2, n_actions=3)
    flow = random_flow(env, np.random.default_rng(1))
    # |Q| / eta ~ 1e4
    pi = soft_best_response(env, flow, uniform_policy(env), eta=2e-4)
    assert np.all(np.isfinite(pi))
    np.testing.assert_allclose(pi.sum(axis=-1), 1.0, atol=1e-12)


def test_soft_best_response_respects_zero_prior():
    env = make_random_linear(seed=0, T=1, n_states=2, n_actions=3)
    prior = uniform_policy(env)
    prior[..., 2] = 0.0
    prior /= prior.sum(axis=-1, keepdims=True)
    pi = soft_best_response(env, random_flow(env, np.random.default_rng(0)), prior, eta=1.0)
    assert np.all(pi[..., 2] == 0.0)


# Shared contract


@pytest.mark.parametrize("alg", list(ALGORITHMS))
@pytest.mark.parametrize("seed", range(3))
def test_solver_records_satisfy_invariants(alg, seed):
    env = coupled_env(seed, coupling=0.3)
    res = solve(alg, env, SolveSettings(max_iter=30, atol=0, rtol=0, record_every=7))
    assert len(res.policies) == len(res.exploitabilities) == len(res.runtimes) == len(res.iterations)
    assert res.iterations[0] == 0
    assert res.iterations[-1] == res.iterations_run
    assert all(n % 7 == 0 for n in res.iterations[:-1])
    assert np.all(np.diff(res.runtimes) >= 0)
    assert min(res.exploitabilities) >= -1e-9
    for pi in res.policies:
        flat = pi.reshape(env.T + 1, env.n_states, env.n_actions)
        assert np.all(flat >= 0)
        np.testing.assert_allclose(flat.sum(axis=2), 1.0, atol=1e-9)
    if res.converged:
        assert check_stop(SolveSettings(atol=0, rtol=0), res.exploitabilities[0], res.exploitabilities[-1])
    else:
        assert res.iterations_run == 30


@pytest.mark.parametrize("alg", list(ALGORITHMS))
def test_solvers_are_deterministic(alg):
    env = make_beach_bar(n=4, T=2)
    a = solve(alg, env, SolveSettings(max_iter=15))
    b = solve(alg, env, SolveSettings(max_iter=15))
    assert a.exploitabilities == b.exploitabilities
    assert all(np.array_equal(x, y) for x, y in zip(a.policies, b.policies))


def test_result_unpacks_like_a_triple(left_right):
    solutions, expls, runtimes = solve("online_mirror_descent", left_right, SolveSettings(max_iter=3))
    assert len(solutions) == len(expls) == len(runtimes)


def test_stops_at_first_converged_iteration(left_right):
    res = solve("fictitious_play", left_right, SolveSettings(max_iter=50))
    assert res.converged and res.iterations_run == 0


def test_callback_sees_every_record(left_right):
    rows = []
    env = make_beach_bar(n=4, T=2)
    res = solve("online_mirror_descent", env, SolveSettings(max_iter=20, record_every=3), callback=lambda *r: rows.append(r))
    assert [r[0] for r in rows] == res.iterations
    assert all(r[2] == min(res.exploitabilities[: i + 1]) for i, r in enumerate(rows))


def test_non_finite_policy_raises():
    from meanfield.solvers import run

    env = make_random_linear(seed=0, T=1, n_states=2, n_actions=2)
    bad = uniform_policy(env)
    bad[0, 0, 0] = np.nan

    with pytest.raises(NumericalError, match="iteration 0"):
        run(env, iter([bad]), SolveSettings(max_iter=1))


def test_unknown_hyperparameter_rejected(left_right):
    with pytest.raises(TypeError):
        solve("mfomo", left_right, SolveSettings(max_iter=1), alpha=1.0)
