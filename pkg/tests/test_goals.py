import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_goal_distance
from riga.errors import NoReachableGoal
from riga.goals import (
    build_goal_path,
    eigenopt_unit_count,
    goal_distance,
    optgoal,
    strategy_one_goal,
    switch_select,
)
from riga.problem import GateSpec
from riga.unitary import complete_isometry, dag, eigphases, pth_root, random_isometry, random_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _instance(n, nbar, rng):
    e = random_isometry(n, nbar, rng)
    f = random_isometry(n, nbar, rng)
    spec = GateSpec(e, f)
    return spec, spec.goal(), random_unitary(n, rng)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, n=st.integers(2, 6), nbar=st.integers(1, 6))
def test_optgoal_constraint_and_unitarity(seed, n, nbar):
    rng = np.random.default_rng(seed)
    nbar = min(nbar, n)
    spec, x_goal, x_f = _instance(n, nbar, rng)
    x_star, phi = optgoal(x_goal, x_f, spec)
    assert np.linalg.norm(dag(x_star) @ x_star - np.eye(n)) < 1e-10
    assert np.linalg.norm(x_star @ spec.E - np.exp(1j * phi) * x_goal @ spec.E) < 1e-10


def test_optgoal_beats_brute_force(rng):
    spec, x_goal, x_f = _instance(4, 2, rng)
    x_star, _ = optgoal(x_goal, x_f, spec)
    e_hat = complete_isometry(spec.E)[:, 2:]
    oracle = brute_force_goal_distance(x_goal, x_f, spec.E, e_hat, rng)
    assert np.linalg.norm(x_star - x_f) <= oracle + 1e-6


def test_optgoal_without_phase(rng):
    spec, x_goal, x_f = _instance(4, 2, rng)
    x_star, phi = optgoal(x_goal, x_f, spec, allow_phase=False)
    assert phi == 0.0
    np.testing.assert_allclose(x_star @ spec.E, x_goal @ spec.E, atol=1e-12)
    with_phase, _ = optgoal(x_goal, x_f, spec)
    assert np.linalg.norm(with_phase - x_f) <= np.linalg.norm(x_star - x_f) + 1e-12


def test_optgoal_is_fixed_point_when_already_feasible(rng):
    spec, x_goal, _ = _instance(5, 2, rng)
    x_star, phi = optgoal(x_goal, x_goal, spec)
    assert abs(phi) < 1e-12
    np.testing.assert_allclose(x_star, x_goal, atol=1e-10)


def test_eigenopt_unit_count_lower_bound(rng):
    for _ in range(20):
        spec, x_goal, x_f = _instance(6, 2, rng)
        x_star, _ = optgoal(x_goal, x_f, spec)
        assert eigenopt_unit_count(x_star, x_f) >= 6 - 2 * 2


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(2, 6), theta=st.floats(0.05, np.pi))
def test_strategy_one_goal_saturates(seed, n, theta):
    rng = np.random.default_rng(seed)
    spec, x_goal, x_f = _instance(n, 1, rng)
    goal, clamped = strategy_one_goal(x_goal, x_f, spec, theta, return_flag=True)
    _, phases = eigphases(dag(x_f) @ goal)
    assert np.all(np.abs(phases) <= theta + 1e-9)
    if not clamped:
        x_star, _ = optgoal(x_goal, x_f, spec)
        np.testing.assert_allclose(goal, x_star, atol=1e-9)


def test_goal_distance_metrics(rng):
    spec, _, x = _instance(4, 4, rng)
    y = random_unitary(4, rng)
    assert goal_distance(x, x, spec) == 0.0
    assert goal_distance(x, x, spec, "full") == pytest.approx(0.0, abs=1e-12)
    assert goal_distance(x, y, spec, "full") > 0


@pytest.mark.parametrize("nbar,alpha", [(2, 0.3), (2, 0.05), (6, 0.4)])
def test_goal_path_spacing(rng, nbar, alpha):
    spec, x_goal, x_f0 = _instance(6, nbar, rng)
    x_star, _ = optgoal(x_goal, x_f0, spec)
    path = build_goal_path(x_f0, x_star, spec, alpha)
    assert path.beta == 2 * alpha
    np.testing.assert_allclose(path.matrices[0], x_f0)
    np.testing.assert_allclose(path.matrices[-1], x_star)
    for a, b in zip(path.matrices[:-1], path.matrices[1:]):
        assert goal_distance(a, b, spec, path.metric) <= alpha + 1e-9
    # p is minimal: with one segment fewer the step would exceed alpha
    if path.p > 1:
        step = pth_root(dag(x_f0) @ x_star, path.p - 1)
        assert goal_distance(step, np.eye(6), spec, path.metric) > alpha


def test_goal_path_rejects_bad_parameters(rng):
    spec, x_goal, x_f0 = _instance(3, 1, rng)
    with pytest.raises(ValueError):
        build_goal_path(x_f0, x_goal, spec, 0.0)
    with pytest.raises(ValueError):
        build_goal_path(x_f0, x_goal, spec, 0.5, beta=0.4)


def test_switch_select_monotone_and_raises(rng):
    spec, x_goal, x_f0 = _instance(4, 2, rng)
    x_star, _ = optgoal(x_goal, x_f0, spec)
    path = build_goal_path(x_f0, x_star, spec, 0.2)
    assert path.p >= 3
    # walk the endpoint along the path; the index never decreases
    for q in range(path.p + 1):
        got = switch_select(path, path.matrices[q], spec)
        assert got >= q
    assert path.history == sorted(path.history)
    assert path.q == path.p
    with pytest.raises(NoReachableGoal):
        switch_select(path, -x_star, spec)
