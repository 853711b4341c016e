import numpy as np
import pytest

from ddzo.core import NoisyValueOracle, make_rng
from ddzo.estimators import (
    BASELINE_KINDS,
    ResidualState,
    baseline_estimator,
    baseline_many,
    baseline_queries,
    init_residual_state,
    minibatch_two_point,
    minibatch_two_point_many,
    one_point_residual,
    one_point_residual_many,
    one_point_second_moment_bound,
    two_point,
    two_point_many,
    two_point_second_moment_bound,
)
from ddzo.problems import linear, norm
from ddzo.smoothing import SmoothingParams, mc_smoothed_gradient, sample_sphere


def const_oracle(d, sigma=0.0, value=2.5):
    def f(X):
        return np.full(X.shape[0], value)

    f.vectorized = True
    return NoisyValueOracle(f, d, sigma)


def lin_oracle(a, sigma=0.0):
    f = linear(a)
    return f, NoisyValueOracle(f, f.dim, sigma)


def test_two_point_constant_is_zero():
    est = two_point(np.zeros(3), 0.1, const_oracle(3), make_rng(0))
    assert np.all(est.g == 0.0)
    assert est.queries_used == 2


def test_two_point_formula_on_linear():
    a = np.array([1.0, -2.0, 0.5])
    _, o = lin_oracle(a)
    est = two_point(np.ones(3), 0.3, o, make_rng(11))
    u = sample_sphere(3, make_rng(11), 1)[0]
    expected = 3 * (a @ u) * u
    assert np.allclose(est.g, expected, rtol=1e-12, atol=1e-12)
    assert np.array_equal(est.direction, u)


def test_two_point_mean_on_linear():
    a = np.array([1.0, 2.0])
    _, o = lin_oracle(a)
    g = two_point_many(np.zeros(2), 0.5, o, make_rng(1), 10**6)
    se = g.std(axis=0, ddof=1) / np.sqrt(g.shape[0])
    assert np.all(np.abs(g.mean(axis=0) - a) < 4 * se)
    assert o.queries == 2 * 10**6


def test_two_point_matches_mc_gradient_on_norm():
    f = norm(2)
    o = NoisyValueOracle(f, 2, 0.05)
    y = np.array([1.0, 0.0])
    g = two_point_many(y, 0.1, o, make_rng(2), 10**6)
    ref, ref_se = mc_smoothed_gradient(f, y, SmoothingParams(0.1, 10**6), make_rng(3), return_stderr=True)
    se = g.std(axis=0, ddof=1) / np.sqrt(g.shape[0])
    assert np.all(np.abs(g.mean(axis=0) - ref) < 4 * np.sqrt(se**2 + ref_se**2))


def test_minibatch_constant_and_queries():
    est = minibatch_two_point(np.zeros(2), 0.2, 5, const_oracle(2), make_rng(0))
    assert np.all(est.g == 0.0) and est.queries_used == 10


def test_minibatch_b1_matches_two_point():
    _, o1 = lin_oracle([1.0, -1.0], sigma=0.3)
    _, o2 = lin_oracle([1.0, -1.0], sigma=0.3)
    a = minibatch_two_point(np.ones(2), 0.2, 1, o1, make_rng(4)).g
    b = two_point(np.ones(2), 0.2, o2, make_rng(4)).g
    assert np.array_equal(a, b)


def test_minibatch_variance_reduction():
    _, o = lin_oracle([1.0, 0.5, -0.5, 2.0], sigma=1.0)
    x = np.zeros(4)
    v1 = minibatch_two_point_many(x, 0.5, 1, o, make_rng(5), 10**4).var(axis=0).sum()
    v16 = minibatch_two_point_many(x, 0.5, 16, o, make_rng(6), 10**4).var(axis=0).sum()
    assert 0.7 <= (v16 * 16) / v1 <= 1.4


def test_residual_requires_init():
    with pytest.raises(RuntimeError):
        one_point_residual(np.zeros(1), 1.0, const_oracle(1), ResidualState(), make_rng(0))


def test_residual_constant_is_zero():
    o = const_oracle(2)
    rng = make_rng(0)
    st = init_residual_state(np.zeros(2), 0.1, o, rng)
    for _ in range(5):
        est = one_point_residual(np.zeros(2), 0.1, o, st, rng)
        assert np.all(est.g == 0.0)
    assert o.queries == 6


def test_residual_arithmetic():
    _, o = lin_oracle([1.0])
    st = ResidualState(prev_value=0.3)
    # find a seed whose direction is +1
    seed = next(s for s in range(100) if sample_sphere(1, make_rng(s))[0] > 0)
    est = one_point_residual(np.zeros(1), 1.0, o, st, make_rng(seed))
    assert est.g[0] == pytest.approx(0.7, abs=1e-15)
    assert st.prev_value == est.carried_feedback == 1.0
    assert est.queries_used == 1


def test_residual_mean_on_linear():
    a = np.array([0.5, -1.0])
    _, o = lin_oracle(a)
    y = np.array([0.2, 0.1])
    g = one_point_residual_many(y, y, 0.5, o, make_rng(7), 10**6)
    se = g.std(axis=0, ddof=1) / np.sqrt(g.shape[0])
    assert np.all(np.abs(g.mean(axis=0) - a) < 4 * se)


def test_coordinate_exact_on_linear():
    a = np.array([1.0, -3.0, 2.0])
    _, o = lin_oracle(a)
    for mu in (1e-3, 1.0, 10.0):
        est = baseline_estimator("coordinate_2pt", np.ones(3), mu, o, make_rng(0))
        assert np.allclose(est.g, a, atol=1e-10)
        assert est.queries_used == 6


def test_gaussian_constant_is_zero():
    est = baseline_estimator("gaussian_2pt", np.zeros(3), 0.5, const_oracle(3), make_rng(0), batch=4)
    assert np.all(est.g == 0.0) and est.queries_used == 8


def test_plain_one_point_unbiased_but_noisier():
    a = np.array([1.0, 2.0])
    _, o = lin_oracle(a)
    g1 = baseline_many("plain_1pt", np.zeros(2), 1.0, o, make_rng(8), 10**6)
    se = g1.std(axis=0, ddof=1) / np.sqrt(g1.shape[0])
    assert np.all(np.abs(g1.mean(axis=0) - a) < 4 * se)
    # at matched x, delta = mu: the one-point estimator carries the f(x) u term
    x = np.array([3.0, 3.0])
    _, o2 = lin_oracle(a)
    g2 = two_point_many(x, 1.0, o2, make_rng(9), 10**5)
    _, o3 = lin_oracle(a)
    g3 = baseline_many("plain_1pt", x, 1.0, o3, make_rng(10), 10**5)
    assert np.mean(np.sum(g3**2, axis=1)) > np.mean(np.sum(g2**2, axis=1))


def test_baseline_queries():
    assert [baseline_queries(k, 5) for k in BASELINE_KINDS] == [10, 2, 2, 1]
    with pytest.raises(ValueError):
        baseline_queries("nope", 2)


def test_moment_bounds_arithmetic():
    # d=2, sigma=1, delta=1, L=1: 4/2 + 32 sqrt(2 pi)
    assert two_point_second_moment_bound(2, 1.0, 1.0, 1.0) == pytest.approx(2 + 32 * 2.5066282746310002)
    assert one_point_second_moment_bound(1, 0.0, 1.0, 1.0, drift_sq=1.0) == pytest.approx(
        144 * 2.5066282746310002 + 6)
