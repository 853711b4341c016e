import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from ddzo.core import NoisyValueOracle, make_rng
from ddzo.o2nc import (
    ZOO2NC,
    NonFiniteRunError,
    O2NCConfig,
    goldstein_certificate,
    project_ball,
    run_o2nc,
)
from ddzo.problems import linear, norm, quadratic
from ddzo.schedules import schedule_theorem2
from ddzo.core import ProblemSpec
from ddzo.smoothing import SmoothingParams, mc_smoothed_gradient, sample_sphere

from .invariants import assert_trace_invariants


def const_oracle(d, sigma=0.0):
    def f(X):
        return np.zeros(X.shape[0])

    f.vectorized = True
    return NoisyValueOracle(f, d, sigma)


def test_project_examples():
    assert np.allclose(project_ball([2.0, 0.0], 1.0), [1.0, 0.0])
    v = np.array([0.3, -0.2])
    assert np.array_equal(project_ball(v, 1.0), v)
    assert np.array_equal(project_ball([3.0, 4.0], 5.0), [3.0, 4.0])
    assert np.allclose(project_ball([3.0, 4.0], 2.5), [1.5, 2.0])
    with pytest.raises(ValueError):
        project_ball([1.0], -1.0)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=6),
    st.floats(1e-8, 1e3),
)
def test_project_properties(v, r):
    v = np.array(v)
    p = project_ball(v, r)
    assert np.linalg.norm(p) <= r
    assert np.allclose(project_ball(p, r), p, rtol=1e-12, atol=1e-300)
    if np.linalg.norm(v) > r:
        assert p @ v >= 0


def test_config_derived():
    cfg = O2NCConfig(0.5, 5, 4, 0.01, "II")
    assert cfg.radius == 0.1 and cfg.horizon == 20 and cfg.expected_queries == 21
    with pytest.raises(ValueError):
        O2NCConfig(0.5, 5, 4, 0.01, "III")
    with pytest.raises(ValueError):
        O2NCConfig(0.0, 5, 4, 0.01)
    with pytest.raises(ValueError):
        O2NCConfig(0.5, 0, 4, 0.01)


def test_constant_function_fixed_point():
    tr = run_o2nc(O2NCConfig(0.1, 3, 4, 0.5), const_oracle(2), make_rng(0))
    assert np.all(tr.g == 0) and np.all(tr.step == 0) and np.all(tr.y == 0)
    assert np.all(tr.output == 0)


@pytest.mark.parametrize("option,expected", [("I", 12), ("II", 7)])
def test_query_counts(option, expected):
    o = NoisyValueOracle(norm(2), 2, 0.1)
    tr = run_o2nc(O2NCConfig(0.1, 3, 2, 0.01, option), o, make_rng(0))
    assert o.queries == expected == tr.total_queries


@pytest.mark.parametrize("option", ["I", "II"])
def test_trace_geometry(option):
    o = NoisyValueOracle(quadratic([1.0, -1.0, 0.5]), 3, 0.2)
    cfg = O2NCConfig(0.3, 7, 9, 0.05, option)
    tr = run_o2nc(cfg, o, make_rng(4), x0=[2.0, 0.0, 0.0])
    assert_trace_invariants(tr, cfg)
    M = cfg.block_len
    # displacement is reset at every block start
    assert np.all(tr.step[::M] == 0)
    x_prev = np.vstack([tr.x0, tr.x[:-1]])
    assert np.allclose(tr.y, x_prev + tr.s[:, None] * tr.step, atol=1e-14)
    assert np.allclose(tr.x, x_prev + tr.step, atol=1e-14)
    assert np.allclose(tr.output, tr.block_points().mean(axis=0))
    assert 1 <= tr.k_out <= cfg.n_blocks


def test_matches_hand_rolled_loop():
    # noiseless linear f, Option I: replay the random stream by hand
    a = np.array([0.7, -1.2])
    o = NoisyValueOracle(linear(a), 2, 0.0)
    delta, M, K, eta = 0.2, 4, 3, 0.3
    tr = run_o2nc(O2NCConfig(delta, M, K, eta), o, make_rng(21), x0=[1.0, 1.0])
    rng = make_rng(21)
    D = delta / M
    x = np.array([1.0, 1.0])
    ys = []
    for _ in range(K):
        step = np.zeros(2)
        for _ in range(M):
            s = rng.random()
            y = x + s * step
            u = rng.standard_normal((1, 2))[0]
            u /= np.linalg.norm(u)
            g = 2 / (2 * delta) * (a @ (y + delta * u) - a @ (y - delta * u)) * u
            ys.append(y)
            x = x + step
            nxt = step - eta * g
            n = np.linalg.norm(nxt)
            step = nxt if n <= D else nxt * D / n
    k = int(rng.integers(1, K + 1))
    assert np.allclose(tr.y, np.array(ys), atol=1e-12)
    assert np.allclose(tr.x_final, x, atol=1e-12)
    assert tr.k_out == k


def test_same_seed_same_trace():
    def go():
        o = NoisyValueOracle(norm(3), 3, 0.3)
        return run_o2nc(O2NCConfig(0.2, 5, 5, 0.01, "II"), o, make_rng(8))

    a, b = go(), go()
    assert np.array_equal(a.y, b.y) and np.array_equal(a.g, b.g) and a.k_out == b.k_out


def test_non_finite_gradient_aborts_with_trace():
    def wild(X):
        return np.where(X[:, 0] > 0, 1e308, -1e308)

    wild.vectorized = True
    o = NoisyValueOracle(wild, 1, 0.0)
    with pytest.raises(NonFiniteRunError) as info:
        run_o2nc(O2NCConfig(1e-3, 2, 2, 0.1), o, make_rng(0), x0=[0.0])
    assert info.value.t >= 1
    assert "y" in info.value.trace and "g_t" in info.value.trace


def test_certificate_linear():
    a = np.array([3.0, -4.0])
    o = NoisyValueOracle(linear(a), 2, 0.5)
    tr = run_o2nc(O2NCConfig(0.1, 4, 3, 0.01), o, make_rng(1))
    cert = goldstein_certificate(tr, linear(a), SmoothingParams(0.1, 20000), make_rng(2))
    assert cert == pytest.approx(5.0, rel=0.02)


def test_certificate_quadratic_and_symmetry():
    o = const_oracle(2)
    tr = run_o2nc(O2NCConfig(0.1, 4, 1, 0.01), o, make_rng(0))
    x0 = np.array([0.6, -0.8])
    tr.y[:] = x0
    f = quadratic([0.0, 0.0])
    assert goldstein_certificate(tr, f, SmoothingParams(0.1, 20000), make_rng(3)) == pytest.approx(2.0, rel=0.02)
    o1 = const_oracle(1)
    tr1 = run_o2nc(O2NCConfig(0.5, 2, 1, 0.01), o1, make_rng(0))
    tr1.y[:] = np.array([[0.2], [-0.2]])
    assert goldstein_certificate(tr1, norm(1), SmoothingParams(0.5, 20000), make_rng(4)) < 0.05
    tr1.y[:] = 0.0
    assert goldstein_certificate(tr1, norm(1), SmoothingParams(0.5, 20000), make_rng(5)) < 0.05


def test_certificate_decreases_on_norm():
    spec = ProblemSpec(2, 1.0, 0.1, 1.0)
    s = schedule_theorem2(spec, 0.1, 0.5)
    f = norm(2)
    x0 = np.array([1.0, 0.0])
    K = min(s.n_blocks, 20)
    tr = run_o2nc(O2NCConfig(s.delta, s.block_len, K, s.eta), NoisyValueOracle(f, 2, 0.1),
                  make_rng(0), x0=x0)
    params = SmoothingParams(s.delta, 2000)
    start = np.linalg.norm(mc_smoothed_gradient(f, x0, params, make_rng(1)))
    assert goldstein_certificate(tr, f, params, make_rng(2)) < start


def test_estimator_api():
    est = ZOO2NC(delta=0.2, block_len=5, n_blocks=4, eta=0.01, option="II", random_state=3)
    params = est.get_params()
    assert params["block_len"] == 5 and params["option"] == "II"
    est2 = clone(est).set_params(option="I")
    o = NoisyValueOracle(norm(2), 2, 0.1)
    est2.fit(o)
    assert est2.n_queries_ == 40
    assert est2.output_.shape == (2,) and est2.x_.shape == (2,)
    assert not hasattr(est, "trace_")


def test_estimator_from_schedule():
    s = schedule_theorem2(ProblemSpec(2, 1.0, 0.1, 1.0), 0.5, 4.0, "II")
    est = ZOO2NC.from_schedule(s, random_state=1)
    assert est.block_len == s.block_len and est.n_blocks == s.n_blocks and est.option == "II"
