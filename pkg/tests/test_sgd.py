import numpy as np
import pytest
from sklearn.base import clone

from ddzo.core import NoisyValueOracle, ProblemSpec, make_rng
from ddzo.problems import linear, quadratic
from ddzo.sgd import ZOSGD, SGDConfig, run_sgd, smoothness_constant, variance_bound


def const_oracle(d):
    def f(X):
        return np.zeros(X.shape[0])

    f.vectorized = True
    return NoisyValueOracle(f, d, 0.0)


def test_constant_function():
    tr = run_sgd(SGDConfig(0.1, 3, 5, 0.1), const_oracle(2), make_rng(0))
    assert np.all(tr.x == 0) and np.all(tr.output == 0)


def test_query_count():
    o = NoisyValueOracle(quadratic([0.0, 0.0]), 2, 0.1)
    tr = run_sgd(SGDConfig(0.1, 2, 5, 0.01), o, make_rng(0))
    assert o.queries == 20 == tr.total_queries


@pytest.mark.parametrize("kind,per", [("coordinate_2pt", 6), ("gaussian_2pt", 2), ("plain_1pt", 1)])
def test_baseline_query_counts(kind, per):
    o = NoisyValueOracle(quadratic([0.0, 0.0, 0.0]), 3, 0.1)
    cfg = SGDConfig(0.1, 4, 7, 0.001, estimator=kind)
    run_sgd(cfg, o, make_rng(0))
    assert o.queries == per * 4 * 7 == cfg.expected_queries(3)


def test_coordinate_descent_is_exact_on_linear():
    a = np.array([1.0, -2.0])
    o = NoisyValueOracle(linear(a), 2, 0.0)
    tr = run_sgd(SGDConfig(0.5, 1, 10, 0.1, estimator="coordinate_2pt"), o, make_rng(0), x0=[1.0, 1.0])
    assert np.allclose(tr.x_final, np.array([1.0, 1.0]) - 10 * 0.1 * a, atol=1e-12)


def test_contraction_on_quadratic():
    # shifted problem so the start (1, 1) maps to a nonzero point
    f = quadratic([0.0, 0.0])
    spec = ProblemSpec(2, f.lipschitz, 0.0, 2.0)
    delta = 0.5
    eta = 1.0 / smoothness_constant(spec, delta)
    o = NoisyValueOracle(f, 2, 0.0)
    tr = run_sgd(SGDConfig(delta, 4, 50, eta, problem=spec), o, make_rng(1), x0=[1.0, 1.0])
    assert np.linalg.norm(tr.x_final) < np.linalg.norm([1.0, 1.0])


def test_step_size_cap():
    spec = ProblemSpec(2, 1.0, 0.0, 1.0)
    beta = smoothness_constant(spec, 0.5)
    assert beta == pytest.approx(np.sqrt(2) / 0.5)
    SGDConfig(0.5, 1, 1, 1.0 / beta, problem=spec)
    with pytest.raises(ValueError):
        SGDConfig(0.5, 1, 1, 1.01 / beta, problem=spec)


def test_variance_bound_arithmetic():
    spec = ProblemSpec(1, 1.0, 0.0, 0.0)
    assert variance_bound(spec, 1.0) == pytest.approx(16 * np.sqrt(2 * np.pi))


def test_trace_layout():
    o = NoisyValueOracle(quadratic([1.0, 0.0]), 2, 0.1)
    tr = run_sgd(SGDConfig(0.2, 2, 6, 0.05), o, make_rng(3), x0=[0.5, 0.5])
    assert np.allclose(tr.y[1:], tr.x[:-1])
    assert np.allclose(tr.x, tr.y + tr.step)
    assert np.array_equal(tr.output, tr.y[tr.k_out - 1])


def test_invalid_config():
    with pytest.raises(ValueError):
        SGDConfig(0.1, 1, 1, 0.1, estimator="bogus")
    with pytest.raises(ValueError):
        SGDConfig(0.1, 0, 1, 0.1)


def test_estimator_api():
    est = ZOSGD(delta=0.2, batch_size=3, n_iter=4, eta=0.01, random_state=2)
    assert est.get_params()["batch_size"] == 3
    o = NoisyValueOracle(quadratic([0.0, 0.0]), 2, 0.1)
    fitted = clone(est).fit(o)
    assert fitted.n_queries_ == 24 and fitted.x_.shape == (2,)
