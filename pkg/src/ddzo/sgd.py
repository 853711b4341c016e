"""Mini-batch zeroth-order SGD on ``f_delta``, the comparison baseline.

The default estimator is the mini-batch two-point sphere estimator with
radius ``delta``. The harness also swaps in the textbook coordinate,
Gaussian and plain one-point estimators to form the ZO-CO / ZO-GA / ZO-OG
style baselines.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .core import (
    ProblemSpec,
    RandomSource,
    StochasticOracle,
    check_count,
    check_positive,
    check_vector,
    make_rng,
)
from .estimators import BASELINE_KINDS, baseline_estimator, baseline_queries, minibatch_two_point
from .o2nc import NonFiniteRunError, RunTrace


def smoothness_constant(spec: ProblemSpec, delta: float) -> float:
    """``beta_delta = c sqrt(d) L / delta``."""
    return spec.smoothing_constant * np.sqrt(spec.dim) * spec.lipschitz / delta


def variance_bound(spec: ProblemSpec, delta: float) -> float:
    """``V_delta = d^2 sigma^2 / (2 delta^2) + 16 sqrt(2 pi) d L^2``."""
    d, s, L = spec.dim, spec.noise_bound, spec.lipschitz
    return d**2 * s**2 / (2 * delta**2) + 16 * np.sqrt(2 * np.pi) * d * L**2


@dataclass(frozen=True)
class SGDConfig:
    delta: float
    batch: int
    iterations: int
    eta: float
    estimator: str = "sphere_2pt"
    mu: Optional[float] = None
    problem: Optional[ProblemSpec] = None

    def __post_init__(self):
        check_positive(self.delta, "delta")
        check_count(self.batch, "batch")
        check_count(self.iterations, "iterations")
        check_positive(self.eta, "eta")
        if self.estimator not in BASELINE_KINDS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.mu is not None:
            check_positive(self.mu, "mu")
        if self.problem is not None:
            beta = smoothness_constant(self.problem, self.delta)
            if self.eta > 1.0 / beta * (1 + 1e-12):
                raise ValueError(f"eta={self.eta} exceeds 1/beta_delta={1.0 / beta}")

    @property
    def radius(self) -> float:
        return self.delta if self.mu is None else self.mu

    def queries_per_iter(self, dim: int) -> int:
        return baseline_queries(self.estimator, dim) * self.batch

    def expected_queries(self, dim: int) -> int:
        return self.queries_per_iter(dim) * self.iterations


@np.errstate(over="ignore", invalid="ignore")  # non-finite values raise below
def run_sgd(cfg: SGDConfig, oracle: StochasticOracle, rng: RandomSource, x0=None, record_x: bool = True) -> RunTrace:
    """``x_{t+1} = x_t - eta g_t`` for ``t = 0..T-1``; returns ``x_{t_out}``
    with ``t_out`` uniform on ``{0..T-1}``. Default cost is ``2 B T`` queries."""
    d = oracle.dim
    x = np.zeros(d) if x0 is None else check_vector(x0, d, "x0")
    x0 = x.copy()
    T = cfg.iterations
    ys = np.empty((T, d))
    gs = np.empty((T, d))
    steps = np.empty((T, d))
    xs = np.empty((T, d)) if record_x else None
    queries = np.empty(T, dtype=np.int64)
    start = oracle.queries
    for t in range(T):
        if cfg.estimator == "sphere_2pt" and cfg.mu is None:
            est = minibatch_two_point(x, cfg.delta, cfg.batch, oracle, rng)
        else:
            est = baseline_estimator(cfg.estimator, x, cfg.radius, oracle, rng, cfg.batch)
        step = -cfg.eta * est.g
        if not np.isfinite(step).all():
            raise NonFiniteRunError(
                f"non-finite update at t={t}", t, {"y": ys[:t].copy(), "y_t": x, "g_t": est.g}
            )
        ys[t], gs[t], steps[t] = x, est.g, step
        x = x + step
        queries[t] = oracle.queries - start
        if xs is not None:
            xs[t] = x
    t_out = int(rng.integers(0, T))
    return RunTrace(
        y=ys, step=steps, s=np.zeros(T), g=gs, queries=queries, x=xs, x0=x0,
        x_final=x, block_len=1, n_blocks=T, k_out=t_out + 1, output=ys[t_out].copy(),
        method=f"sgd_{cfg.estimator}",
        meta={"delta": cfg.delta, "radius": cfg.radius, "eta": cfg.eta, "batch": cfg.batch},
    )


class ZOSGD(BaseEstimator):
    """Estimator-style wrapper around :func:`run_sgd`."""

    def __init__(self, delta=0.1, batch_size=1, n_iter=100, eta=1e-2, estimator="sphere_2pt",
                 mu=None, x0=None, random_state=0, record_x=True):
        self.delta = delta
        self.batch_size = batch_size
        self.n_iter = n_iter
        self.eta = eta
        self.estimator = estimator
        self.mu = mu
        self.x0 = x0
        self.random_state = random_state
        self.record_x = record_x

    def fit(self, oracle: StochasticOracle, y=None):
        cfg = SGDConfig(self.delta, self.batch_size, self.n_iter, self.eta, self.estimator, self.mu)
        before = oracle.queries
        self.trace_ = run_sgd(cfg, oracle, make_rng(self.random_state), self.x0, self.record_x)
        self.output_ = self.trace_.output
        self.x_ = self.trace_.x_final
        self.n_queries_ = oracle.queries - before
        return self
