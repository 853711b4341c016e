"""Zeroth-order online-to-non-convex conversion (ZO-O2NC).

Projected online gradient descent runs on the displacement ``Delta`` inside
a ball of radius ``D = delta / M``; ``Delta`` is reset at the start of each
block of ``M`` steps and the gradient of ``f_delta`` is queried at a random
point ``y_t`` on the latest segment. The output is the mean of ``y_t`` over a
uniformly chosen block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator

from .core import (
    RandomSource,
    StochasticOracle,
    check_count,
    check_positive,
    check_vector,
    make_rng,
)
from .estimators import init_residual_state, one_point_residual, two_point
from .smoothing import SmoothingParams, mc_smoothed_gradient


class NonFiniteRunError(FloatingPointError):
    """A gradient estimate or update became non-finite; ``trace`` holds the
    completed iterations and the offending values."""

    def __init__(self, message: str, t: int, trace=None):
        super().__init__(message)
        self.t = t
        self.trace = trace


@dataclass(frozen=True)
class O2NCConfig:
    delta: float
    block_len: int
    n_blocks: int
    eta: float
    option: str = "I"

    def __post_init__(self):
        check_positive(self.delta, "delta")
        check_count(self.block_len, "block_len")
        check_count(self.n_blocks, "n_blocks")
        check_positive(self.eta, "eta")
        if self.option not in ("I", "II"):
            raise ValueError(f"option must be 'I' or 'II', got {self.option!r}")

    @property
    def radius(self) -> float:
        """Inner radius ``D = delta / M``."""
        return self.delta / self.block_len

    @property
    def horizon(self) -> int:
        return self.n_blocks * self.block_len

    @property
    def expected_queries(self) -> int:
        return 2 * self.horizon if self.option == "I" else self.horizon + 1


@dataclass
class RunTrace:
    """Per-iteration record of a run; row ``i`` holds iteration ``t = i + 1``.

    ``step`` is the displacement applied at that iteration, so
    ``x[i] = x[i-1] + step[i]``. For SGD runs ``block_len`` is 1, ``y`` holds
    the iterates at which gradients were estimated and ``k_out`` indexes the
    returned iterate.
    """

    y: np.ndarray
    step: np.ndarray
    s: np.ndarray
    g: np.ndarray
    queries: np.ndarray
    x: Optional[np.ndarray]
    x0: np.ndarray
    x_final: np.ndarray
    block_len: int
    n_blocks: int
    k_out: int
    output: np.ndarray
    method: str = "o2nc"
    meta: dict = field(default_factory=dict)

    @property
    def n_iter(self) -> int:
        return self.y.shape[0]

    @property
    def total_queries(self) -> int:
        return int(self.queries[-1]) if self.queries.size else 0

    @property
    def block_means(self) -> np.ndarray:
        return self.y.reshape(self.n_blocks, self.block_len, -1).mean(axis=1)

    def block_points(self, k: Optional[int] = None) -> np.ndarray:
        """``y_t`` for block ``k`` (1-based; defaults to ``k_out``)."""
        k = self.k_out if k is None else k
        lo = (k - 1) * self.block_len
        return self.y[lo : lo + self.block_len]


def project_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto the centred ball of the given radius."""
    v = np.asarray(v, dtype=float)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    nrm = math.sqrt(float(v @ v))
    if nrm <= radius:
        return v
    out = v * (radius / nrm)
    # rounding can leave the scaled vector a few ulps outside
    while math.sqrt(float(out @ out)) > radius:
        out = out * (1.0 - 2.0**-52)
    return out


@np.errstate(over="ignore", invalid="ignore")  # non-finite values raise below
def run_o2nc(
    cfg: O2NCConfig,
    oracle: StochasticOracle,
    rng: RandomSource,
    x0=None,
    record_x: bool = True,
) -> RunTrace:
    """Run ZO-O2NC with the two-point (Option I) or one-point residual
    (Option II) estimator.

    Option II spends one initialisation query at ``y_0 = x_0`` and then one
    query per iteration; its feedback value is carried across block
    boundaries. Oracle calls total ``2T`` (I) or ``T + 1`` (II).
    """
    d = oracle.dim
    x0 = np.zeros(d) if x0 is None else check_vector(x0, d, "x0")
    M, K, T = cfg.block_len, cfg.n_blocks, cfg.horizon
    D, eta, delta = cfg.radius, cfg.eta, cfg.delta

    ys = np.empty((T, d))
    steps = np.empty((T, d))
    gs = np.empty((T, d))
    s_all = np.empty(T)
    queries = np.empty(T, dtype=np.int64)
    xs = np.empty((T, d)) if record_x else None

    start = oracle.queries
    state = init_residual_state(x0, delta, oracle, rng) if cfg.option == "II" else None

    x_prev = x0.copy()
    step = np.zeros(d)
    t = 0
    for _k in range(K):
        step = np.zeros(d)
        for _m in range(M):
            s = rng.random()
            y = x_prev + s * step
            x_cur = x_prev + step
            if cfg.option == "I":
                est = two_point(y, delta, oracle, rng)
            else:
                est = one_point_residual(y, delta, oracle, state, rng)
            g = est.g
            if not np.isfinite(g).all():
                raise NonFiniteRunError(
                    f"non-finite gradient estimate at t={t + 1}", t + 1,
                    {"y": ys[:t].copy(), "g": gs[:t].copy(), "y_t": y, "g_t": g},
                )
            ys[t], steps[t], gs[t], s_all[t] = y, step, g, s
            queries[t] = oracle.queries - start
            if xs is not None:
                xs[t] = x_cur
            step = project_ball(step - eta * g, D)
            x_prev = x_cur
            t += 1

    k_out = int(rng.integers(1, K + 1))
    trace = RunTrace(
        y=ys, step=steps, s=s_all, g=gs, queries=queries, x=xs, x0=x0,
        x_final=x_prev.copy(), block_len=M, n_blocks=K, k_out=k_out, output=np.empty(d),
        method=f"o2nc_opt{cfg.option}",
        meta={"delta": delta, "radius": D, "eta": eta, "option": cfg.option},
    )
    trace.output = trace.block_points().mean(axis=0)
    return trace


def goldstein_certificate(
    trace: RunTrace,
    f: Callable,
    params: SmoothingParams,
    rng: RandomSource,
    k: Optional[int] = None,
) -> float:
    """``|| (1/M) sum_t grad f_delta(y_t) ||`` over the output block.

    Each smoothed gradient is a Monte-Carlo estimate; the norm upper-bounds
    the distance from zero to the Goldstein subdifferential at the block mean
    (radius ``2 delta``, or ``delta`` when ``params.delta`` is half the block
    spread bound).
    """
    pts = trace.block_points(k)
    grads = [mc_smoothed_gradient(f, y, params, rng) for y in pts]
    return float(np.linalg.norm(np.mean(grads, axis=0)))


class ZOO2NC(BaseEstimator):
    """Estimator-style wrapper around :func:`run_o2nc`.

    ``fit(oracle)`` runs the method and stores ``trace_``, the returned block
    mean ``output_``, the last iterate ``x_`` and ``n_queries_``.
    """

    def __init__(self, delta=0.1, block_len=10, n_blocks=10, eta=1e-3, option="I",
                 x0=None, random_state=0, record_x=True):
        self.delta = delta
        self.block_len = block_len
        self.n_blocks = n_blocks
        self.eta = eta
        self.option = option
        self.x0 = x0
        self.random_state = random_state
        self.record_x = record_x

    def fit(self, oracle: StochasticOracle, y=None):
        cfg = O2NCConfig(self.delta, self.block_len, self.n_blocks, self.eta, self.option)
        before = oracle.queries
        self.trace_ = run_o2nc(cfg, oracle, make_rng(self.random_state), self.x0, self.record_x)
        self.output_ = self.trace_.output
        self.x_ = self.trace_.x_final
        self.n_queries_ = oracle.queries - before
        return self

    @classmethod
    def from_schedule(cls, schedule, **kwargs):
        return cls(delta=schedule.delta, block_len=schedule.block_len,
                   n_blocks=schedule.n_blocks, eta=schedule.eta, option=schedule.option, **kwargs)
