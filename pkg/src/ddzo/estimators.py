"""Zeroth-order gradient estimators of ``grad f_delta``.

Every estimator comes in two forms: a single-call function returning a
:class:`GradientEstimate` (what the optimisers use) and a ``*_many`` variant
drawing ``n`` independent estimates at once (what the Monte-Carlo checks use).
The single-call form is the ``n = 1`` case of the batched one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import RandomSource, StochasticOracle, check_count, check_positive, check_vector
from .smoothing import sample_sphere

BASELINE_KINDS = ("coordinate_2pt", "gaussian_2pt", "sphere_2pt", "plain_1pt")


@dataclass
class GradientEstimate:
    g: np.ndarray
    queries_used: int
    direction: np.ndarray
    carried_feedback: Optional[float] = None


@dataclass
class ResidualState:
    """Feedback value ``h_{t-1} = F(y_{t-1} + delta u_{t-1}; xi_{t-1})``."""

    prev_value: Optional[float] = None

    @property
    def initialized(self) -> bool:
        return self.prev_value is not None


# -- two-point ---------------------------------------------------------------

def _two_point_from(y, delta, oracle, rng, u):
    """Estimates for each row of ``u``; ``2 len(u)`` fresh, independent queries."""
    n, d = u.shape
    pts = np.concatenate([y + delta * u, y - delta * u])
    vals = oracle.sample_many(pts, rng)
    diff = vals[:n] - vals[n:]
    return (d / (2.0 * delta)) * diff[:, None] * u


def two_point_many(y, delta: float, oracle: StochasticOracle, rng: RandomSource, n: int) -> np.ndarray:
    y = check_vector(y, oracle.dim, "y")
    check_positive(delta, "delta")
    u = sample_sphere(y.size, rng, n)
    return _two_point_from(y, delta, oracle, rng, u)


def two_point(y, delta: float, oracle: StochasticOracle, rng: RandomSource) -> GradientEstimate:
    """``(d / 2 delta) (F(y + delta u; xi+) - F(y - delta u; xi-)) u``.

    ``xi+`` and ``xi-`` are separate draws from the laws at the two query
    points; a shared sample is not available under decision dependence.
    """
    y = check_vector(y, oracle.dim, "y")
    check_positive(delta, "delta")
    u = sample_sphere(y.size, rng, 1)
    g = _two_point_from(y, delta, oracle, rng, u)[0]
    return GradientEstimate(g=g, queries_used=2, direction=u[0])


def minibatch_two_point(x, delta: float, batch: int, oracle: StochasticOracle, rng: RandomSource) -> GradientEstimate:
    """Average of ``batch`` independent two-point estimates at ``x``."""
    batch = check_count(batch, "batch")
    x = check_vector(x, oracle.dim, "x")
    check_positive(delta, "delta")
    u = sample_sphere(x.size, rng, batch)
    g = _two_point_from(x, delta, oracle, rng, u).mean(axis=0)
    return GradientEstimate(g=g, queries_used=2 * batch, direction=u[0])


def minibatch_two_point_many(x, delta, batch, oracle, rng, n) -> np.ndarray:
    batch = check_count(batch, "batch")
    x = check_vector(x, oracle.dim, "x")
    u = sample_sphere(x.size, rng, n * batch)
    g = _two_point_from(x, delta, oracle, rng, u)
    return g.reshape(n, batch, -1).mean(axis=1)


# -- one-point residual ------------------------------------------------------

def init_residual_state(y0, delta: float, oracle: StochasticOracle, rng: RandomSource) -> ResidualState:
    """Single initialisation query ``h_0 = F(y0 + delta u0; xi0)``."""
    y0 = check_vector(y0, oracle.dim, "y0")
    u0 = sample_sphere(y0.size, rng)
    return ResidualState(prev_value=oracle.sample(y0 + delta * u0, rng))


def one_point_residual(
    y, delta: float, oracle: StochasticOracle, state: ResidualState, rng: RandomSource
) -> GradientEstimate:
    """``(d / delta) (F(y + delta u; xi) - h_prev) u``; updates ``state`` in place."""
    if not state.initialized:
        raise RuntimeError("residual state used before its initialisation query")
    y = check_vector(y, oracle.dim, "y")
    check_positive(delta, "delta")
    u = sample_sphere(y.size, rng)
    h = oracle.sample(y + delta * u, rng)
    g = (y.size / delta) * (h - state.prev_value) * u
    state.prev_value = h
    return GradientEstimate(g=g, queries_used=1, direction=u, carried_feedback=h)


def one_point_residual_many(y, y_prev, delta, oracle, rng, n) -> np.ndarray:
    """``n`` independent estimates at ``y``, each with a fresh previous
    feedback queried at ``y_prev`` (so ``2n`` queries in total)."""
    y = check_vector(y, oracle.dim, "y")
    y_prev = check_vector(y_prev, oracle.dim, "y_prev")
    d = y.size
    u_prev = sample_sphere(d, rng, n)
    u = sample_sphere(d, rng, n)
    h_prev = oracle.sample_many(y_prev + delta * u_prev, rng)
    h = oracle.sample_many(y + delta * u, rng)
    return (d / delta) * (h - h_prev)[:, None] * u


# -- comparison baselines ----------------------------------------------------

def baseline_queries(kind: str, dim: int) -> int:
    """Oracle calls per single (batch 1) baseline estimate."""
    if kind == "coordinate_2pt":
        return 2 * dim
    if kind in ("gaussian_2pt", "sphere_2pt"):
        return 2
    if kind == "plain_1pt":
        return 1
    raise ValueError(f"unknown estimator kind {kind!r}; expected one of {BASELINE_KINDS}")


def baseline_many(kind: str, x, mu: float, oracle: StochasticOracle, rng: RandomSource, n: int) -> np.ndarray:
    x = check_vector(x, oracle.dim, "x")
    check_positive(mu, "mu")
    d = x.size
    if kind == "coordinate_2pt":
        eye = np.eye(d)
        pts = np.concatenate([np.tile(x + mu * eye, (n, 1)), np.tile(x - mu * eye, (n, 1))])
        vals = oracle.sample_many(pts, rng)
        half = n * d
        return ((vals[:half] - vals[half:]) / (2.0 * mu)).reshape(n, d)
    if kind == "gaussian_2pt":
        z = rng.standard_normal((n, d))
        vals = oracle.sample_many(np.concatenate([x + mu * z, x - mu * z]), rng)
        return ((vals[:n] - vals[n:]) / (2.0 * mu))[:, None] * z
    if kind == "sphere_2pt":
        u = sample_sphere(d, rng, n)
        return _two_point_from(x, mu, oracle, rng, u)
    if kind == "plain_1pt":
        u = sample_sphere(d, rng, n)
        vals = oracle.sample_many(x + mu * u, rng)
        return (d / mu) * vals[:, None] * u
    raise ValueError(f"unknown estimator kind {kind!r}; expected one of {BASELINE_KINDS}")


def baseline_estimator(
    kind: str, x, mu: float, oracle: StochasticOracle, rng: RandomSource, batch: int = 1
) -> GradientEstimate:
    """Textbook comparison estimators, averaged over ``batch`` draws.

    coordinate_2pt: central differences along each axis (2d queries);
    gaussian_2pt: ``(F(x + mu z) - F(x - mu z)) / (2 mu) z``;
    sphere_2pt: the two-point sphere estimator with radius ``mu``;
    plain_1pt: ``(d / mu) F(x + mu u) u``.
    """
    batch = check_count(batch, "batch")
    per = baseline_queries(kind, oracle.dim)
    g = baseline_many(kind, x, mu, oracle, rng, batch).mean(axis=0)
    return GradientEstimate(g=g, queries_used=per * batch, direction=np.zeros(oracle.dim))


# -- moment bounds -----------------------------------------------------------

def two_point_second_moment_bound(d: int, sigma: float, delta: float, lipschitz: float) -> float:
    return d**2 * sigma**2 / (2 * delta**2) + 16 * np.sqrt(2 * np.pi) * d * lipschitz**2


def one_point_second_moment_bound(d, sigma, delta, lipschitz, drift_sq: float = 0.0) -> float:
    """Bound with the drift term ``6 d^2 L^2 E||y_t - y_{t-1}||^2 / delta^2``."""
    return (
        6 * d**2 * sigma**2 / delta**2
        + 144 * np.sqrt(2 * np.pi) * d * lipschitz**2
        + 6 * d**2 * lipschitz**2 * drift_sq / delta**2
    )
