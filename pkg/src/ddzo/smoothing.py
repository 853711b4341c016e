"""Randomized smoothing over the unit ball.

``f_delta(x) = E_{u ~ Unif(B^d)} f(x + delta u)`` and its gradient
``(d / delta) E_{u ~ Unif(S^{d-1})} f(x + delta u) u`` are estimated by plain
Monte Carlo. Passing identical ``samples`` (or two generators built from the
same seed) gives common random numbers across paired evaluations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import RandomSource, check_count, check_positive, check_vector, evaluate_rows


@dataclass(frozen=True)
class SmoothingParams:
    delta: float
    mc_samples: int = 10_000

    def __post_init__(self):
        check_positive(self.delta, "delta")
        check_count(self.mc_samples, "mc_samples")


def sample_sphere(d: int, rng: RandomSource, size: Optional[int] = None) -> np.ndarray:
    """Uniform draw(s) on the unit sphere ``S^{d-1}``.

    Normalised Gaussians; an all-zero draw is redrawn. Returns shape ``(d,)``
    or ``(size, d)``.
    """
    d = check_count(d, "d")
    n = 1 if size is None else check_count(size, "size")
    z = rng.standard_normal((n, d))
    norms = np.linalg.norm(z, axis=1)
    bad = norms == 0.0
    while np.any(bad):
        z[bad] = rng.standard_normal((int(bad.sum()), d))
        norms[bad] = np.linalg.norm(z[bad], axis=1)
        bad = norms == 0.0
    u = z / norms[:, None]
    return u[0] if size is None else u


def sample_ball(d: int, rng: RandomSource, size: Optional[int] = None) -> np.ndarray:
    """Uniform draw(s) in the closed unit ball: sphere direction times ``U**(1/d)``."""
    n = 1 if size is None else size
    u = sample_sphere(d, rng, n)
    r = rng.random(n) ** (1.0 / d)
    out = u * r[:, None]
    return out[0] if size is None else out


def _smoothed_terms(f, x, delta, samples):
    return evaluate_rows(f, x[None, :] + delta * samples)


def mc_smoothed_value(
    f: Callable,
    x,
    params: SmoothingParams,
    rng: Optional[RandomSource] = None,
    *,
    samples: Optional[np.ndarray] = None,
    return_stderr: bool = False,
):
    """Monte-Carlo estimate of ``f_delta(x)`` from ``mc_samples`` ball draws."""
    x = check_vector(x)
    if samples is None:
        samples = sample_ball(x.size, rng, params.mc_samples)
    vals = _smoothed_terms(f, x, params.delta, samples)
    mean = float(vals.mean())
    if not return_stderr:
        return mean
    se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else float("inf")
    return mean, se


def mc_smoothed_gradient(
    f: Callable,
    x,
    params: SmoothingParams,
    rng: Optional[RandomSource] = None,
    *,
    samples: Optional[np.ndarray] = None,
    antithetic: bool = True,
    return_stderr: bool = False,
):
    """Monte-Carlo estimate of ``grad f_delta(x) = (d/delta) E[f(x + delta u) u]``.

    With ``antithetic=True`` each sphere draw ``u`` is paired with ``-u``,
    which is also uniform on the sphere; the estimator stays unbiased and the
    ``f(x) u`` component cancels exactly. ``mc_samples`` counts directions.
    """
    x = check_vector(x)
    d = x.size
    delta = params.delta
    if samples is None:
        samples = sample_sphere(d, rng, params.mc_samples)
    if antithetic:
        plus = _smoothed_terms(f, x, delta, samples)
        minus = _smoothed_terms(f, x, delta, -samples)
        terms = (d / (2.0 * delta)) * (plus - minus)[:, None] * samples
    else:
        terms = (d / delta) * _smoothed_terms(f, x, delta, samples)[:, None] * samples
    grad = terms.mean(axis=0)
    if not return_stderr:
        return grad
    n = terms.shape[0]
    se = terms.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.full(d, np.inf)
    return grad, se


def variance_on_sphere(h: Callable, d: int, n_samples: int, rng: RandomSource) -> float:
    """Unbiased sample variance of ``h(u)`` for ``u ~ Unif(S^{d-1})``.

    For a ``rho``-Lipschitz ``h`` the population value is at most
    ``16 sqrt(2 pi) rho^2 / d`` (see :func:`sphere_variance_bound`).
    """
    n_samples = check_count(n_samples, "n_samples", minimum=2)
    u = sample_sphere(d, rng, n_samples)
    vals = evaluate_rows(h, u)
    return float(np.var(vals, ddof=1))


def sphere_variance_bound(rho: float, d: int) -> float:
    return 16.0 * np.sqrt(2.0 * np.pi) * rho**2 / d
