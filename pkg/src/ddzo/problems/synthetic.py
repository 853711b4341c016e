"""Test functions with known constants, wrapped as stochastic oracles."""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from ..core import NoisyValueOracle, StochasticOracle, check_positive, check_vector, make_rng

KINDS = ("linear", "norm", "quadratic", "abs_sum", "performative_quadratic")


class TestFunction:
    """Deterministic ``f: R^d -> R`` evaluated row-wise, with its constants.

    ``lipschitz`` is global unless ``domain_radius`` is set, in which case it
    holds on the ball of that radius around the origin. ``smoothed_grad``
    gives ``grad f_delta`` in closed form when known.
    """

    __test__ = False  # keep pytest from collecting this class
    vectorized = True

    def __init__(self, name: str, fn: Callable, dim: int, lipschitz: float, *,
                 grad_lipschitz=None, hess_lipschitz=None, grad=None, smoothed_grad=None,
                 minimizer=None, domain_radius=None, params=None):
        self.name = name
        self._fn = fn
        self.dim = dim
        self.lipschitz = lipschitz
        self.grad_lipschitz = grad_lipschitz
        self.hess_lipschitz = hess_lipschitz
        self.grad = grad
        self._smoothed_grad = smoothed_grad
        self.minimizer = minimizer
        self.domain_radius = domain_radius
        self.params = params or {}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(self._fn(x[None, :])[0])
        return self._fn(x)

    def smoothed_grad(self, x, delta: float) -> Optional[np.ndarray]:
        if self._smoothed_grad is None:
            return None
        return self._smoothed_grad(np.asarray(x, dtype=float), delta)

    def __repr__(self):
        return f"TestFunction({self.name!r}, dim={self.dim}, L={self.lipschitz})"


def linear(a) -> TestFunction:
    a = check_vector(a, name="a")
    return TestFunction(
        "linear", lambda X: X @ a, a.size, float(np.linalg.norm(a)),
        grad=lambda x: a.copy(), smoothed_grad=lambda x, delta: a.copy(), params={"a": a},
    )


def norm(dim: int, scale: float = 1.0, center=None) -> TestFunction:
    """``scale * ||x - center||``."""
    c = np.zeros(dim) if center is None else check_vector(center, dim, "center")
    scale = check_positive(scale, "scale")
    return TestFunction(
        "norm", lambda X: scale * np.linalg.norm(X - c, axis=1), dim, scale,
        minimizer=c, params={"scale": scale, "center": c},
    )


def quadratic(center, radius: float = 10.0) -> TestFunction:
    """``||x - center||^2``; ``lipschitz`` holds on the ball of ``radius``."""
    c = check_vector(center, name="center")
    L = 2.0 * (radius + np.linalg.norm(c))
    return TestFunction(
        "quadratic", lambda X: np.sum((X - c) ** 2, axis=1), c.size, L,
        grad_lipschitz=2.0, grad=lambda x: 2 * (x - c),
        smoothed_grad=lambda x, delta: 2 * (x - c),
        minimizer=c, domain_radius=radius, params={"center": c},
    )


def abs_sum(dim: int) -> TestFunction:
    return TestFunction("abs_sum", lambda X: np.sum(np.abs(X), axis=1), dim, float(np.sqrt(dim)),
                        minimizer=np.zeros(dim))


class PerformativeQuadraticOracle(StochasticOracle):
    """``F(x; xi) = xi . x`` with ``xi ~ N(theta + eps A x, sigma^2 I)``."""

    def __init__(self, theta, eps: float, A, sigma: float):
        theta = check_vector(theta, name="theta")
        super().__init__(theta.size)
        self.theta = theta
        self.eps = float(eps)
        self.A = np.asarray(A, dtype=float)
        self.sigma = check_positive(sigma, "sigma", strict=False)

    def _draw(self, X, rng):
        mean = self.theta + self.eps * X @ self.A.T
        xi = mean + self.sigma * rng.standard_normal(X.shape)
        return np.sum(xi * X, axis=1)


def performative_quadratic(theta, eps: float = 0.25, A=None, radius: float = 10.0) -> TestFunction:
    """Expected objective ``theta . x + eps x^T A x`` of the performative sampler.

    Gradient ``theta + eps (A + A^T) x``; the stationary point solves
    ``eps (A + A^T) x = -theta``.
    """
    theta = check_vector(theta, name="theta")
    d = theta.size
    A = np.eye(d) if A is None else np.asarray(A, dtype=float)
    S = eps * (A + A.T)
    lg = float(np.linalg.norm(S, 2))
    try:
        x_star = np.linalg.solve(S, -theta)
    except np.linalg.LinAlgError:
        x_star = None
    return TestFunction(
        "performative_quadratic",
        lambda X: X @ theta + eps * np.einsum("ij,jk,ik->i", X, A, X),
        d, float(np.linalg.norm(theta) + lg * radius),
        grad_lipschitz=lg, grad=lambda x: theta + S @ x,
        smoothed_grad=lambda x, delta: theta + S @ x,
        minimizer=x_star, domain_radius=radius, params={"theta": theta, "eps": eps, "A": A},
    )


def synthetic_instance(kind: str, d: int = 2, seed: int = 0, sigma: float = 0.0, **params):
    """Return ``(TestFunction, oracle)`` for a catalogue entry.

    Unspecified parameters (``a``, ``center``, ``theta``) are drawn from a
    generator seeded with ``seed``. ``sigma`` is the additive noise level or,
    for the performative quadratic, the sampler's standard deviation.
    """
    rng = make_rng(seed)
    if kind == "linear":
        f = linear(params.get("a", rng.standard_normal(d)))
    elif kind == "norm":
        f = norm(d, params.get("scale", 1.0), params.get("center"))
    elif kind == "quadratic":
        f = quadratic(params.get("center", rng.standard_normal(d)), params.get("radius", 10.0))
    elif kind == "abs_sum":
        f = abs_sum(d)
    elif kind == "performative_quadratic":
        theta = params.get("theta", rng.standard_normal(d))
        eps = params.get("eps", 0.25)
        A = params.get("A")
        f = performative_quadratic(theta, eps, A, params.get("radius", 10.0))
        return f, PerformativeQuadraticOracle(f.params["theta"], eps, f.params["A"], sigma)
    else:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    return f, NoisyValueOracle(f, f.dim, sigma)
