"""Foundational types: decision vectors, the stochastic oracle contract,
seeded randomness, query accounting and problem constants.

Every oracle evaluates rows of a 2-D array so that Monte-Carlo checks can be
vectorised; the scalar ``sample`` path goes through the same code.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

RandomSource = np.random.Generator


class OracleError(RuntimeError):
    """Raised when an oracle or a test function produces a non-finite value."""


def make_rng(seed: int) -> RandomSource:
    """Seeded PCG64 generator. Identical seeds give identical streams."""
    if isinstance(seed, np.random.Generator):
        return seed
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rng(seed: int, *tags: int) -> RandomSource:
    """Independent stream keyed by ``(seed, *tags)``.

    Used to derive evaluation / certificate streams that never perturb the
    optimisation stream of the same run.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, tags)])))


# -- validation helpers ------------------------------------------------------

def check_vector(x, dim: Optional[int] = None, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, optionally of length ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise ValueError(f"{name} has length {arr.size}, expected {dim}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_points(X, dim: Optional[int] = None, name: str = "X") -> np.ndarray:
    """Return ``X`` as a finite 2-D float array with ``dim`` columns."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"{name} has {arr.shape[1]} columns, expected {dim}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_positive(value, name: str, strict: bool = True) -> float:
    value = float(value)
    ok = value > 0 if strict else value >= 0
    if not (ok and np.isfinite(value)):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be finite and {bound}, got {value}")
    return value


def check_count(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or int(value) != value or int(value) < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def evaluate_rows(f: Callable, X: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on every row of ``X``.

    Functions flagged ``vectorized = True`` receive the whole array; anything
    else is called row by row. Non-finite results raise :class:`OracleError`.
    """
    X = np.atleast_2d(X)
    if getattr(f, "vectorized", False):
        vals = np.asarray(f(X), dtype=float).reshape(-1)
    else:
        vals = np.fromiter((f(row) for row in X), dtype=float, count=X.shape[0])
    if vals.shape[0] != X.shape[0]:
        raise ValueError("function returned the wrong number of values")
    if not np.isfinite(vals).all():
        raise OracleError("function returned a non-finite value")
    return vals


# -- oracle contract ---------------------------------------------------------

class QueryCounter:
    """Monotone count of oracle calls."""

    def __init__(self) -> None:
        self.total = 0

    def increment(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("query counter cannot decrease")
        self.total += int(n)

    def __repr__(self) -> str:
        return f"QueryCounter(total={self.total})"


class StochasticOracle:
    """Decision-dependent zeroth-order oracle ``F(x; xi)`` with ``xi ~ Xi(x)``.

    Subclasses implement :meth:`_draw`, which returns one independent
    realisation per row of ``X``. Each row counts as one query.
    """

    def __init__(self, dim: int) -> None:
        self.dim = check_count(dim, "dim")
        self.counter = QueryCounter()

    @property
    def queries(self) -> int:
        return self.counter.total

    def _draw(self, X: np.ndarray, rng: RandomSource) -> np.ndarray:
        raise NotImplementedError

    def sample(self, x, rng: RandomSource) -> float:
        return float(self.sample_many(np.asarray(x, dtype=float)[None, :], rng)[0])

    def sample_many(self, X, rng: RandomSource) -> np.ndarray:
        """One fresh draw at each row of ``X``; counts ``len(X)`` queries."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"oracle expects dimension {self.dim}, got {X.shape[1]}")
        vals = np.asarray(self._draw(X, rng), dtype=float)
        self.counter.increment(X.shape[0])
        if not np.isfinite(vals).all():
            raise OracleError("oracle returned a non-finite value")
        return vals

    def evaluate(self, x, rng: RandomSource, n_samples: int = 1000) -> float:
        """Monte-Carlo estimate of ``f(x)`` that does not touch the counter."""
        x = check_vector(x, self.dim)
        X = np.broadcast_to(x, (n_samples, self.dim))
        return float(np.mean(self._draw(X, rng)))


class NoisyValueOracle(StochasticOracle):
    """``F(x; z) = f(x) + sigma * z`` with ``z`` standard normal."""

    def __init__(self, f: Callable, dim: int, sigma: float) -> None:
        super().__init__(dim)
        self.f = f
        self.sigma = check_positive(sigma, "sigma", strict=False)

    def _draw(self, X, rng):
        vals = evaluate_rows(self.f, X)
        if self.sigma > 0:
            vals = vals + self.sigma * rng.standard_normal(X.shape[0])
        return vals


def noisy_value_oracle(f: Callable, sigma: float, dim: int) -> NoisyValueOracle:
    return NoisyValueOracle(f, dim, sigma)


@dataclass(frozen=True)
class ProblemSpec:
    """Known constants of a problem instance, consumed by the schedules.

    ``gap`` is ``f(x0) - f*``; it is supplied by the caller, never estimated.
    ``smoothing_constant`` is the universal constant in the smoothness of
    ``f_delta``; only the SGD baseline schedule uses it.
    """

    dim: int
    lipschitz: float
    noise_bound: float
    gap: float
    grad_lipschitz: Optional[float] = None
    hess_lipschitz: Optional[float] = None
    smoothing_constant: float = 1.0

    def __post_init__(self):
        check_count(self.dim, "dim")
        check_positive(self.lipschitz, "lipschitz")
        check_positive(self.noise_bound, "noise_bound", strict=False)
        check_positive(self.gap, "gap", strict=False)
        check_positive(self.smoothing_constant, "smoothing_constant")
        for name in ("grad_lipschitz", "hess_lipschitz"):
            value = getattr(self, name)
            if value is not None:
                check_positive(value, name)
