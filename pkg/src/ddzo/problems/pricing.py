"""Multi-product pricing under multinomial-logit demand.

Each of ``m`` buyers picks one of ``n`` products or the outside option with
probabilities ``p_i ∝ exp(gamma_i (theta_i - x_i))`` and ``p_0 ∝ a0``. The
oracle returns negative profit ``-sum x_i xi_i + sum c_i(xi_i)`` for the
realised counts ``xi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from ..core import StochasticOracle, check_vector, make_rng


@dataclass
class PricingInstance:
    theta: np.ndarray
    rho: np.ndarray
    n_buyers: int = 120

    def __post_init__(self):
        self.theta = check_vector(self.theta, name="theta")
        self.rho = check_vector(self.rho, self.theta.size, "rho")
        if np.any(self.theta <= 0):
            raise ValueError("reference prices must be positive")

    @property
    def n(self) -> int:
        return self.theta.size

    @property
    def dim(self) -> int:
        return self.n

    @property
    def a0(self) -> float:
        return 0.1 * self.n

    @property
    def sensitivity(self) -> np.ndarray:
        return 2 * np.pi / (np.sqrt(6) * self.theta)

    @property
    def lower(self) -> float:
        return 0.5 * self.n_buyers / self.n

    @property
    def upper(self) -> float:
        return 1.5 * self.n_buyers / self.n

    @property
    def unit_cost(self) -> np.ndarray:
        return self.rho * self.theta

    @classmethod
    def synthetic(cls, seed: int = 0, n: int = 30, n_buyers: int = 120):
        """``theta ~ Unif[0.1, 0.9]``, ``rho ~ Unif[0.25, 0.5]``."""
        rng = make_rng(seed)
        theta = rng.uniform(0.1, 0.9, size=n)
        rho = rng.uniform(0.25, 0.5, size=n)
        return cls(theta, rho, n_buyers)

    @classmethod
    def from_theta(cls, theta, seed: int = 0, n_buyers: int = 120, rho=None):
        theta = check_vector(theta, name="theta")
        if rho is None:
            rho = make_rng(seed).uniform(0.25, 0.5, size=theta.size)
        return cls(theta, rho, n_buyers)


def mnl_choice_probs(x, inst: PricingInstance) -> np.ndarray:
    """Choice probabilities; index 0 is the outside option.

    Returns shape ``(n + 1,)`` or ``(N, n + 1)`` for a batch of price vectors.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    util = inst.sensitivity * (inst.theta - X)
    logits = np.concatenate([np.full((X.shape[0], 1), np.log(inst.a0)), util], axis=1)
    p = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
    # large logits leave the row sum ~1e-12 off, which multinomial rejects
    p /= p.sum(axis=1, keepdims=True)
    return p[0] if single else p


def production_cost(z, inst: PricingInstance) -> np.ndarray:
    """Per-product piecewise-linear cost; marginal ``2w``, ``w``, then ``3w``."""
    z = np.asarray(z, dtype=float)
    w, lo, hi = inst.unit_cost, inst.lower, inst.upper
    low = 2 * w * z
    mid = w * (z - lo) + 2 * w * lo
    high = 3 * w * (z - hi) + w * (hi - lo) + 2 * w * lo
    return np.where(z <= lo, low, np.where(z <= hi, mid, high))


def negative_profit(x, counts, inst: PricingInstance) -> np.ndarray:
    x = np.atleast_2d(x)
    counts = np.atleast_2d(counts)
    return -np.sum(x * counts, axis=1) + production_cost(counts, inst).sum(axis=1)


def expected_negative_profit(x, inst: PricingInstance) -> np.ndarray:
    """Exact ``f(x)`` using ``xi_i ~ Binomial(m, p_i)`` marginals."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    p = mnl_choice_probs(X, inst)[:, 1:]
    m = inst.n_buyers
    z = np.arange(m + 1)
    pmf = binom.pmf(z[None, None, :], m, p[:, :, None])
    cost_table = production_cost(np.broadcast_to(z[:, None], (m + 1, inst.n)), inst).T
    exp_cost = np.sum(pmf * cost_table[None], axis=2).sum(axis=1)
    return -np.sum(X * m * p, axis=1) + exp_cost


class PricingOracle(StochasticOracle):
    def __init__(self, inst: PricingInstance):
        super().__init__(inst.n)
        self.inst = inst

    def _draw(self, X, rng):
        p = mnl_choice_probs(X, self.inst)
        counts = rng.multinomial(self.inst.n_buyers, p)[:, 1:]
        return negative_profit(X, counts, self.inst)


def pricing_oracle(inst: PricingInstance) -> PricingOracle:
    return PricingOracle(inst)
