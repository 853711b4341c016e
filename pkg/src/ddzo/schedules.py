"""Closed-form parameter schedules for ZO-O2NC and the SGD baseline.

Ceilings are taken exactly: float inputs are converted to ``Fraction`` and
the irrational parts (``sqrt(2 pi)``, ``sqrt(d)``) are handled either with
integer square roots or with 60-digit arithmetic on values that cannot be
integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import mpmath

from .core import ProblemSpec, check_count, check_positive

SQRT_2PI = math.sqrt(2 * math.pi)


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _ceil_frac(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def ceil_plus_sqrt2pi(a: Fraction, b: Fraction) -> int:
    """Exact ``ceil(a + b sqrt(2 pi))`` for rational ``a`` and ``b``."""
    if b == 0:
        return _ceil_frac(a)
    with mpmath.workdps(60):
        v = mpmath.mpf(a.numerator) / a.denominator + (
            mpmath.mpf(b.numerator) / b.denominator
        ) * mpmath.sqrt(2 * mpmath.pi)
        return int(mpmath.ceil(v))


def ceil_times_sqrt(r: Fraction, n: int) -> int:
    """Exact ``ceil(r sqrt(n))`` for rational ``r >= 0`` and integer ``n >= 0``."""
    if r < 0:
        raise ValueError("r must be non-negative")
    p, q = r.numerator, r.denominator
    big = p * p * n  # r sqrt(n) = sqrt(big) / q
    k = math.isqrt(big // (q * q))
    while k * k * q * q < big:
        k += 1
    while k > 0 and (k - 1) ** 2 * q * q >= big:
        k -= 1
    return k


@dataclass(frozen=True)
class Schedule:
    """Derived run parameters plus the bound constant used to get them.

    ``moment`` is ``G^2`` for O2NC and ``V_delta`` for SGD; ``step_cost``
    overrides the SGD per-iteration query count ``2 B``. ``theoretical_*``
    keep the unclamped values so clamping is always disclosed.
    """

    method: str
    delta: float
    eta: float
    epsilon: float
    horizon: int
    predicted_queries: int
    moment: float
    option: Optional[str] = None
    block_len: Optional[int] = None
    n_blocks: Optional[int] = None
    batch: Optional[int] = None
    step_cost: Optional[int] = None
    smoothness: Optional[float] = None
    theoretical_horizon: Optional[int] = None
    theoretical_queries: Optional[int] = None
    clamped: bool = False
    notes: dict = field(default_factory=dict)

    @property
    def radius(self) -> Optional[float]:
        return None if self.block_len is None else self.delta / self.block_len

    def queries_for(self, horizon: int) -> int:
        if self.method == "o2nc":
            return 2 * horizon if self.option == "I" else horizon + 1
        return (self.step_cost or 2 * self.batch) * horizon


def _o2nc_moment_parts(spec: ProblemSpec, delta, option, lipschitz_coef):
    """Return ``(a, b)`` with ``G^2 = a + b sqrt(2 pi)``."""
    d = spec.dim
    sigma, L, delta = _frac(spec.noise_bound), _frac(spec.lipschitz), _frac(delta)
    if option == "I":
        a = Fraction(d * d) * sigma**2 / (2 * delta**2)
        if lipschitz_coef is None:
            return a, 16 * d * L**2
        return a + _frac(lipschitz_coef) * d * L**2, Fraction(0)
    if option == "II":
        coef = Fraction(385) if lipschitz_coef is None else _frac(lipschitz_coef)
        return 6 * Fraction(d * d) * sigma**2 / delta**2 + coef * d * d * L**2, Fraction(0)
    raise ValueError(f"option must be 'I' or 'II', got {option!r}")


def schedule_theorem2(
    spec: ProblemSpec,
    delta: float,
    epsilon: float,
    option: str = "I",
    lipschitz_coef: Optional[float] = None,
) -> Schedule:
    """ZO-O2NC parameters for a ``(delta, epsilon)`` target.

    ``G^2 = d^2 s^2 / (2 delta^2) + 16 sqrt(2 pi) d L^2`` (Option I) or
    ``6 d^2 s^2 / delta^2 + 385 d^2 L^2`` (Option II);
    ``M = ceil(16 G^2 / eps^2)``, ``eta = D / (G sqrt(M))``,
    ``T = M ceil(2 (gamma + delta L) / (delta eps))``.
    ``lipschitz_coef`` replaces the constant on the ``L^2`` term.
    """
    check_positive(delta, "delta")
    check_positive(epsilon, "epsilon")
    a, b = _o2nc_moment_parts(spec, delta, option, lipschitz_coef)
    eps = _frac(epsilon)
    M = ceil_plus_sqrt2pi(16 * a / eps**2, 16 * b / eps**2)
    n_blocks = _ceil_frac(2 * (_frac(spec.gap) + _frac(delta) * _frac(spec.lipschitz)) / (_frac(delta) * eps))
    T = M * n_blocks
    g2 = float(a) + float(b) * SQRT_2PI
    eta = (delta / M) / (math.sqrt(g2) * math.sqrt(M))
    n_szo = 2 * T if option == "I" else T + 1
    return Schedule(
        method="o2nc", delta=float(delta), eta=eta, epsilon=float(epsilon), horizon=T,
        predicted_queries=n_szo, moment=g2, option=option, block_len=M, n_blocks=n_blocks,
        theoretical_horizon=T, theoretical_queries=n_szo,
    )


def schedule_goldstein(spec, delta, epsilon, option="I", halve_radius=True, lipschitz_coef=None):
    """Schedule aimed at a ``(delta, epsilon)``-Goldstein point of ``f``.

    With ``halve_radius`` the method runs at smoothing radius ``delta / 2``
    so that every ``y_t`` in the output block lies within ``delta`` of the
    returned mean while the smoothed gradients are taken at radius
    ``delta / 2``.
    """
    run_delta = delta / 2 if halve_radius else delta
    s = schedule_theorem2(spec, run_delta, epsilon, option, lipschitz_coef)
    return replace(s, notes={**s.notes, "target_delta": float(delta), "halve_radius": bool(halve_radius)})


def smooth_delta(spec: ProblemSpec, epsilon: float, mode: str) -> float:
    """Smoothing radius for epsilon-stationarity under extra smoothness."""
    check_positive(epsilon, "epsilon")
    if mode == "gradient_lipschitz":
        if spec.grad_lipschitz is None:
            raise ValueError("gradient_lipschitz mode needs ProblemSpec.grad_lipschitz")
        return epsilon / (4 * spec.grad_lipschitz)
    if mode == "hessian_lipschitz":
        if spec.hess_lipschitz is None:
            raise ValueError("hessian_lipschitz mode needs ProblemSpec.hess_lipschitz")
        q = _frac(epsilon) / (2 * _frac(spec.hess_lipschitz))
        # one rounding, not two: sqrt at 60 digits of the exact ratio
        with mpmath.workdps(60):
            return float(mpmath.sqrt(mpmath.mpf(q.numerator) / q.denominator))
    raise ValueError(f"unknown mode {mode!r}")


def schedule_smooth(spec: ProblemSpec, epsilon: float, mode: str, option: str = "I", lipschitz_coef=None) -> Schedule:
    """Pick ``delta`` from the smoothness constant, then run the Goldstein
    schedule at accuracy ``epsilon / 2``."""
    delta = smooth_delta(spec, epsilon, mode)
    s = schedule_theorem2(spec, delta, epsilon / 2, option, lipschitz_coef)
    return replace(s, epsilon=float(epsilon), notes={**s.notes, "mode": mode, "inner_epsilon": epsilon / 2})


def schedule_sgd(spec: ProblemSpec, delta: float, epsilon: float) -> Schedule:
    """``eta = 1/beta``, ``B = ceil(2 V / eps^2)``, ``T = ceil(4 beta (gamma + delta L) / eps^2)``."""
    check_positive(delta, "delta")
    check_positive(epsilon, "epsilon")
    d = spec.dim
    dl, eps = _frac(delta), _frac(epsilon)
    sigma, L, c, gap = _frac(spec.noise_bound), _frac(spec.lipschitz), _frac(spec.smoothing_constant), _frac(spec.gap)
    v_rat = Fraction(d * d) * sigma**2 / (2 * dl**2)
    v_irr = 16 * d * L**2
    B = ceil_plus_sqrt2pi(2 * v_rat / eps**2, 2 * v_irr / eps**2)
    T = ceil_times_sqrt(4 * c * L * (gap + dl * L) / (dl * eps**2), d)
    beta = float(c) * math.sqrt(d) * float(L) / delta
    V = float(v_rat) + float(v_irr) * SQRT_2PI
    return Schedule(
        method="sgd", delta=float(delta), eta=1.0 / beta, epsilon=float(epsilon), horizon=T,
        predicted_queries=2 * B * T, moment=V, batch=B, smoothness=beta,
        theoretical_horizon=T, theoretical_queries=2 * B * T,
    )


def clamp_budget(s: Schedule, max_queries: int) -> Schedule:
    """Shrink ``K`` (O2NC) or ``T`` (SGD) so the predicted cost fits the cap.

    ``M``, ``B`` and ``eta`` are kept. At least one block / iteration always
    remains, so a cap below one block's cost is reported as ``over_cap``.
    """
    max_queries = check_count(max_queries, "max_queries")
    if s.predicted_queries <= max_queries:
        return s
    if s.method == "o2nc":
        per_block = 2 * s.block_len if s.option == "I" else s.block_len
        room = max_queries if s.option == "I" else max_queries - 1
        n_blocks = max(1, room // per_block)
        horizon = n_blocks * s.block_len
    else:
        n_blocks = None
        horizon = max(1, max_queries // (s.step_cost or 2 * s.batch))
    n_szo = s.queries_for(horizon)
    notes = {
        **s.notes,
        "cap": max_queries,
        "theoretical_over_actual": s.theoretical_queries / n_szo,
        "over_cap": n_szo > max_queries,
    }
    return replace(s, horizon=horizon, n_blocks=n_blocks if s.method == "o2nc" else None,
                   predicted_queries=n_szo, clamped=True, notes=notes)
