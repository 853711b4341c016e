"""Strategic classification with a best-responding population.

The learner picks ``x = (x_feat, b)``. An agent with features ``w`` and
score ``s = x_feat . w + b < 0`` moves to the nearest point of the decision
boundary when the squared move costs at most ``tau``; otherwise, or when
already approved, it stays. Loss is the hinge loss after the response.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import StochasticOracle, check_positive, make_rng

N_FEATURES = 11


def strategic_response(x, W, tau: float = 2.0) -> np.ndarray:
    """Best response of each row of ``W`` to the classifier ``x``.

    ``x`` has length ``k + 1`` (weights then bias); ``W`` is ``(n, k)`` or a
    single feature vector. Rows of ``x`` may also vary per agent when ``x``
    is ``(n, k + 1)``.
    """
    x = np.asarray(x, dtype=float)
    W = np.asarray(W, dtype=float)
    single = W.ndim == 1
    W = np.atleast_2d(W)
    xs = np.atleast_2d(x)
    feat, b = xs[:, :-1], xs[:, -1]
    s = np.sum(feat * W, axis=1) + b
    sq = np.sum(feat * feat, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = np.where(sq > 0, s * s / sq, np.inf)
        move = (s < 0) & (sq > 0) & (cost <= tau)
        shift = np.where(move, s / np.where(sq > 0, sq, 1.0), 0.0)
    out = W - shift[:, None] * feat
    return out[0] if single else out


def hinge_after_response(x, W, y, tau: float = 2.0) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    W_tilde = strategic_response(xs, W, tau)
    score = np.sum(xs[:, :-1] * W_tilde, axis=1) + xs[:, -1]
    return np.maximum(0.0, 1.0 - np.asarray(y) * score)


@dataclass
class StrategicInstance:
    """Standardised training/test records and the response reward ``tau``.

    Features are standardised with training-split statistics; agents respond
    in the standardised space.
    """

    W_train: np.ndarray
    y_train: np.ndarray
    W_test: np.ndarray
    y_test: np.ndarray
    tau: float = 2.0
    mean: np.ndarray = None
    std: np.ndarray = None

    def __post_init__(self):
        check_positive(self.tau, "tau")
        for y in (self.y_train, self.y_test):
            if y.size and not np.all(np.isin(y, (-1, 1))):
                raise ValueError("labels must be -1 or +1")
        if self.W_train.shape[0] == 0:
            raise ValueError("training split is empty")

    @property
    def dim(self) -> int:
        return self.W_train.shape[1] + 1

    @classmethod
    def from_records(cls, W, y, n_test: int = 0, seed: int = 0, tau: float = 2.0):
        """Split raw records (stratified by label), then standardise."""
        W = np.asarray(W, dtype=float)
        y = np.asarray(y).astype(int)
        rng = make_rng(seed)
        test_idx = []
        if n_test:
            for label in (-1, 1):
                idx = np.flatnonzero(y == label)
                k = int(round(n_test * idx.size / y.size))
                test_idx.extend(rng.choice(idx, size=k, replace=False).tolist())
        mask = np.zeros(y.size, dtype=bool)
        mask[test_idx] = True
        W_tr, W_te = W[~mask], W[mask]
        mean = W_tr.mean(axis=0)
        std = W_tr.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls((W_tr - mean) / std, y[~mask], (W_te - mean) / std, y[mask], tau, mean, std)

    @classmethod
    def synthetic(cls, seed: int = 0, n_train: int = 2000, n_test: int = 500,
                  n_features: int = N_FEATURES, label_noise: float = 1.0, tau: float = 2.0):
        """Correlated Gaussian features with labels from a noisy linear teacher."""
        rng = make_rng(seed)
        n = n_train + n_test
        mix = rng.normal(size=(n_features, n_features)) / np.sqrt(n_features)
        W = rng.normal(size=(n, n_features)) @ (np.eye(n_features) + 0.5 * mix)
        W = W * rng.uniform(0.5, 3.0, size=n_features) + rng.normal(0, 2, size=n_features)
        teacher = rng.normal(size=n_features)
        z = (W - W.mean(axis=0)) / W.std(axis=0) @ teacher / np.sqrt(n_features)
        y = np.where(z + 0.3 + label_noise * rng.normal(size=n) >= 0, 1, -1)
        return cls.from_records(W, y, n_test=n_test, seed=seed + 1, tau=tau)

    def losses(self, x, test: bool = False) -> np.ndarray:
        W, y = (self.W_test, self.y_test) if test else (self.W_train, self.y_train)
        return hinge_after_response(x, W, y, self.tau)

    def train_loss(self, x) -> float:
        """Exact population hinge loss over the training split."""
        return float(self.losses(x).mean())

    def objective(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.array([self.train_loss(x) for x in X])

    def test_accuracy(self, x) -> float:
        if self.y_test.size == 0:
            return float("nan")
        x = np.asarray(x, dtype=float)
        W_tilde = strategic_response(x, self.W_test, self.tau)
        pred = np.where(W_tilde @ x[:-1] + x[-1] >= 0, 1, -1)
        return float(np.mean(pred == self.y_test))


class StrategicOracle(StochasticOracle):
    """One query draws a training record uniformly and returns its
    post-response hinge loss."""

    def __init__(self, inst: StrategicInstance):
        super().__init__(inst.dim)
        self.inst = inst

    def _draw(self, X, rng):
        idx = rng.integers(0, self.inst.y_train.size, size=X.shape[0])
        return hinge_after_response(X, self.inst.W_train[idx], self.inst.y_train[idx], self.inst.tau)


def strategic_oracle(inst: StrategicInstance) -> StrategicOracle:
    return StrategicOracle(inst)
