"""Plain-text instance files: one header line, then comma-separated rows.

Strategic records::

    w1,w2,...,w11,label
    0.25,-1.5,...,0.75,1

Pricing reference prices (``rho`` optional; drawn from the instance seed
when absent)::

    theta,rho
    0.31,0.42

Floats are written with ``repr`` so a save/load round trip is bit-exact.
Raw (unstandardised) features are stored; standardisation happens on load.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _fmt(v) -> str:
    return repr(float(v))


def save_strategic_records(path, W, y) -> None:
    W = np.asarray(W, dtype=float)
    y = np.asarray(y).astype(int)
    header = [f"w{i + 1}" for i in range(W.shape[1])] + ["label"]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row, label in zip(W, y):
            out.writerow([_fmt(v) for v in row] + [str(label)])


def load_strategic_records(path):
    """Return ``(W, y)`` from a strategic records file."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1].strip() != "label":
            raise ValueError(f"{path}: header must end with 'label'")
        rows = [r for r in reader if r]
    n_feat = len(header) - 1
    for lineno, r in enumerate(rows, start=2):
        if len(r) != n_feat + 1:
            raise ValueError(f"{path}:{lineno}: expected {n_feat + 1} fields, got {len(r)}")
    W = np.array([[float(v) for v in r[:-1]] for r in rows], dtype=float).reshape(-1, n_feat)
    y = np.array([int(float(r[-1])) for r in rows], dtype=int)
    return W, y


def save_pricing_theta(path, theta, rho=None) -> None:
    theta = np.asarray(theta, dtype=float)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        if rho is None:
            out.writerow(["theta"])
            out.writerows([[_fmt(t)] for t in theta])
        else:
            out.writerow(["theta", "rho"])
            out.writerows([[_fmt(t), _fmt(r)] for t, r in zip(theta, rho)])


def load_pricing_theta(path):
    """Return ``(theta, rho_or_None)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if not header or header[0] != "theta":
            raise ValueError(f"{Path(path)}: header must start with 'theta'")
        rows = [r for r in reader if r]
    theta = np.array([float(r[0]) for r in rows])
    rho = np.array([float(r[1]) for r in rows]) if "rho" in header else None
    return theta, rho
