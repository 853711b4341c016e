"""Batch experiment runner behind the ``ddzo`` command.

A run configuration is an INI file with one ``[problem]`` section, one
``[run]`` section and one ``[method:<label>]`` section per optimiser::

    [problem]
    kind = pricing            # linear, norm, quadratic, abs_sum,
                              # performative_quadratic, strategic, pricing
    instance_seed = 0
    x0 = 0.5                  # scalar (broadcast) or comma-separated vector

    [run]
    seeds = 0-9               # list "0, 3, 7" or inclusive range "0-9"
    budget = 5000             # oracle-call cap per run
    output_dir = out          # relative to the config file
    checkpoint_every = auto   # auto = ceil(T / 200)

    [method:o2nc]
    type = o2nc_opt1          # o2nc_opt1, o2nc_opt2, sgd_baseline, sgd_estimator
    delta = 0.1
    block_len = 20
    eta = 0.05

    [method:o2nc_theory]
    type = o2nc_opt1
    schedule = theorem
    mode = goldstein
    delta = 0.1
    epsilon = 0.5

Every seed writes ``<output_dir>/<label>/seed_<s>.csv`` with header
``t,queries,objective,step_norm,certificate`` and a JSON record of the
resolved schedule. The last CSV row (``t = T``) holds the run's result.
``summary.csv`` aggregates the final objective across seeds.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .core import ProblemSpec, StochasticOracle, make_rng, spawn_rng
from .estimators import BASELINE_KINDS, baseline_queries
from .o2nc import O2NCConfig, RunTrace, run_o2nc
from .problems import PricingInstance, StrategicInstance, expected_negative_profit, pricing_oracle, strategic_oracle
from .problems.io import load_pricing_theta, load_strategic_records
from .problems.synthetic import KINDS as SYNTHETIC_KINDS
from .problems.synthetic import synthetic_instance
from .schedules import Schedule, clamp_budget, schedule_goldstein, schedule_sgd, schedule_smooth
from .sgd import SGDConfig, run_sgd
from .smoothing import SmoothingParams, mc_smoothed_gradient

CSV_HEADER = ("t", "queries", "objective", "step_norm", "certificate")
SUMMARY_HEADER = ("method", "week_or_instance", "mean", "std", "queries")
METHOD_TYPES = ("o2nc_opt1", "o2nc_opt2", "sgd_baseline", "sgd_estimator")
PROBLEM_KINDS = SYNTHETIC_KINDS + ("strategic", "pricing")
WORKERS_ENV = "DDZO_WORKERS"

# rng stream tags derived from the run seed
EVAL_STREAM, CERT_STREAM, ESTIMATE_STREAM = 1, 2, 3

_CONSTANT_KEYS = ("lipschitz", "noise_bound", "gap", "grad_lipschitz", "hess_lipschitz", "smoothing_constant")
_PROBLEM_KEYS = {
    "kind", "instance_seed", "dim", "sigma", "x0", "data_file", "evaluation",
    "a", "center", "scale", "radius", "theta", "eps", "A",
    "n_products", "n_buyers", "n_train", "n_test", "tau", "estimate_radius", *_CONSTANT_KEYS,
}
_RUN_KEYS = {"seeds", "budget", "output_dir", "workers", "checkpoint_every", "eval_samples",
             "certificate_samples", "report_point"}
_EXPLICIT_KEYS = {
    "o2nc": {"delta", "block_len", "n_blocks", "eta"},
    "sgd": {"delta", "batch", "iterations", "eta", "mu"},
}
_THEOREM_KEYS = {"schedule", "epsilon", "mode", "delta", "halve_radius", "lipschitz_coef"}


class ConfigError(ValueError):
    """Configuration problem, reported as ``path:line: [section] key: message``."""


# -- config ------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemConfig:
    kind: str
    instance_seed: int = 0
    dim: Optional[int] = None
    sigma: float = 0.0
    x0: tuple = (0.0,)
    data_file: Optional[str] = None
    evaluation: Optional[str] = None
    params: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MethodConfig:
    label: str
    type: str
    estimator: Optional[str] = None
    explicit: Optional[dict] = None
    theorem: Optional[dict] = None
    budget: Optional[int] = None


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig
    methods: tuple
    seeds: tuple
    output_dir: str
    budget: Optional[int] = None
    workers: int = 1
    checkpoint_every: Optional[int] = None
    eval_samples: int = 1000
    certificate_samples: int = 2000
    report_point: str = "last"
    source: Optional[str] = None


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    index, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), n)
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip()), n)
    return index


class _Reader:
    def __init__(self, path: str, text: str):
        self.path = path
        self.lines = _line_index(text)

    def error(self, section: str, key: Optional[str], msg: str) -> ConfigError:
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        where = f"{self.path}:{line}" if line else self.path
        name = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{where}: {name}: {msg}")

    def get(self, sec, key, conv, default=None, required=False):
        if key not in sec:
            if required:
                raise self.error(sec.name, key, "missing required key")
            return default
        raw = sec[key].strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise self.error(sec.name, key, f"invalid value {raw!r} ({exc})") from None


def _vector(raw: str) -> tuple:
    parts = [p for p in re.split(r"[,\s]+", raw.strip()) if p]
    if not parts:
        raise ValueError("empty vector")
    vals = tuple(float(p) for p in parts)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("non-finite entry")
    return vals


def _positive_float(raw: str) -> float:
    v = float(raw)
    if not (v > 0 and math.isfinite(v)):
        raise ValueError("must be > 0")
    return v


def _nonneg_float(raw: str) -> float:
    v = float(raw)
    if not (v >= 0 and math.isfinite(v)):
        raise ValueError("must be >= 0")
    return v


def _count(raw: str) -> int:
    v = int(raw)
    if v < 1:
        raise ValueError("must be >= 1")
    return v


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _seeds(raw: str) -> tuple:
    m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", raw)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ValueError("empty range")
        return tuple(range(lo, hi + 1))
    seeds = tuple(int(p) for p in re.split(r"[,\s]+", raw.strip()) if p)
    if not seeds or min(seeds) < 0:
        raise ValueError("need non-negative integer seeds")
    if len(set(seeds)) != len(seeds):
        raise ValueError("duplicate seeds")
    return seeds


def _constant(raw: str):
    return "estimate" if raw.lower() == "estimate" else _nonneg_float(raw)


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parse_config(text: str, path: str = "<config>") -> RunConfig:
    """Parse and validate a run configuration."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    rd = _Reader(path, text)
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    for name in cp.sections():
        if name not in ("problem", "run") and not name.startswith("method:"):
            raise rd.error(name, None, "unknown section")
    if "problem" not in cp:
        raise ConfigError(f"{path}: missing [problem] section")
    if "run" not in cp:
        raise ConfigError(f"{path}: missing [run] section")

    problem = _parse_problem(cp["problem"], rd)
    run = cp["run"]
    for key in run:
        if key not in _RUN_KEYS:
            raise rd.error("run", key, "unknown key")
    seeds = rd.get(run, "seeds", _seeds, required=True)
    budget = rd.get(run, "budget", _count)
    out = rd.get(run, "output_dir", str, required=True)
    if not os.path.isabs(out) and path != "<config>":
        out = str(Path(path).resolve().parent / out)
    workers = rd.get(run, "workers", _count, default=default_workers())
    ck = rd.get(run, "checkpoint_every", lambda r: None if r.lower() == "auto" else _count(r))
    eval_samples = rd.get(run, "eval_samples", _count, default=1000)
    cert_samples = rd.get(run, "certificate_samples", _count, default=2000)
    report = rd.get(run, "report_point", str, default="last")
    if report not in ("last", "output"):
        raise rd.error("run", "report_point", "expected 'last' or 'output'")

    methods = []
    for name in cp.sections():
        if name.startswith("method:"):
            methods.append(_parse_method(cp[name], name[len("method:"):].strip(), rd, budget))
    if not methods:
        raise ConfigError(f"{path}: no [method:<label>] sections")
    labels = [m.label for m in methods]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"{path}: duplicate method labels")
    return RunConfig(problem, tuple(methods), seeds, out, budget, workers, ck, eval_samples,
                     cert_samples, report, source=path)


def load_config(path) -> RunConfig:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    return parse_config(text, path)


def _parse_problem(sec, rd: _Reader) -> ProblemConfig:
    for key in sec:
        if key not in _PROBLEM_KEYS:
            raise rd.error("problem", key, "unknown key")
    kind = rd.get(sec, "kind", str, required=True)
    if kind not in PROBLEM_KINDS:
        raise rd.error("problem", "kind", f"expected one of {', '.join(PROBLEM_KINDS)}")
    params = {}
    for key in ("a", "center", "theta", "A"):
        if key in sec:
            params[key] = rd.get(sec, key, _vector)
    for key in ("scale", "radius", "tau", "estimate_radius"):
        if key in sec:
            params[key] = rd.get(sec, key, _positive_float)
    if "eps" in sec:
        params["eps"] = rd.get(sec, "eps", _nonneg_float)
    for key in ("n_products", "n_buyers", "n_train"):
        if key in sec:
            params[key] = rd.get(sec, key, _count)
    if "n_test" in sec:
        params["n_test"] = rd.get(sec, "n_test", int)
    constants = {k: rd.get(sec, k, _constant) for k in _CONSTANT_KEYS if k in sec}
    evaluation = rd.get(sec, "evaluation", str)
    if evaluation not in (None, "exact", "mc"):
        raise rd.error("problem", "evaluation", "expected 'exact' or 'mc'")
    cfg = ProblemConfig(
        kind=kind,
        instance_seed=rd.get(sec, "instance_seed", int, default=0),
        dim=rd.get(sec, "dim", _count),
        sigma=rd.get(sec, "sigma", _nonneg_float, default=0.0),
        x0=rd.get(sec, "x0", _vector, default=(0.0,)),
        data_file=rd.get(sec, "data_file", str),
        evaluation=evaluation,
        params=params,
        constants=constants,
    )
    if cfg.data_file and not os.path.isabs(cfg.data_file) and rd.path != "<config>":
        cfg = replace(cfg, data_file=str(Path(rd.path).resolve().parent / cfg.data_file))
    return cfg


def _parse_method(sec, label: str, rd: _Reader, run_budget) -> MethodConfig:
    name = sec.name
    if not label:
        raise rd.error(name, None, "empty method label")
    mtype = rd.get(sec, "type", str, required=True)
    if mtype not in METHOD_TYPES:
        raise rd.error(name, "type", f"expected one of {', '.join(METHOD_TYPES)}")
    family = "o2nc" if mtype.startswith("o2nc") else "sgd"
    estimator = None
    if mtype == "sgd_estimator":
        estimator = rd.get(sec, "estimator", str, required=True)
        if estimator not in BASELINE_KINDS:
            raise rd.error(name, "estimator", f"expected one of {', '.join(BASELINE_KINDS)}")
    elif "estimator" in sec:
        raise rd.error(name, "estimator", "only valid for type = sgd_estimator")
    budget = rd.get(sec, "budget", _count, default=run_budget)

    keys = set(sec) - {"type", "estimator", "budget"}
    if "schedule" in sec:
        if rd.get(sec, "schedule", str) != "theorem":
            raise rd.error(name, "schedule", "only 'theorem' is supported")
        if mtype == "sgd_estimator":
            raise rd.error(name, "schedule", "no theorem schedule for baseline estimators")
        allowed = _THEOREM_KEYS
        clash = keys - allowed
        if clash:
            key = sorted(clash)[0]
            raise rd.error(name, key, "explicit parameters cannot be combined with schedule = theorem")
        th = {"epsilon": rd.get(sec, "epsilon", _positive_float, required=True)}
        default_mode = "goldstein" if family == "o2nc" else "sgd"
        th["mode"] = rd.get(sec, "mode", str, default=default_mode)
        modes = ("goldstein", "gradient_lipschitz", "hessian_lipschitz") if family == "o2nc" else ("sgd",)
        if th["mode"] not in modes:
            raise rd.error(name, "mode", f"expected one of {', '.join(modes)}")
        if th["mode"] in ("goldstein", "sgd"):
            th["delta"] = rd.get(sec, "delta", _positive_float, required=True)
        elif "delta" in sec:
            raise rd.error(name, "delta", f"mode {th['mode']} derives delta itself")
        th["halve_radius"] = rd.get(sec, "halve_radius", _bool, default=True)
        if "lipschitz_coef" in sec:
            th["lipschitz_coef"] = rd.get(sec, "lipschitz_coef", _positive_float)
        return MethodConfig(label, mtype, estimator, None, th, budget)

    allowed = _EXPLICIT_KEYS[family]
    for key in sorted(keys - allowed):
        raise rd.error(name, key, "unknown key" if key not in _THEOREM_KEYS else
                       "theorem keys need schedule = theorem")
    ex = {"delta": rd.get(sec, "delta", _positive_float, required=True),
          "eta": rd.get(sec, "eta", _positive_float, required=True)}
    if family == "o2nc":
        ex["block_len"] = rd.get(sec, "block_len", _count, required=True)
        ex["n_blocks"] = rd.get(sec, "n_blocks", _count)
        if ex["n_blocks"] is None and budget is None:
            raise rd.error(name, "n_blocks", "give n_blocks or a budget")
    else:
        ex["batch"] = rd.get(sec, "batch", _count, default=1)
        ex["iterations"] = rd.get(sec, "iterations", _count)
        ex["mu"] = rd.get(sec, "mu", _positive_float)
        if ex["iterations"] is None and budget is None:
            raise rd.error(name, "iterations", "give iterations or a budget")
    return MethodConfig(label, mtype, estimator, ex, None, budget)


# -- problems ----------------------------------------------------------------

@dataclass
class Problem:
    """A built instance: oracle factory, objective and optional certificate
    function (the deterministic ``f`` of synthetic problems)."""

    label: str
    dim: int
    x0: np.ndarray
    make_oracle: Callable[[], StochasticOracle]
    exact: Optional[Callable]
    function: Optional[Callable] = None
    defaults: dict = field(default_factory=dict)
    evaluation: str = "exact"
    extras: Optional[Callable] = None

    def objective(self, x, seed: int, n_samples: int) -> float:
        """Objective at ``x``; the MC path reuses one evaluation stream per
        seed so checkpoints share common random numbers."""
        if self.evaluation == "exact":
            return float(self.exact(np.asarray(x, dtype=float)))
        return self.make_oracle().evaluate(x, spawn_rng(seed, EVAL_STREAM), n_samples)


def _broadcast_x0(x0: tuple, dim: int) -> np.ndarray:
    if len(x0) == 1:
        return np.full(dim, x0[0])
    if len(x0) != dim:
        raise ConfigError(f"x0 has length {len(x0)}, problem dimension is {dim}")
    return np.array(x0, dtype=float)


def build_problem(pc: ProblemConfig) -> Problem:
    p = dict(pc.params)
    if pc.kind in SYNTHETIC_KINDS:
        kw = {k: np.array(v) for k, v in p.items() if k in ("a", "center", "theta")}
        kw.update({k: p[k] for k in ("scale", "radius", "eps") if k in p})
        dim = pc.dim or next((len(v) for v in kw.values() if isinstance(v, np.ndarray)), 2)
        if "A" in p:
            A = np.array(p["A"], dtype=float)
            if A.size != dim * dim:
                raise ConfigError(f"A needs {dim * dim} entries, got {A.size}")
            kw["A"] = A.reshape(dim, dim)
        try:
            f, _ = synthetic_instance(pc.kind, dim, pc.instance_seed, pc.sigma, **kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        x0 = _broadcast_x0(pc.x0, f.dim)

        def make_oracle():
            return synthetic_instance(pc.kind, dim, pc.instance_seed, pc.sigma, **kw)[1]

        defaults = {"lipschitz": f.lipschitz, "grad_lipschitz": f.grad_lipschitz,
                    "hess_lipschitz": f.hess_lipschitz}
        if pc.kind == "performative_quadratic":
            # noise of xi . x is sigma ||x||; bounded on the advertised ball
            defaults["noise_bound"] = pc.sigma * (f.domain_radius or 1.0)
        else:
            defaults["noise_bound"] = pc.sigma
        if f.minimizer is not None:
            defaults["gap"] = float(f(x0) - f(f.minimizer))
        return Problem(f"{pc.kind}:{pc.instance_seed}", f.dim, x0, make_oracle, f, f, defaults,
                       pc.evaluation or "exact")

    if pc.kind == "strategic":
        if pc.data_file:
            W, y = load_strategic_records(pc.data_file)
            inst = StrategicInstance.from_records(W, y, p.get("n_test", 0), pc.instance_seed,
                                                  p.get("tau", 2.0))
            label = Path(pc.data_file).stem
        else:
            inst = StrategicInstance.synthetic(pc.instance_seed, p.get("n_train", 2000),
                                               p.get("n_test", 500), tau=p.get("tau", 2.0))
            label = f"strategic:{pc.instance_seed}"
        x0 = _broadcast_x0(pc.x0, inst.dim)
        return Problem(label, inst.dim, x0, lambda: strategic_oracle(inst), inst.train_loss,
                       None, {}, pc.evaluation or "exact",
                       extras=lambda x: {"test_accuracy": inst.test_accuracy(x)})

    # pricing
    n_buyers = p.get("n_buyers", 120)
    if pc.data_file:
        theta, rho = load_pricing_theta(pc.data_file)
        inst = PricingInstance.from_theta(theta, pc.instance_seed, n_buyers, rho)
        label = Path(pc.data_file).stem
    else:
        inst = PricingInstance.synthetic(pc.instance_seed, p.get("n_products", 30), n_buyers)
        label = f"pricing:{pc.instance_seed}"
    x0 = _broadcast_x0(pc.x0, inst.dim)
    return Problem(label, inst.dim, x0, lambda: pricing_oracle(inst),
                   lambda x: float(expected_negative_profit(x, inst)[0]), None, {},
                   pc.evaluation or "mc")


def estimate_lipschitz(fn: Callable, center, radius: float, rng, n_pairs: int = 200) -> float:
    """Largest difference quotient over random pairs in a box around ``center``."""
    center = np.asarray(center, dtype=float)
    best = 0.0
    for _ in range(n_pairs):
        a = center + rng.uniform(-radius, radius, center.size)
        b = a + rng.normal(scale=radius / 10, size=center.size)
        dist = np.linalg.norm(a - b)
        if dist > 0:
            best = max(best, abs(fn(a) - fn(b)) / dist)
    return float(best)


def estimate_noise(oracle: StochasticOracle, center, radius: float, rng, n_points: int = 10,
                   n_samples: int = 500) -> float:
    """Largest empirical standard deviation of ``F(x; xi)`` over sampled ``x``;
    uses uncounted draws."""
    center = np.asarray(center, dtype=float)
    pts = [center] + [center + rng.uniform(-radius, radius, center.size) for _ in range(n_points - 1)]
    best = 0.0
    for x in pts:
        vals = oracle._draw(np.broadcast_to(x, (n_samples, center.size)), rng)
        best = max(best, float(np.std(vals, ddof=1)))
    return best


def resolve_spec(pc: ProblemConfig, problem: Problem, seed: int = 0) -> tuple:
    """``(ProblemSpec, estimated_keys)``; user constants override defaults,
    ``estimate`` (or a missing L / sigma without a default) triggers an
    empirical estimate over a box around ``x0``."""
    vals = {**{k: v for k, v in problem.defaults.items() if v is not None}, **pc.constants}
    radius = pc.params.get("estimate_radius", 1.0)
    rng = spawn_rng(seed, ESTIMATE_STREAM)
    estimated = []
    for key in ("lipschitz", "noise_bound"):
        if vals.get(key, "estimate") == "estimate":
            if key == "lipschitz":
                vals[key] = estimate_lipschitz(problem.exact, problem.x0, radius, rng)
            else:
                vals[key] = estimate_noise(problem.make_oracle(), problem.x0, radius, rng)
            estimated.append(key)
    if "gap" not in vals or vals["gap"] == "estimate":
        raise ConfigError(f"[problem] gap: theorem schedules need gap = f(x0) - f* for kind {pc.kind}")
    for key in ("grad_lipschitz", "hess_lipschitz", "smoothing_constant"):
        if vals.get(key) == "estimate":
            raise ConfigError(f"[problem] {key}: cannot be estimated")
    spec = ProblemSpec(problem.dim, max(vals["lipschitz"], 1e-12), vals["noise_bound"], vals["gap"],
                       vals.get("grad_lipschitz"), vals.get("hess_lipschitz"),
                       vals.get("smoothing_constant", 1.0))
    return spec, estimated


# -- schedules ---------------------------------------------------------------

def resolve_schedule(mc: MethodConfig, pc: ProblemConfig, problem: Problem) -> tuple:
    """Build and clamp the schedule for one method.

    Returns ``(Schedule, info)`` where ``info`` records estimated constants.
    """
    option = {"o2nc_opt1": "I", "o2nc_opt2": "II"}.get(mc.type)
    info = {}
    if mc.theorem is not None:
        spec, estimated = resolve_spec(pc, problem)
        info = {"problem_spec": asdict(spec), "estimated_constants": estimated}
        th = mc.theorem
        try:
            if option is None:
                s = schedule_sgd(spec, th["delta"], th["epsilon"])
            elif th["mode"] == "goldstein":
                s = schedule_goldstein(spec, th["delta"], th["epsilon"], option, th["halve_radius"],
                                       th.get("lipschitz_coef"))
            else:
                s = schedule_smooth(spec, th["epsilon"], th["mode"], option, th.get("lipschitz_coef"))
        except ValueError as exc:
            raise ConfigError(f"[method:{mc.label}]: {exc}") from None
    else:
        ex = mc.explicit
        if option is not None:
            M = ex["block_len"]
            if ex["n_blocks"] is not None:
                K = ex["n_blocks"]
            else:
                room = mc.budget if option == "I" else mc.budget - 1
                K = max(1, room // (2 * M if option == "I" else M))
            T = K * M
            n = 2 * T if option == "I" else T + 1
            s = Schedule("o2nc", ex["delta"], ex["eta"], float("nan"), T, n, float("nan"), option=option,
                         block_len=M, n_blocks=K, theoretical_horizon=T, theoretical_queries=n)
        else:
            kind = mc.estimator or "sphere_2pt"
            cost = baseline_queries(kind, problem.dim) * ex["batch"]
            T = ex["iterations"] or max(1, mc.budget // cost)
            s = Schedule("sgd", ex["delta"], ex["eta"], float("nan"), T, cost * T, float("nan"),
                         batch=ex["batch"], step_cost=cost, theoretical_horizon=T,
                         theoretical_queries=cost * T,
                         notes={"estimator": kind, "mu": ex["mu"]})
    if mc.budget is not None:
        s = clamp_budget(s, mc.budget)
        if s.notes.get("over_cap"):
            unit = "block" if s.method == "o2nc" else "iteration"
            raise ConfigError(f"[method:{mc.label}]: one {unit} needs {s.predicted_queries} queries, "
                              f"above the budget of {mc.budget}")
    return s, info


# -- single runs -------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _checkpoints(T: int, every: Optional[int]) -> list:
    every = every or max(1, math.ceil(T / 200))
    ts = list(range(0, T + 1, every))
    if ts[-1] != T:
        ts.append(T)
    return ts


def execute(mc: MethodConfig, schedule: Schedule, problem: Problem, seed: int) -> tuple:
    """Run one seed; returns ``(trace, oracle)``."""
    oracle = problem.make_oracle()
    rng = make_rng(seed)
    if schedule.method == "o2nc":
        cfg = O2NCConfig(schedule.delta, schedule.block_len, schedule.n_blocks, schedule.eta,
                         schedule.option)
        trace = run_o2nc(cfg, oracle, rng, problem.x0)
    else:
        est = mc.estimator or "sphere_2pt"
        cfg = SGDConfig(schedule.delta, schedule.batch, schedule.horizon, schedule.eta, est,
                        schedule.notes.get("mu"))
        trace = run_sgd(cfg, oracle, rng, problem.x0)
    return trace, oracle


def _iterate(trace: RunTrace, t: int) -> np.ndarray:
    return trace.x0 if t == 0 else trace.x[t - 1]


def trace_rows(trace: RunTrace, problem: Problem, seed: int, rc: RunConfig) -> tuple:
    """CSV rows for a finished run plus the reported point."""
    T = trace.n_iter
    cert_f = problem.function
    radius = trace.meta["radius"] if trace.method.startswith("sgd") else trace.meta["delta"]
    params = SmoothingParams(radius, rc.certificate_samples)
    rows = []
    for t in _checkpoints(T, rc.checkpoint_every):
        if t == T:
            break
        x = _iterate(trace, t)
        step = 0.0 if t == 0 else float(np.linalg.norm(trace.step[t - 1]))
        cert = None
        if cert_f is not None:
            g = mc_smoothed_gradient(cert_f, x, params, spawn_rng(seed, CERT_STREAM, t))
            cert = float(np.linalg.norm(g))
        rows.append((t, 0 if t == 0 else int(trace.queries[t - 1]),
                     problem.objective(x, seed, rc.eval_samples), step, cert))

    if rc.report_point == "output":
        point, block = trace.output, trace.k_out
    else:
        point, block = trace.x_final, trace.n_blocks
    cert = None
    if cert_f is not None:
        crng = spawn_rng(seed, CERT_STREAM, T)
        if trace.method.startswith("o2nc"):
            lo = (block - 1) * trace.block_len
            pts = trace.y[lo:lo + trace.block_len]
            grads = [mc_smoothed_gradient(cert_f, y, params, crng) for y in pts]
            cert = float(np.linalg.norm(np.mean(grads, axis=0)))
        else:
            cert = float(np.linalg.norm(mc_smoothed_gradient(cert_f, point, params, crng)))
    rows.append((T, trace.total_queries, problem.objective(point, seed, rc.eval_samples),
                 float(np.linalg.norm(trace.step[T - 1])), cert))
    return rows, point


def write_csv(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for r in rows:
            out.writerow([_fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def run_seed(rc: RunConfig, mc: MethodConfig, schedule: Schedule, info: dict, seed: int) -> dict:
    """Execute and record one seed; exceptions become a failure record."""
    out = Path(rc.output_dir) / mc.label
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        problem = build_problem(rc.problem)
        trace, oracle = execute(mc, schedule, problem, seed)
        if oracle.queries != schedule.predicted_queries:
            raise RuntimeError(f"oracle counted {oracle.queries} queries, "
                               f"expected {schedule.predicted_queries}")
        rows, point = trace_rows(trace, problem, seed, rc)
        write_csv(out / f"seed_{seed}.csv", rows)
        record = {
            "method": mc.label, "type": mc.type, "seed": seed, "status": "ok",
            "schedule": asdict(schedule), **info,
            "queries": oracle.queries, "k_out": trace.k_out, "report_point": rc.report_point,
            "final_point": point, "final_objective": rows[-1][2], "certificate": rows[-1][4],
            "evaluation": problem.evaluation,
            "eval_samples": rc.eval_samples if problem.evaluation == "mc" else None,
        }
        if problem.extras is not None:
            record.update(problem.extras(point))
    except Exception as exc:  # recorded per seed; the batch continues
        record = {"method": mc.label, "type": mc.type, "seed": seed, "status": "failed",
                  "error": f"{type(exc).__name__}: {exc}",
                  "t": getattr(exc, "t", None), "schedule": asdict(schedule)}
        stale = out / f"seed_{seed}.csv"
        if stale.exists():
            stale.unlink()
    _write_json(out / f"seed_{seed}.json", record)
    return {"method": mc.label, "seed": seed, "status": record["status"],
            "wall_time": time.perf_counter() - t0, "error": record.get("error")}


# -- batch -------------------------------------------------------------------

@dataclass
class ExperimentResult:
    summary: list
    failures: list
    timing: dict
    output_dir: str

    @property
    def ok(self) -> bool:
        return not self.failures


def _run_job(args):
    return run_seed(*args)


def run_experiment(rc: RunConfig) -> ExperimentResult:
    """Run every (method, seed) pair, then aggregate the summary."""
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(rc.problem)
    jobs, resolved = [], {}
    for mc in rc.methods:
        schedule, info = resolve_schedule(mc, rc.problem, problem)
        resolved[mc.label] = {"schedule": asdict(schedule), **info}
        jobs.extend((rc, mc, schedule, info, seed) for seed in rc.seeds)
    _write_json(out / "manifest.json", {
        "instance": problem.label, "methods": [m.label for m in rc.methods],
        "seeds": list(rc.seeds), "resolved": resolved,
    })
    t0 = time.perf_counter()
    if rc.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=rc.workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    summary = summarize(out)
    failures = [r for r in results if r["status"] != "ok"]
    timing = {"total_wall_time": time.perf_counter() - t0,
              "runs": [{k: r[k] for k in ("method", "seed", "wall_time")} for r in results]}
    _write_json(out / "timing.json", timing)
    _write_json(out / "failures.json", failures)
    return ExperimentResult(summary, failures, timing, str(out))


def read_trace_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [r for r in reader if r]


def summarize(output_dir) -> list:
    """Recompute ``summary.csv`` from the per-seed CSVs under ``output_dir``."""
    out = Path(output_dir)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"{out}: no manifest.json (not an experiment directory)")
    manifest = json.loads(manifest_path.read_text())
    rows = []
    for label in manifest["methods"]:
        finals, queries = [], []
        for seed in manifest["seeds"]:
            path = out / label / f"seed_{seed}.csv"
            if not path.exists():
                continue
            last = read_trace_csv(path)[-1]
            finals.append(float(last[2]))
            queries.append(int(last[1]))
        if not finals:
            continue
        vals = np.array(finals)
        std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        rows.append((label, manifest["instance"], float(np.mean(vals)), std, max(queries)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for r in rows:
        w.writerow([r[0], r[1], _fmt(r[2]), _fmt(r[3]), str(r[4])])
    (out / "summary.csv").write_text(buf.getvalue())
    return rows
