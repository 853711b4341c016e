"""Command-line entry point: ``ddzo run|validate|summarize``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .experiment import ConfigError, build_problem, load_config, resolve_schedule, run_experiment, summarize

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_SEED_FAILED = 0, 1, 2, 3


def _print_schedule(label, s, info) -> None:
    parts = [f"{label}: {s.method}"]
    if s.method == "o2nc":
        parts.append(f"option={s.option} delta={s.delta:.6g} M={s.block_len} K={s.n_blocks} eta={s.eta:.6g}")
    else:
        parts.append(f"delta={s.delta:.6g} B={s.batch} T={s.horizon} eta={s.eta:.6g}")
    parts.append(f"queries={s.predicted_queries}")
    if s.clamped:
        parts.append(f"(clamped from {s.theoretical_queries})")
    if info.get("estimated_constants"):
        parts.append(f"estimated: {', '.join(info['estimated_constants'])}")
    print(" ".join(parts))


def cmd_validate(args) -> int:
    rc = load_config(args.config)
    problem = build_problem(rc.problem)
    print(f"problem {problem.label} (d={problem.dim}), seeds {list(rc.seeds)}")
    for mc in rc.methods:
        s, info = resolve_schedule(mc, rc.problem, problem)
        _print_schedule(mc.label, s, info)
    return EXIT_OK


def _print_summary(rows) -> None:
    print("method,week_or_instance,mean,std,queries")
    for label, inst, mean, std, q in rows:
        print(f"{label},{inst},{mean!r},{std!r},{q}")


def cmd_run(args) -> int:
    rc = load_config(args.config)
    if args.output_dir:
        rc = replace(rc, output_dir=args.output_dir)
    if args.workers:
        rc = replace(rc, workers=args.workers)
    result = run_experiment(rc)
    _print_summary(result.summary)
    for f in result.failures:
        print(f"seed {f['seed']} of {f['method']} failed: {f['error']}", file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_SEED_FAILED


def cmd_summarize(args) -> int:
    _print_summary(summarize(args.output_dir))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddzo", description="Zeroth-order experiments under decision-dependent sampling.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run every method and seed in a config file")
    p.add_argument("config")
    p.add_argument("--output-dir", help="override [run] output_dir")
    p.add_argument("--workers", type=int, help="override the worker count")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("validate", help="parse a config and print the resolved schedules")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("summarize", help="rebuild summary.csv from an output directory")
    p.add_argument("output_dir")
    p.set_defaults(func=cmd_summarize)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
