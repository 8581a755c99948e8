"""Command-line entry points.

    superlasso run <config.json> [--out PATH] [--threads N] [--seed S]
    superlasso widths --n N --s S [--M M] [--trials T] [--seed S] [--out PATH]
    superlasso audit <config.json> [--out PATH] [--threads N] [--seed S]

``run`` executes any experiment config; ``audit`` forces the mismatch audit;
``widths`` is a shortcut for a width study without writing a config file.
The SUPERLASSO_THREADS environment variable sets the default worker count.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    THREADS_ENV_VAR,
    ConfigError,
    ExperimentConfig,
    default_thread_count,
    parse_config,
    run_to_file,
)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superlasso",
        description="Simulate and analyze recovery from superimposed "
        "non-linear measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help=f"worker threads (default: ${THREADS_ENV_VAR} or 1)",
        )
        p.add_argument("--seed", type=int, default=None, help="override config seed")

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", help="path to a JSON experiment config")
    add_common(run_p)

    audit_p = sub.add_parser("audit", help="run the mismatch audit for a config")
    audit_p.add_argument("config", help="path to a JSON experiment config")
    add_common(audit_p)

    widths_p = sub.add_parser("widths", help="estimate mean widths")
    widths_p.add_argument("--n", type=int, required=True)
    widths_p.add_argument("--s", type=int, required=True)
    widths_p.add_argument("--M", type=int, default=8)
    widths_p.add_argument("--trials", type=int, default=10_000)
    widths_p.add_argument("--seed", type=int, default=0)
    widths_p.add_argument("--out", default=None, help="output CSV path")
    return parser


def _load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _resolve_out(cfg: ExperimentConfig, out: str | None) -> str:
    if out is not None:
        return out
    if cfg.output_path is not None:
        return cfg.output_path
    return f"{cfg.experiment}.csv"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "audit"):
            cfg = _load_config(args.config)
            if args.command == "audit" and cfg.experiment != "mismatch_audit":
                cfg = cfg.replace(experiment="mismatch_audit")
            if args.seed is not None:
                cfg = cfg.replace(seed=args.seed)
            threads = args.threads if args.threads is not None else default_thread_count()
            out = _resolve_out(cfg, args.out)
            rows = run_to_file(cfg, out, threads=threads)
            print(f"wrote {len(rows)} rows to {out}")
        else:  # widths
            cfg = ExperimentConfig(
                experiment="width_study",
                n=args.n,
                s=args.s,
                M_list=(args.M,),
                trials=args.trials,
                seed=args.seed,
            )
            out = _resolve_out(cfg, args.out)
            rows = run_to_file(cfg, out, threads=1)
            for row in rows:
                print(f"{row.metric_name}: {row.mean:.6g} (err {row.std:.3g})")
            print(f"wrote {len(rows)} rows to {out}")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
