"""Command-line entry point: run / sweep / summarize / check."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import yaml

from .harness import (check_dir, config_from_dict, expand_sweep, load_config,
                      run_experiment, summarize)


def _default_out(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get("RCDP_OUT_DIR", "results"))


def _apply_overrides(cfg, args):
    if args.seeds is not None:
        cfg.runs = args.seeds
    if args.policy:
        cfg.policies = args.policy
    return cfg


def _add_run_flags(p):
    p.add_argument("config", help="YAML experiment config")
    p.add_argument("--out", help="output directory (default $RCDP_OUT_DIR or ./results)")
    p.add_argument("--seeds", type=int, help="override number of runs per policy")
    p.add_argument("--policy", action="append", help="restrict to a policy (repeatable)")
    p.add_argument("--threads", type=int, default=1, help="parallel worker processes")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rcdp",
        description="Dueling-bandit experiments: robust UCB under corruption and delay.")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(sub.add_parser("run", help="run one experiment config"))
    _add_run_flags(sub.add_parser("sweep", help="expand list-valued keys and run the matrix"))

    p_sum = sub.add_parser("summarize", help="write summary.csv for finished experiments")
    p_sum.add_argument("dirs", nargs="+", help="experiment output directories")

    p_chk = sub.add_parser("check", help="re-verify invariants from persisted traces")
    p_chk.add_argument("dirs", nargs="+", help="experiment output directories")

    args = parser.parse_args(argv)

    try:
        if args.command in ("run", "sweep"):
            out = _default_out(args)
            with open(args.config) as fh:
                raw = yaml.safe_load(fh)
            if not isinstance(raw, dict):
                raise ValueError("config must be a flat key-value mapping")
            raws = expand_sweep(raw) if args.command == "sweep" else [raw]
            for raw_cfg in raws:
                cfg = _apply_overrides(config_from_dict(raw_cfg), args)
                run_experiment(cfg, out, threads=args.threads)
                rows = summarize(out / cfg.name)
                print(f"{cfg.name}: {cfg.runs} run(s) x {len(cfg.policies)} "
                      f"policies -> {out / cfg.name}")
                for row in rows:
                    if row["round"] == cfg.T:
                        print(f"  {row['policy']:<12} final regret "
                              f"{row['mean_cum_regret']:.2f} +/- {row['std_cum_regret']:.2f}")
            return 0

        if args.command == "summarize":
            for d in args.dirs:
                summarize(d)
                print(f"wrote {Path(d) / 'summary.csv'}")
            return 0

        # check
        bad = 0
        for d in args.dirs:
            problems = check_dir(d)
            if problems:
                bad += 1
                for p in problems:
                    print(f"{d}: {p}", file=sys.stderr)
            else:
                print(f"{d}: ok")
        return 1 if bad else 0

    except (AssertionError, ValueError, FileNotFoundError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
