"""Command-line entry points: simulate, verify, schedule, theory, walk."""

from __future__ import annotations

import argparse
import sys
import time

from . import harness
from .schedules import make_schedule


def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="TOML experiment config")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="override the output path")
    p.add_argument("--threads", type=int, default=1, help="worker processes for replicas")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="wrtsim", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="grow replica trees and record height statistics")
    _add_common(p)

    p = sub.add_parser("verify", help="run the exact-identity suite")
    p.add_argument("--level", choices=("fast", "full"), default="fast")

    p = sub.add_parser("schedule", help="dump the calibrated epoch schedule as CSV")
    _add_common(p)

    p = sub.add_parser("theory", help="emit the bracket/expansion comparison table")
    _add_common(p)
    p.add_argument("--results", default=None, help="results CSV to join (from simulate)")

    p = sub.add_parser("walk", help="export the exact depth-walk pmf as CSV")
    _add_common(p)
    p.add_argument("--n", type=int, default=None, help="walk length (default: first config n)")

    args = ap.parse_args(argv)

    if args.cmd == "verify":
        t0 = time.time()
        results = harness.verify_suite(args.level)
        for r in results:
            print(r.line())
        print(f"verify[{args.level}]: {sum(r.passed for r in results)}/{len(results)} "
              f"checks passed in {time.time() - t0:.1f}s")
        return 0 if all(r.passed for r in results) else 1

    cfg = harness.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed

    if args.cmd == "simulate":
        if args.out is not None:
            cfg.out_results = args.out
        harness.simulate(cfg, threads=args.threads, config_path=args.config)
        print(f"wrote {cfg.out_results} and {cfg.out_summary}")
        return 0

    if args.cmd == "schedule":
        if cfg.regime is None:
            print("config has no [schedule] section", file=sys.stderr)
            return 2
        sched = make_schedule(cfg.regime, cfg.sequence, cfg.schedule_n_max or max(cfg.n_list))
        out = args.out or "schedule.csv"
        harness.schedule_csv(out, sched)
        print(f"wrote {out} (s0={sched.s0}, r0={sched.r0}, t_max={sched.t_max})")
        return 0

    if args.cmd == "theory":
        rows = None
        if args.results:
            rows, seq_dict = _read_results(args.results)
            if seq_dict is not None and seq_dict != cfg.sequence.to_dict():
                print(
                    "results file was produced with a different weight sequence "
                    f"({seq_dict.get('family')}) than the config "
                    f"({cfg.sequence.family})",
                    file=sys.stderr,
                )
                return 2
        table = harness.theory_table(cfg, rows)
        out = args.out or "theory.csv"
        harness.write_theory_csv(out, table)
        flagged = [r["n"] for r in table if r.get("flag_upper")]
        print(f"wrote {out}; rows flagged above the union-bound threshold: {flagged or 'none'}")
        return 0

    if args.cmd == "walk":
        n = args.n or cfg.n_list[0]
        out = args.out or "walk.csv"
        harness.walk_csv(out, cfg.sequence, n)
        print(f"wrote {out}")
        return 0

    raise AssertionError(args.cmd)  # pragma: no cover


def _read_results(path: str):
    import csv as _csv
    import json as _json

    rows = []
    seq_dict = None
    with open(path) as fh:
        first = fh.readline()
        if harness.RESULTS_SCHEMA not in first:
            raise ValueError(f"unrecognised results schema: {first.strip()}")
        pos = fh.tell()
        line = fh.readline()
        if line.startswith("# sequence "):
            seq_dict = _json.loads(line[len("# sequence "):])
        else:
            fh.seek(pos)
        for rec in _csv.DictReader(fh):
            rows.append(
                harness.ReplicaStats(
                    replica=int(rec["replica"]),
                    n=int(rec["n"]),
                    max_height=int(rec["max_height"]),
                    weighted_depth_mean=float(rec["weighted_depth_mean"]),
                    greedy_len=int(rec["greedy_len"]),
                    mean_height=float(rec["mean_height"]),
                    p50_height=int(rec["p50_height"]),
                    p99_height=int(rec["p99_height"]),
                )
            )
    return rows, seq_dict


if __name__ == "__main__":
    raise SystemExit(main())
