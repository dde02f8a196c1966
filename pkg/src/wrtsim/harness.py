"""Experiment orchestration: configs, replica scheduling, CSV/JSON emission.

One experiment is one TOML config plus one artifact directory.  Replicas
fan out over a process pool; every replica derives its stream from
(seed, replica index), so results are identical for any worker count and
merge deterministically by replica index.

Output schemas are versioned with a leading comment line so downstream
consumers can pin themselves to a format.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import engine, theory, walks
from .schedules import Regime, Schedule, make_schedule, theta_expansion_residual
from .svfun import SvDescriptor
from .weights import WeightSequence, prefix_at, q_array

__all__ = [
    "Config",
    "load_config",
    "ReplicaStats",
    "run_replicas",
    "write_results_csv",
    "write_summary_json",
    "simulate",
    "CheckResult",
    "verify_suite",
    "theory_table",
    "write_theory_csv",
    "schedule_csv",
    "walk_csv",
]

RESULTS_SCHEMA = "wrtsim-results v1"
THEORY_SCHEMA = "wrtsim-theory v1"
SCHEDULE_SCHEMA = "wrtsim-schedule v1"
WALK_SCHEMA = "wrtsim-walk v1"
PREFIX_SCHEMA = "wrtsim-prefix v1"


@dataclass
class Config:
    sequence: WeightSequence
    n_list: list[int]
    replicas: int
    seed: int
    mode: str = "height_only"
    regime: Regime | None = None
    schedule_n_max: int | None = None
    delta: float = 0.01
    lower_kappa: float = 3.0
    out_results: str = "results.csv"
    out_summary: str = "summary.json"
    raw: dict = field(default_factory=dict)


def load_config(path: str) -> Config:
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib

    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    try:
        seq = WeightSequence.from_dict(raw["sequence"])
    except KeyError as e:
        raise ValueError(f"config missing required [sequence] field: {e}") from e
    run = raw.get("run", {})
    n_list = run.get("n", [1000])
    if isinstance(n_list, int):
        n_list = [n_list]
    regime = None
    sched_n_max = None
    if "schedule" in raw:
        regime = Regime.from_dict(raw["schedule"])
        sched_n_max = int(raw["schedule"].get("n_max", max(n_list)))
    th = raw.get("theory", {})
    out = raw.get("output", {})
    return Config(
        sequence=seq,
        n_list=[int(v) for v in n_list],
        replicas=int(run.get("replicas", 1)),
        seed=int(run.get("seed", 0)),
        mode=str(run.get("mode", "height_only")),
        regime=regime,
        schedule_n_max=sched_n_max,
        delta=float(th.get("delta", 0.01)),
        lower_kappa=float(th.get("lower_kappa", 3.0)),
        out_results=str(out.get("results", "results.csv")),
        out_summary=str(out.get("summary", "summary.json")),
        raw=raw,
    )


# ----------------------------------------------------------------------
# replica execution
# ----------------------------------------------------------------------


@dataclass
class ReplicaStats:
    replica: int
    n: int
    max_height: int
    weighted_depth_mean: float
    greedy_len: int
    mean_height: float
    p50_height: int
    p99_height: int


def _replica_worker(args) -> tuple:
    seq_dict, n, seed, replica, mode = args
    seq = WeightSequence.from_dict(seq_dict)
    st = engine.grow(seq, n, seed=(seed, replica), mode=mode)
    h = st.heights
    return (
        replica,
        n,
        int(st.max_height),
        float(st.weighted_depth_mean),
        int(len(st.greedy_path) - 1),
        float(h.mean()),
        int(np.percentile(h, 50)),
        int(np.percentile(h, 99)),
    )


def run_replicas(
    seq: WeightSequence,
    n: int,
    replicas: int,
    seed: int,
    mode: str = "height_only",
    threads: int = 1,
) -> list[ReplicaStats]:
    """Grow ``replicas`` independent trees; deterministic for any thread count."""
    tasks = [(seq.to_dict(), n, seed, r, mode) for r in range(replicas)]
    if threads <= 1:
        rows = [_replica_worker(t) for t in tasks]
    else:
        chunk = max(1, replicas // (8 * threads))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_replica_worker, tasks, chunksize=chunk))
    rows.sort(key=lambda r: r[0])
    return [ReplicaStats(*r) for r in rows]


def write_results_csv(path: str, rows: list[ReplicaStats], seq: WeightSequence | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {RESULTS_SCHEMA}\n")
        if seq is not None:
            fh.write(f"# sequence {json.dumps(seq.to_dict(), sort_keys=True)}\n")
        w = csv.writer(fh)
        w.writerow(
            [
                "replica",
                "n",
                "max_height",
                "weighted_depth_mean",
                "greedy_len",
                "mean_height",
                "p50_height",
                "p99_height",
            ]
        )
        for r in rows:
            w.writerow(
                [
                    r.replica,
                    r.n,
                    r.max_height,
                    f"{r.weighted_depth_mean:.12g}",
                    r.greedy_len,
                    f"{r.mean_height:.12g}",
                    r.p50_height,
                    r.p99_height,
                ]
            )


def _git_hash() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except Exception:
        pass
    return "unknown"


def write_summary_json(path: str, cfg: Config, all_rows: dict, elapsed: float, config_path=None) -> None:
    digest = "unknown"
    if config_path and os.path.exists(config_path):
        digest = hashlib.sha256(open(config_path, "rb").read()).hexdigest()
    summary = {
        "schema": "wrtsim-summary v1",
        "git_hash": _git_hash(),
        "config_digest": digest,
        "seed": cfg.seed,
        "replicas": cfg.replicas,
        "mode": cfg.mode,
        "elapsed_sec": elapsed,
        "per_n": {
            str(n): {
                "mean_max_height": float(np.mean([r.max_height for r in rows])),
                "mean_weighted_depth": float(np.mean([r.weighted_depth_mean for r in rows])),
                "mean_greedy_len": float(np.mean([r.greedy_len for r in rows])),
            }
            for n, rows in all_rows.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)


def simulate(cfg: Config, threads: int = 1, config_path: str | None = None) -> dict:
    """Run the configured replica sweep; writes results CSV + JSON summary."""
    t0 = time.time()
    all_rows: dict = {}
    for n in cfg.n_list:
        all_rows[n] = run_replicas(cfg.sequence, n, cfg.replicas, cfg.seed, cfg.mode, threads)
    flat = [r for n in cfg.n_list for r in all_rows[n]]
    write_results_csv(cfg.out_results, flat, seq=cfg.sequence)
    write_summary_json(cfg.out_summary, cfg, all_rows, time.time() - t0, config_path)
    return all_rows


# ----------------------------------------------------------------------
# verification suite
# ----------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    tolerance: float
    observed: float
    passed: bool

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: observed {self.observed:.3e} (tolerance {self.tolerance:.1e})"


def _example_tables(n: int) -> list[tuple[str, WeightSequence]]:
    fams = [
        ("harmonic", WeightSequence.harmonic()),
        ("exp_log_power(1,0.5)", WeightSequence.exp_log_power(1.0, 0.5)),
        ("log_power(2)", WeightSequence.log_power(2.0)),
        ("power_law(2)", WeightSequence.power_law(2.0)),
    ]
    out = []
    for name, s in fams:
        out.append((name, WeightSequence.table(s.weight_block(1, n + 1).tolist())))
    return out


def _walk_path_law(seq: WeightSequence, n: int) -> dict:
    import itertools

    q = q_array(seq, n)
    law: dict = {}
    for bits in itertools.product([0, 1], repeat=n - 1):
        p = 1.0
        for i, b in enumerate(bits):
            p *= q[i + 1] if b else 1.0 - q[i + 1]
        path = (0,) + tuple(np.cumsum(bits))
        law[path] = law.get(path, 0.0) + p
    return law


def check_many_to_one(n_tables: int, n: int, seed: int = 0) -> CheckResult:
    """TV between the enumerated weight-biased ancestral path law and the walk law."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    cases = _example_tables(n) + [
        (f"random{k}", WeightSequence.table(rng.uniform(0.05, 3.0, n).tolist()))
        for k in range(n_tables)
    ]
    for _, seq in cases:
        lhs = engine.enumerate_small(seq, n).weighted_path_law()
        rhs = _walk_path_law(seq, n)
        tv = 0.5 * sum(abs(lhs.get(k, 0.0) - rhs.get(k, 0.0)) for k in set(lhs) | set(rhs))
        worst = max(worst, tv)
    return CheckResult("ancestral path law vs walk law (TV)", 1e-10, worst, worst <= 1e-10)


def check_many_to_two(n_tables: int, n: int, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    cases = [WeightSequence.table(rng.uniform(0.05, 3.0, n).tolist()) for _ in range(n_tables)]
    cases += [s for _, s in _example_tables(n)]
    fs = [("one",), ("label_eq", 1)]
    Fs = [("one",), ("final_le", 1), ("final_eq", 2)]
    for seq in cases:
        for f in fs:
            for F in Fs:
                res = walks.many_to_two_check(seq, n, f, F)
                worst = max(worst, res.diff)
    return CheckResult("pair identity enumeration vs coupled walk", 1e-10, worst, worst <= 1e-10)


def _tilt_combos(seed: int, count: int, n_cap: int):
    rng = np.random.default_rng(seed)
    fams = [
        WeightSequence.harmonic(),
        WeightSequence.power_law(2.0),
        WeightSequence.log_power(2.0),
        WeightSequence.constant(1.0),
    ]
    for k in range(count):
        seq = fams[k % len(fams)]
        n = int(rng.integers(40, n_cap))
        tn = int(rng.integers(3, 7))
        cuts = np.unique(
            np.clip(np.sort(rng.integers(2, n, size=tn - 1)), 2, n - 1)
        ).tolist()
        epochs = [1] + cuts + [n]
        tn = len(epochs) - 1
        style = k % 3
        if style == 0:
            theta = np.zeros(tn)
        elif style == 1:
            theta = np.full(tn, float(rng.uniform(0.1, 1.0)))
        else:
            theta = np.cumsum(rng.uniform(0.0, 0.8, tn))
            theta[: int(rng.integers(0, tn))] = 0.0
        yield seq, epochs, theta, n


def check_tilted_identity(count: int, n_cap: int = 1000, seed: int = 2) -> CheckResult:
    worst = 0.0
    for seq, epochs, theta, n in _tilt_combos(seed, count, n_cap):
        res = walks.tilted_identity_eval(seq, epochs, theta, n)
        bp = walks.barrier_probability(seq, epochs, n)
        rel = abs(res.lhs - bp) / max(bp, 1e-300)
        worst = max(worst, rel)
        if res.lhs > res.upper_bound * (1 + 1e-12):
            worst = max(worst, 1.0)
    return CheckResult("tilted identity vs barrier (rel)", 1e-10, worst, worst <= 1e-10)


def check_moment_sandwich(count: int, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(count):
        n = int(rng.integers(12, 60))
        seq = WeightSequence.table(rng.uniform(0.05, 3.0, n).tolist())
        ncuts = int(rng.integers(2, 4))
        cuts = sorted(set(rng.integers(2, n, size=ncuts).tolist()))
        epochs = [1] + cuts + [n]
        tn = len(epochs) - 1
        theta = np.cumsum(rng.uniform(0.0, 0.6, tn))
        rep = walks.moment_report(seq, epochs, theta, n, T=0)
        viol = 0.0
        if rep.first_moment_lower > rep.first_moment_exact * (1 + 1e-12):
            viol = max(viol, rep.first_moment_lower / rep.first_moment_exact - 1)
        if rep.first_moment_exact > rep.first_moment_upper * (1 + 1e-12):
            viol = max(viol, rep.first_moment_exact / rep.first_moment_upper - 1)
        if rep.second_moment_exact is not None:
            if rep.second_moment_exact > rep.second_moment_bound * (1 + 1e-12):
                viol = max(viol, rep.second_moment_exact / rep.second_moment_bound - 1)
        worst = max(worst, viol)
    return CheckResult("moment envelopes contain exact values", 1e-12, worst, worst <= 1e-12)


def verify_suite(level: str = "fast") -> list[CheckResult]:
    """The identity suite behind the verify subcommand.

    fast: small table counts, finishes well under a minute.
    full: acceptance-scale counts (50 tables, 20 tilt combos, n up to 1e3).
    """
    if level == "fast":
        return [
            check_many_to_one(10, 6),
            check_many_to_two(6, 5),
            check_tilted_identity(8, 200),
            check_moment_sandwich(6),
        ]
    if level == "full":
        return [
            check_many_to_one(50, 7),
            check_many_to_two(50, 6),
            check_tilted_identity(20, 1000),
            check_moment_sandwich(12),
        ]
    raise ValueError("level must be 'fast' or 'full'")


# ----------------------------------------------------------------------
# theory comparison table
# ----------------------------------------------------------------------


def _lower_index_sequence(kappa: float, n: int) -> list[int]:
    iseq = [1]
    r = 1
    while True:
        v = int(math.exp(kappa**r))
        if v > n:
            break
        if v > iseq[-1]:
            iseq.append(v)
        r += 1
    return iseq


def theory_table(cfg: Config, results_rows: list[ReplicaStats] | None = None) -> list[dict]:
    """Rows comparing finite-n brackets and expansions with simulation data.

    The expansion columns are first-order formulas with their o(1) dropped;
    at double/triple-log scales they are NOT quantitative predictions at
    reachable n, so the table flags rows only against the rigorous columns
    (union-bound threshold, greedy-chain criterion) and reports the
    normalised expansion gap as a trend diagnostic (see the ``note`` field).

    ``frac_greedy_short`` counts replicas whose first-child chain ends below
    the criterion's floor; a chain that short necessarily fell behind the
    index sequence, so exceeding the bound (``flag_lower``) is sound, sufficient
    evidence of a criterion violation.
    """
    seq = cfg.sequence
    by_n: dict[int, list[ReplicaStats]] = {}
    for r in results_rows or []:
        by_n.setdefault(r.n, []).append(r)
    rows = []
    for n in cfg.n_list:
        pmf = walks.bernoulli_walk_pmf(seq, n)
        x_star = theory.crude_upper_threshold(seq, n, cfg.delta, pmf=pmf)
        lower_bound = None
        t_lower = None
        if seq.nonincreasing is True:
            iseq = _lower_index_sequence(cfg.lower_kappa, n)
            if len(iseq) >= 2:
                lower_bound = theory.crude_lower_criterion(seq, iseq)
                t_lower = len(iseq) - 1
        expansion = None
        iid_value = None
        gap_norm = None
        if cfg.regime is not None and cfg.regime.variant == "powers_of_log":
            L = cfg.regime.L or SvDescriptor.const(1.0)
            logL = float(L.log_value(max(math.log(n), L.x0)))
            expansion = theory.height_expansion_powers_of_log(n, cfg.regime.alpha, logL)
            if cfg.regime.alpha < 1:
                iid_value = theory.iid_max_expansion(
                    "powers_of_log_lt1", n, alpha=cfg.regime.alpha, logL_at_logn=logL
                ).value
            else:
                iid_value = theory.iid_max_expansion("powers_of_log_gt1", n).value
        elif cfg.regime is not None:
            beta = cfg.regime.beta if cfg.regime.variant != "quick_beta_eq1" else 1.0
            expansion = theory.height_first_order_quick(n, cfg.regime.alpha, beta)
            iid_value = theory.iid_max_expansion(
                cfg.regime.variant, n, alpha=cfg.regime.alpha, beta=beta
            ).value
        row = {
            "n": n,
            "x_star": x_star,
            "delta": cfg.delta,
            "crude_lower_bound": lower_bound,
            "t_lower_minus_1": t_lower,
            "expansion": expansion.value if expansion else None,
            "expansion_dropped": expansion.dropped if expansion else None,
            "iid_max": iid_value,
            "note": "expansion omits o(1); compare trends, not points",
        }
        if n in by_n:
            rows_n = by_n[n]
            mx = np.array([r.max_height for r in rows_n])
            row["mean_max_height"] = float(mx.mean())
            row["mean_height"] = float(np.mean([r.mean_height for r in rows_n]))
            row["frac_above_x_star"] = float(np.mean(mx >= x_star))
            row["flag_upper"] = bool(
                row["frac_above_x_star"]
                > cfg.delta + 3 * math.sqrt(cfg.delta * (1 - cfg.delta) / len(rows_n))
            )
            if t_lower is not None:
                gl = np.array([r.greedy_len for r in rows_n])
                row["frac_greedy_short"] = float(np.mean(gl < t_lower))
                row["flag_lower"] = bool(
                    row["frac_greedy_short"]
                    > lower_bound
                    + 3 * math.sqrt(max(lower_bound * (1 - lower_bound), 1e-12) / len(rows_n))
                )
            if expansion is not None:
                ln, lln = math.log(n), math.log(math.log(n))
                gap_norm = abs(float(mx.mean()) - expansion.value) / (ln / lln**2)
                row["expansion_gap_normalised"] = gap_norm
        rows.append(row)
    return rows


def write_theory_csv(path: str, rows: list[dict]) -> None:
    cols = [
        "n",
        "mean_height",
        "mean_max_height",
        "x_star",
        "delta",
        "frac_above_x_star",
        "flag_upper",
        "crude_lower_bound",
        "t_lower_minus_1",
        "frac_greedy_short",
        "flag_lower",
        "expansion",
        "expansion_gap_normalised",
        "expansion_dropped",
        "iid_max",
        "note",
    ]
    with open(path, "w", newline="") as fh:
        fh.write(f"# {THEORY_SCHEMA}\n")
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def schedule_csv(path: str, schedule: Schedule) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {SCHEDULE_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["t", "i_t", "theta_t", "a_at_i_t", "key_quantity_log"])
        for row in schedule.csv_rows():
            w.writerow([row[0], row[1], f"{row[2]:.12g}", f"{row[3]:.12g}", f"{row[4]:.12g}"])


def walk_csv(path: str, seq: WeightSequence, n: int) -> None:
    pmf = walks.bernoulli_walk_pmf(seq, n)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {WALK_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["value", "prob"])
        for k, p in enumerate(pmf.probs):
            w.writerow([pmf.offset + k, f"{p:.17g}"])
        fh.write(f"# trunc_loss {pmf.trunc_loss:.3e}\n")


def prefix_csv(path: str, seq: WeightSequence, checkpoints) -> None:
    stats = prefix_at(seq, checkpoints)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {PREFIX_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(["n", "W_n", "a_n", "s2_n", "K_n"])
        for s in stats:
            w.writerow([s.n, f"{s.W:.17g}", f"{s.a:.17g}", f"{s.s2:.17g}", f"{s.K:.17g}"])


def histogram_csv(path: str, state) -> None:
    """Depth histogram of one grown tree (height, vertex count)."""
    hist = np.bincount(state.heights)
    with open(path, "w", newline="") as fh:
        fh.write("# wrtsim-histogram v1\n")
        w = csv.writer(fh)
        w.writerow(["height", "count"])
        for h, c in enumerate(hist):
            w.writerow([h, int(c)])


def tree_csv(path: str, state) -> None:
    """Full-tree export: one row per vertex with parent label and height."""
    if state.parents is None:
        raise ValueError("tree export needs a tree grown in full mode")
    with open(path, "w", newline="") as fh:
        fh.write("# wrtsim-tree v1\n")
        w = csv.writer(fh)
        w.writerow(["i", "parent", "height"])
        for i in range(state.n):
            w.writerow([i + 1, int(state.parents[i]), int(state.heights[i])])


def moment_report_csv(path: str, reports) -> None:
    """Moment diagnostics rows (one per evaluated size)."""
    cols = [
        "n",
        "t_n",
        "T",
        "first_moment_exact",
        "first_moment_lower",
        "first_moment_upper",
        "E_window",
        "delta1",
        "delta1_tail_bound",
        "delta2",
        "second_moment_exact",
        "second_moment_bound",
    ]
    with open(path, "w", newline="") as fh:
        fh.write("# wrtsim-moments v1\n")
        w = csv.writer(fh)
        w.writerow(cols)
        for r in reports:
            w.writerow([getattr(r, c) for c in cols])
