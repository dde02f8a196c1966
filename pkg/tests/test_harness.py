import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from wrtsim import harness
from wrtsim.cli import main as cli_main
from wrtsim.weights import WeightSequence, prefix_at

CONFIG = """
[sequence]
family = "harmonic"

[run]
n = [ {n} ]
replicas = {replicas}
seed = {seed}
mode = "height_only"

[output]
results = "{results}"
summary = "{summary}"

[schedule]
variant = "powers_of_log"
alpha = 1.0
eta = 0.0
n_max = {n_max}

[schedule.L]
kind = "one_minus_over_x"
gamma = 0.5772156649015329

[theory]
delta = 0.01
lower_kappa = 3.0
"""


def write_config(tmp_path, n=2000, replicas=8, seed=7, n_max=200000):
    p = tmp_path / "exp.toml"
    p.write_text(
        CONFIG.format(
            n=n,
            replicas=replicas,
            seed=seed,
            results=tmp_path / "results.csv",
            summary=tmp_path / "summary.json",
            n_max=n_max,
        )
    )
    return p


def test_config_roundtrip(tmp_path):
    p = write_config(tmp_path)
    cfg = harness.load_config(str(p))
    assert cfg.sequence.family == "harmonic"
    assert cfg.n_list == [2000]
    assert cfg.replicas == 8
    assert cfg.regime is not None and cfg.regime.variant == "powers_of_log"


def test_simulate_deterministic_outputs(tmp_path):
    p = write_config(tmp_path)
    cfg = harness.load_config(str(p))
    harness.simulate(cfg, threads=1, config_path=str(p))
    first = open(cfg.out_results).read()
    harness.simulate(cfg, threads=2, config_path=str(p))
    second = open(cfg.out_results).read()
    assert first == second  # thread count must not change the artifact
    assert first.startswith(f"# {harness.RESULTS_SCHEMA}")
    summary = json.load(open(cfg.out_summary))
    assert summary["schema"] == "wrtsim-summary v1"
    assert "config_digest" in summary


def test_replicas_n2_trivial(tmp_path):
    rows = harness.run_replicas(WeightSequence.harmonic(), 2, 5, seed=1)
    assert all(r.max_height == 1 for r in rows)


def test_replica_mean_depth_clt():
    # moderate-size version of the mean-depth law: weighted depth + 1 averages
    # to the mean-depth sum within the stated band
    seq = WeightSequence.harmonic()
    n, reps = 2000, 400
    rows = harness.run_replicas(seq, n, reps, seed=3)
    stats = prefix_at(seq, [n])[0]
    q = np.array([seq.weight_at(i) for i in range(1, n + 1)])
    from wrtsim.weights import q_array

    qa = q_array(seq, n)
    var = float(np.sum(qa * (1 - qa)))
    got = np.mean([r.weighted_depth_mean for r in rows]) + 1.0
    assert abs(got - stats.a) <= 3.5 * math.sqrt(var / reps)


def test_verify_fast_level():
    t0 = time.time()
    results = harness.verify_suite("fast")
    elapsed = time.time() - t0
    assert all(r.passed for r in results), [r.line() for r in results]
    assert elapsed < 60
    assert all(r.tolerance <= 1e-10 for r in results[:3])


def test_theory_table_join(tmp_path):
    p = write_config(tmp_path, n=2000, replicas=30)
    cfg = harness.load_config(str(p))
    all_rows = harness.simulate(cfg, config_path=str(p))
    table = harness.theory_table(cfg, [r for rows in all_rows.values() for r in rows])
    assert len(table) == 1
    row = table[0]
    assert row["x_star"] >= 1
    assert "mean_max_height" in row
    assert not row["flag_upper"]  # clean run stays within the union bound
    assert "o(1)" in row["note"] or "o(1)" in (row["expansion_dropped"] or "")
    out = tmp_path / "theory.csv"
    harness.write_theory_csv(str(out), table)
    txt = out.read_text()
    assert txt.startswith(f"# {harness.THEORY_SCHEMA}")
    assert "expansion" in txt


def test_theory_table_without_results(tmp_path):
    p = write_config(tmp_path)
    cfg = harness.load_config(str(p))
    table = harness.theory_table(cfg, None)
    assert "mean_max_height" not in table[0]
    assert table[0]["x_star"] >= 1


def test_cli_end_to_end(tmp_path):
    p = write_config(tmp_path, n=500, replicas=4)
    res = tmp_path / "out.csv"
    rc = cli_main(["simulate", "--config", str(p), "--out", str(res)])
    assert rc == 0
    assert res.exists()
    rc = cli_main(["theory", "--config", str(p), "--results", str(res),
                   "--out", str(tmp_path / "cmp.csv")])
    assert rc == 0
    assert (tmp_path / "cmp.csv").exists()
    rc = cli_main(["schedule", "--config", str(p), "--out", str(tmp_path / "sched.csv")])
    assert rc == 0
    sched_txt = (tmp_path / "sched.csv").read_text()
    assert sched_txt.startswith(f"# {harness.SCHEDULE_SCHEMA}")
    rc = cli_main(["walk", "--config", str(p), "--n", "100", "--out", str(tmp_path / "walk.csv")])
    assert rc == 0
    walk_txt = (tmp_path / "walk.csv").read_text()
    assert walk_txt.startswith(f"# {harness.WALK_SCHEMA}")
    probs = [float(line.split(",")[1]) for line in walk_txt.splitlines()[2:] if "," in line and not line.startswith("#")]
    assert sum(probs) == pytest.approx(1.0, abs=1e-9)


def test_cli_verify_exit_code():
    rc = cli_main(["verify", "--level", "fast"])
    assert rc == 0


def test_cli_theory_sequence_mismatch(tmp_path):
    p = write_config(tmp_path, n=300, replicas=3)
    res = tmp_path / "res.csv"
    assert cli_main(["simulate", "--config", str(p), "--out", str(res)]) == 0
    other = tmp_path / "other.toml"
    other.write_text(
        CONFIG.format(
            n=300, replicas=3, seed=7,
            results=tmp_path / "r2.csv", summary=tmp_path / "s2.json", n_max=1000,
        ).replace('family = "harmonic"', 'family = "power_law"\nalpha = 2.0')
    )
    rc = cli_main(["theory", "--config", str(other), "--results", str(res),
                   "--out", str(tmp_path / "t.csv")])
    assert rc == 2  # descriptor mismatch between files is refused


def test_cli_seed_override(tmp_path):
    p = write_config(tmp_path, n=300, replicas=3, seed=1)
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    cli_main(["simulate", "--config", str(p), "--out", str(out1), "--seed", "99"])
    cli_main(["simulate", "--config", str(p), "--out", str(out2), "--seed", "99"])
    assert out1.read_text() == out2.read_text()
    out3 = tmp_path / "c.csv"
    cli_main(["simulate", "--config", str(p), "--out", str(out3), "--seed", "100"])
    assert out1.read_text() != out3.read_text()
