"""The fifteen acceptance criteria at their stated sizes and tolerances.

Each test records one PASS/FAIL line (shown in the terminal summary) and
then asserts.  Wall-clock budgets are part of each criterion and are
checked too.
"""

from __future__ import annotations

import json
import math
import time
from fractions import Fraction

import pytest

from orrw import cli
from orrw.experiments import ExperimentConfig
from orrw.experiments import deterministic as det
from orrw.experiments import network_mc as nmc
from orrw.experiments import orrw_mc as omc
from orrw.graph_core import parse_fiber

from .oracles import fraction_exit_law

pytestmark = pytest.mark.slow


def _check(record, number, title, ok, budget_s, elapsed, info=""):
    within = elapsed <= budget_s
    status = "PASS" if ok and within else "FAIL"
    timing = f"{elapsed:.1f}s / budget {budget_s:.0f}s"
    record(f"criterion {number:>2} {status}  {title}: {info} ({timing})")
    assert ok, f"criterion {number} ({title}) failed: {info}"
    assert within, f"criterion {number} ({title}) exceeded its time budget: {timing}"


def test_criterion_01_balance(acceptance_line):
    t0 = time.perf_counter()
    rep = det.exp_balance(ExperimentConfig(samples=50, seed=1))
    dt = time.perf_counter() - t0
    fibers = {p["fiber"] for p in rep.details["points"]}
    deltas = {p["delta"] for p in rep.details["points"]}
    ok = (rep.verdict == "pass" and rep.details["worst_slack"] >= -1e-8
          and fibers == {"point", "path3", "cycle4"} and deltas == {1, 10, 100})
    _check(acceptance_line, 1, "exit-edge balance", ok, 120, dt,
           f"worst slack {rep.details['worst_slack']:.3e} over {len(rep.details['points'])} (fiber, delta) points")


def test_criterion_02_oracle_equivalence(acceptance_line):
    t0 = time.perf_counter()
    rep = det.exp_exit_oracle(ExperimentConfig(samples=20, seed=2))
    # second, exact route on the same instances
    exact_worst = 0.0
    import numpy as np
    from orrw import electric as el
    from orrw.experiments.generators import random_subgraph_with_vertices
    rng = np.random.default_rng([2, 7])
    for s in range(20):
        fiber = parse_fiber(("point", "path3", "cycle4")[s % 3])
        A = random_subgraph_with_vertices(fiber, 6, min(int(rng.integers(2, 13)), 6 * fiber.vertex_count), rng)
        delta = Fraction(int(rng.integers(0, 50)), int(rng.integers(1, 4)))
        a = sorted(A.vertices)[int(rng.integers(len(A.vertices)))]
        got = el.exit_edge_distribution(A, delta, a, fiber)
        want = fraction_exit_law(A, delta, a, fiber)
        exact_worst = max(exact_worst, max(abs(got[f] - float(want[f])) for f in want))
    dt = time.perf_counter() - t0
    sizes = [p["vertices"] for p in rep.details["points"]]
    ok = rep.verdict == "pass" and rep.estimate <= 1e-8 and exact_worst <= 1e-8 and max(sizes) <= 12
    _check(acceptance_line, 2, "exit law vs absorbing chain", ok, 60, dt,
           f"max |diff| {rep.estimate:.2e} (float chain), {exact_worst:.2e} (exact chain), 20+20 instances")


def test_criterion_03_current_crossings(acceptance_line):
    t0 = time.perf_counter()
    rep = nmc.exp_current_crossings(ExperimentConfig(samples=5, replications=100_000, seed=3))
    dt = time.perf_counter() - t0
    pts = rep.details["points"]
    ok = rep.verdict == "pass" and len(pts) == 15 and all(p["z"] <= 4 for p in pts)
    _check(acceptance_line, 3, "current as crossings", ok, 300, dt,
           f"worst |mean - current| = {max(p['z'] for p in pts):.2f} SE over {len(pts)} edges")


def test_criterion_04_commute(acceptance_line):
    t0 = time.perf_counter()
    rep = det.exp_commute(ExperimentConfig(samples=20, seed=4))
    dt = time.perf_counter() - t0
    _check(acceptance_line, 4, "commute time identity", rep.verdict == "pass" and rep.estimate <= 1e-8, 60, dt,
           f"max gap {rep.estimate:.2e} on 20 networks")


def test_criterion_05_rayleigh_thomson(acceptance_line):
    t0 = time.perf_counter()
    rep = det.exp_rayleigh_thomson(ExperimentConfig(samples=100, seed=5))
    dt = time.perf_counter() - t0
    d = rep.details
    ok = rep.verdict == "pass" and d["rayleigh_min_gain"] >= -1e-10 and d["thomson_min_excess"] >= -1e-10
    _check(acceptance_line, 5, "Rayleigh and Thomson", ok, 60, dt,
           f"min conductance gain {d['rayleigh_min_gain']:.2e}, min energy excess {d['thomson_min_excess']:.2e}")


def test_criterion_06_flow_decomposition(acceptance_line):
    t0 = time.perf_counter()
    rep = det.exp_flow_decomposition(ExperimentConfig(samples=100, seed=6))
    dt = time.perf_counter() - t0
    ok = rep.verdict == "pass" and not rep.details["failures"] and len(rep.details["points"]) == 100
    _check(acceptance_line, 6, "flow decomposition", ok, 60, dt,
           f"{len(rep.details['failures'])} failures on 100 acyclic flows (exact arithmetic)")


def test_criterion_07_shunt(acceptance_line):
    t0 = time.perf_counter()
    rep = det.exp_shunt(ExperimentConfig(seed=7))
    dt = time.perf_counter() - t0
    nonvac = rep.details["non_vacuous_points"]
    ok = rep.verdict == "pass" and nonvac >= 5 and all(
        p["probability"] <= p["bound"] for p in rep.details["points"] if not p["vacuous"])
    _check(acceptance_line, 7, "shunt inequality", ok, 60, dt,
           f"{nonvac} non-vacuous points, worst ratio {rep.estimate / rep.bound:.3f}")


def test_criterion_08_local_time(acceptance_line):
    t0 = time.perf_counter()
    rep = nmc.exp_local_time(ExperimentConfig(replications=10_000, seed=8))
    dt = time.perf_counter() - t0
    pts = rep.details["points"]
    head = next(p for p in pts if (p["fiber_size"], p["d"], p["k"]) == (1, 100, 25))
    others = [p for p in pts if p is not head and not p["vacuous"]]
    checked = [p for p in pts if not p["vacuous"]]
    ok = (rep.verdict == "pass" and abs(head["bound_poly"] - 0.1414) < 1e-4 and len(others) >= 4
          and all(p["ci_high"] <= min(b for b in (p["bound_poly"], p["bound_exp"]) if b < 1) for p in checked))
    _check(acceptance_line, 8, "local-time bound", ok, 600, dt,
           f"head upper CI {head['ci_high']:.4f} vs {head['bound_poly']:.4f}; {len(others)} further non-vacuous points")


def test_criterion_09_hitfront(acceptance_line):
    t0 = time.perf_counter()
    rep = omc.exp_hitfront(ExperimentConfig(replications=10_000, seed=9))
    dt = time.perf_counter() - t0
    pts = rep.details["points"]
    sizes = {parse_fiber(p["fiber"]).vertex_count for p in pts}
    ok = sizes == {2, 3} and all(p["ci_low"] >= 0.5 and p["horizon"] == 4**6 * parse_fiber(p["fiber"]).vertex_count**6
                                 for p in pts)
    _check(acceptance_line, 9, "same-level hitting lemma", ok, 900, dt,
           "lower CIs " + ", ".join(f"{p['fiber']}{tuple(p['b'])}={p['ci_low']:.4f}" for p in pts))


def test_criterion_10_outbound(acceptance_line):
    t0 = time.perf_counter()
    rep = nmc.exp_outbound(ExperimentConfig(replications=10_000, seed=10))
    dt = time.perf_counter() - t0
    grid = [p for p in rep.details["points"] if p["kind"] == "grid"]
    nonvac = [p for p in grid if not p["vacuous"]]
    ok = (rep.verdict == "pass" and len(nonvac) >= 1
          and all(p["ci_high"] <= p["bound"] for p in nonvac)
          and all(p["verdict"] == "vacuous" for p in grid if p["vacuous"]))
    _check(acceptance_line, 10, "outbound bound", ok, 1800, dt,
           f"{len(nonvac)} non-vacuous points (max upper CI {max(p['ci_high'] for p in nonvac):.2e}), "
           f"{len(grid) - len(nonvac)} vacuous; trend monotone: {rep.details['trend_monotone']}")


def test_criterion_11_martingale(acceptance_line):
    t0 = time.perf_counter()
    rep = omc.exp_martingale(ExperimentConfig(horizon=10_000, replications=100_000, seed=11))
    dt = time.perf_counter() - t0
    pts = rep.details["points"]
    combos = {(p["fiber"], p["delta"]) for p in pts}
    want = {(f, Fraction(d)) for f in ("point", "cycle4") for d in (0, 1, 100)}
    ok = (combos == want and all(p["verdict"] == "pass" and p["recompute_failures"] == 0
                                 and p["replay_failures"] == 0 for p in pts)
          and all(abs(p["mean"]) <= 4 * p["se"] or (p["se"] == 0 and p["mean_exact"] == 0) for p in pts))
    _check(acceptance_line, 11, "martingale", ok, 1200, dt,
           f"max |mean|/SE = {max(p['z'] for p in pts):.2f}; recompute failures "
           f"{sum(p['recompute_failures'] for p in pts)}")


def test_criterion_12_recurrence_proxy(acceptance_line):
    t0 = time.perf_counter()
    rep = omc.exp_gamblers_ruin(ExperimentConfig(fiber="path3", delta=1000, seed=12))
    dt = time.perf_counter() - t0
    pts = rep.details["points"]
    dbl = [p for p in pts if p.get("kind") != "control" and p["race"] == "double"]
    ctrl = [p for p in pts if p.get("kind") == "control"]
    ok = (sorted(p["x"] for p in dbl) == [50, 100, 200] and rep.details["below_half"] and rep.details["trend_ok"]
          and all(p["estimate"] < 0.5 and not p["invalid"] for p in dbl)
          and ctrl and all(p["verdict"] == "pass" for p in ctrl))
    _check(acceptance_line, 12, "recurrence proxy", ok, 2700, dt,
           "P[H_2x < H_x,0] " + ", ".join(f"x={p['x']}: {p['estimate']:.3f}" for p in dbl)
           + "; control z " + ", ".join(f"{p['oracle_z']:.2f}" for p in ctrl))


def test_criterion_13_shape(acceptance_line):
    t0 = time.perf_counter()
    rep = omc.exp_shape(ExperimentConfig(fiber="point", delta=1000, replications=200, seed=13))
    dt = time.perf_counter() - t0
    ok = (max(rep.n_grid) <= 2000 and rep.replications >= 100 and math.isfinite(rep.slope_ci[1])
          and rep.slope_ci[1] < 0.5 and rep.verdict == "pass")
    _check(acceptance_line, 13, "shape proxy", ok, 3600, dt,
           f"slope {rep.slope:.3f}, 99% CI [{rep.slope_ci[0]:.3f}, {rep.slope_ci[1]:.3f}], "
           f"{rep.replications} replicas, n <= {max(rep.n_grid)}")


def test_criterion_14_return_times(acceptance_line):
    t0 = time.perf_counter()
    rep = omc.exp_return_times(ExperimentConfig(fiber="path3", delta=1000, seed=14))
    dt = time.perf_counter() - t0
    changes = {i: m.get("rel_change", math.inf) for i, m in rep.moments.items()}
    ctrl = rep.details["control"]
    ok = (set(range(6)) <= set(changes) and all(c < 0.1 for c in changes.values())
          and ctrl["diverges"] and rep.verdict == "pass")
    _check(acceptance_line, 14, "return-time stability", ok, 3600, dt,
           "relative change " + ", ".join(f"i={i}: {c:.4f}" for i, c in sorted(changes.items()))
           + f"; control pooled change {ctrl['pooled_rel_change']:.3f}")


def test_criterion_15_determinism(acceptance_line, tmp_path, monkeypatch):
    t0 = time.perf_counter()
    argv = [
        ["run", "balance", "--samples", "10", "--seed", "15"],
        ["run", "current_crossings", "--samples", "2", "--reps", "5000", "--seed", "15"],
        ["run", "hitfront", "--fiber", "path2", "--reps", "600", "--seed", "15"],
        ["run", "martingale", "--fiber", "cycle4", "--delta", "1/3", "--horizon", "500", "--reps", "700"],
        ["run", "gamblers_ruin", "--fiber", "path2", "--delta", "20", "--x", "5", "--reps", "300",
         "--set", "control_reps=600"],
        ["run", "shape", "--fiber", "path2", "--delta", "50", "--reps", "300", "--set", "n_grid=(2, 4, 8)"],
        ["run", "return_times", "--fiber", "path2", "--delta", "50", "--reps", "300", "--horizon", "20000",
         "--set", "control_reps=300"],
    ]
    identical = []
    for k, args in enumerate(argv):
        out = tmp_path / f"run{k}"
        monkeypatch.setenv("ORRW_THREADS", "1")
        assert cli.main(args + ["--out", str(out), "--format", "both"]) in (0, 1)
        monkeypatch.setenv("ORRW_THREADS", "2")
        code = cli.main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / f"replay{k}")])
        identical.append(code == 0 or _same_reports(out, tmp_path / f"replay{k}"))
    dt = time.perf_counter() - t0
    _check(acceptance_line, 15, "determinism", all(identical), 1800, dt,
           f"{sum(identical)}/{len(identical)} manifests replayed byte-identically across worker counts")


def _same_reports(a, b):
    m = json.loads((a / "manifest.json").read_text())
    for e in m["experiments"]:
        for p in e["reports"].values():
            name = p.rsplit("/", 1)[-1]
            if (a / name).read_bytes() != (b / name).read_bytes():
                return False
    return True
