"""Solver-only checks: no randomness beyond seeded instance generation."""

from __future__ import annotations

import time
from fractions import Fraction

import numpy as np

from .. import electric as el
from ..graph_core import (
    CylinderVertex,
    DirectedEdge,
    Subgraph,
    ambient_neighbors,
    build_cylinder_window,
    edge_boundary,
    edge_key,
    path,
)
from ..reports import BoundCheckReport, upper_bound_verdict
from .config import ConfigError, ExperimentConfig
from .generators import random_connected_subgraph, random_network, random_subgraph_with_vertices

DEFAULT_BALANCE_FIBERS = ("point", "path3", "cycle4")
DEFAULT_BALANCE_DELTAS = (Fraction(1), Fraction(10), Fraction(100))


def _fibers(cfg: ExperimentConfig, default):
    from ..graph_core import parse_fiber
    if cfg.fiber is not None:
        return [cfg.fiber]
    return [parse_fiber(f) for f in cfg.extra.get("fibers", default)]


def exp_balance(cfg: ExperimentConfig) -> BoundCheckReport:
    """All boundary pairs of random connected subgraphs, every start vertex."""
    t0 = time.perf_counter()
    fibers = _fibers(cfg, DEFAULT_BALANCE_FIBERS)
    deltas = [cfg.delta] if cfg.delta is not None else list(cfg.extra.get("deltas", DEFAULT_BALANCE_DELTAS))
    samples = cfg.samples or 50
    levels = int(cfg.extra.get("levels", 8))
    points = []
    worst = None
    for fi, fiber in enumerate(fibers):
        rng = np.random.default_rng([cfg.seed, fi])
        subs = []
        for _ in range(samples):
            cap = levels * fiber.vertex_count * 3
            target = int(rng.integers(1, max(2, min(cap, 40))))
            subs.append(random_connected_subgraph(fiber, levels, target, rng))
        for delta in deltas:
            slack_min, n_pairs, max_boundary = np.inf, 0, 0
            for A in subs:
                rep = el.check_balance_inequality(A, delta, None, fiber)
                b = rep.details["boundary_edges"]
                n_pairs += len(A.vertices) * b * b
                max_boundary = max(max_boundary, b)
                if rep.details["worst_slack"] < slack_min:
                    slack_min = rep.details["worst_slack"]
                    if worst is None or slack_min < worst.details["worst_slack"]:
                        worst = rep
            points.append({"fiber": fiber.name, "delta": delta, "subgraphs": samples,
                           "worst_slack": float(slack_min), "pairs_checked": n_pairs,
                           "max_boundary": max_boundary})
    min_slack = min(p["worst_slack"] for p in points)
    verdict = "pass" if min_slack >= -1e-8 else "fail"
    return BoundCheckReport(
        name="balance", estimate=worst.estimate, ci_low=worst.estimate, ci_high=worst.estimate,
        bound=worst.bound, vacuous=False, verdict=verdict, replications=samples * len(fibers),
        wall_clock=time.perf_counter() - t0,
        details={"worst_slack": min_slack, "tolerance": 1e-8, "points": points})


def _random_pair(net, rng):
    n = len(net)
    i, j = rng.choice(n, size=2, replace=False)
    return net.vertices[int(i)], net.vertices[int(j)]


def exp_commute(cfg: ExperimentConfig) -> BoundCheckReport:
    t0 = time.perf_counter()
    fiber = cfg.fiber or path(3)
    samples = cfg.samples or 20
    rng = np.random.default_rng([cfg.seed, 101])
    points, worst = [], 0.0
    for s in range(samples):
        net = random_network(fiber, int(rng.integers(6, 25)), rng)
        a, z = _random_pair(net, rng)
        gap = el.commute_time_gap(net, a, z)
        worst = max(worst, gap)
        points.append({"instance": s, "vertices": len(net), "gap": gap})
    verdict = "pass" if worst <= 1e-8 else "fail"
    return BoundCheckReport("commute_time", worst, worst, worst, 1e-8, False, verdict, samples,
                            time.perf_counter() - t0, {"points": points})


def exp_rayleigh_thomson(cfg: ExperimentConfig) -> BoundCheckReport:
    t0 = time.perf_counter()
    fiber = cfg.fiber or path(3)
    samples = cfg.samples or 100
    rng = np.random.default_rng([cfg.seed, 202])
    ray_worst, th_worst = np.inf, np.inf
    points = []
    for s in range(samples):
        net = random_network(fiber, int(rng.integers(5, 25)), rng)
        a, z = _random_pair(net, rng)
        mask = rng.random(len(net.edges)) < 0.5
        factors = 1 + 3 * rng.random(len(net.edges))
        g = el.rayleigh_gap(net, a, [z], mask, factors)
        ray_worst = min(ray_worst, g)
        ncyc = len(el.fundamental_cycles(net))
        coef = rng.normal(0, 0.3, size=ncyc)
        h = el.thomson_gap(net, a, [z], coef) if ncyc else 0.0
        th_worst = min(th_worst, h)
        points.append({"instance": s, "rayleigh_gain": g, "thomson_excess": h, "cycles": ncyc})
    ok = ray_worst >= -1e-10 and th_worst >= -1e-10
    worst = float(min(ray_worst, th_worst))
    return BoundCheckReport("rayleigh_thomson", worst, worst, worst, -1e-10, False,
                            "pass" if ok else "fail", samples, time.perf_counter() - t0,
                            {"rayleigh_min_gain": float(ray_worst), "thomson_min_excess": float(th_worst),
                             "points": points})


def random_dag_flow(net: el.Network, rng: np.random.Generator, n_paths: int = 6):
    """Exact acyclic flow from a source to two sinks as a sum of paths.

    Vertices are ranked at random with the source first and the sinks
    last; paths only climb the ranking, so no cycle can form.  Returns
    ``(flow, a, b, z)`` or ``None`` when no path reaches a sink.
    """
    n = len(net)
    perm = [int(i) for i in rng.permutation(n)]
    ia, ib, iz = perm[0], perm[-2], perm[-1]
    rank = {v: p for p, v in enumerate(perm)}
    vals = [Fraction(0)] * len(net.edges)
    used = 0
    for _ in range(n_paths):
        x, trail = ia, []
        while x not in (ib, iz):
            ups = [(j, k) for j, k in net._adj[x] if rank[j] > rank[x]]
            if not ups:
                trail = None
                break
            j, k = ups[int(rng.integers(len(ups)))]
            trail.append((x, k))
            x = j
        if not trail:
            continue
        w = Fraction(int(rng.integers(1, 20)), int(rng.integers(1, 20)))
        for t, k in trail:
            vals[k] += w if net._u[k] == t else -w
        used += 1
    if used == 0:
        return None
    return el.FlowMap(net, vals), net.vertices[ia], net.vertices[ib], net.vertices[iz]


def _current_flow(net: el.Network, rng: np.random.Generator):
    """Exact unit current to two sinks on integer conductances."""
    net = el.Network({e: int(rng.integers(1, 5)) for e in net.edges}, vertices=net.vertices)
    ia, ib, iz = (int(i) for i in rng.choice(len(net), size=3, replace=False))
    a, b, z = net.vertices[ia], net.vertices[ib], net.vertices[iz]
    return el.exact_unit_current(net, a, [b, z]), a, b, z


def exp_flow_decomposition(cfg: ExperimentConfig) -> BoundCheckReport:
    t0 = time.perf_counter()
    fiber = cfg.fiber or path(3)
    samples = cfg.samples or 100
    rng = np.random.default_rng([cfg.seed, 303])
    failures, points = [], []
    done = 0
    while done < samples:
        net = random_network(fiber, int(rng.integers(6, 20)), rng)
        inst = random_dag_flow(net, rng) if done % 2 == 0 else _current_flow(net, rng)
        if inst is None:
            continue
        i, a, b, z = inst
        jb, jz = el.decompose_flow(i, a, b, z)
        pb = el.decomposition_properties(i, jb, b, z)
        pz = el.decomposition_properties(i, jz, z, b)
        exact_sum = all(x + y == w for x, y, w in zip(jb.values, jz.values, i.values))
        ok = all(pb.values()) and all(pz.values()) and exact_sum
        points.append({"instance": done, "kind": "paths" if done % 2 == 0 else "current",
                       "edges": len(net.edges), "ok": ok})
        if not ok:
            failures.append({"instance": done, "to_b": pb, "to_z": pz, "sum": exact_sum})
        done += 1
    frac = len(failures) / samples
    return BoundCheckReport("flow_decomposition", frac, frac, frac, 0.0, False,
                            "pass" if not failures else "fail", samples, time.perf_counter() - t0,
                            {"failures": failures, "points": points})


def shunt_bound(G: int, d: int, eta: float) -> float:
    return 2 * G * G / (eta * d * d)


DEFAULT_SHUNT_GRID = (
    (1, 10, 0.1), (1, 20, 0.05), (1, 40, 0.5), (2, 20, 0.05), (2, 10, 1.0),
    (2, 40, 0.1), (3, 20, 0.5), (3, 30, 0.1), (2, 5, 0.1), (3, 8, 0.5),
)


def exp_shunt(cfg: ExperimentConfig) -> BoundCheckReport:
    """Grid over (|fiber|, d, eta) on full windows and random thinned ones."""
    t0 = time.perf_counter()
    if cfg.d is not None and cfg.eta is not None:
        G = cfg.fiber.vertex_count if cfg.fiber else 2
        grid = [(G, cfg.d, cfg.eta)]
    else:
        grid = [tuple(g) for g in cfg.extra.get("grid", DEFAULT_SHUNT_GRID)]
    rng = np.random.default_rng([cfg.seed, 404])
    points = []
    for G, d, eta in grid:
        if d < 1:
            raise ConfigError("d must be at least 1")
        fiber = cfg.fiber if cfg.fiber is not None and cfg.fiber.vertex_count == G else path(G)
        r = d + 1
        S = list(range(1, d + 1))
        bound = shunt_bound(G, d, eta)
        for kind in ("window", "thinned"):
            A = build_cylinder_window(fiber, 0, r)
            if kind == "thinned":
                A = _thin(A, fiber, rng)
            a = CylinderVertex(0, 0)
            p = el.shunt_hit_probability(A, a, S, r, eta)
            verdict, vac = upper_bound_verdict(p, bound)
            points.append({"fiber_size": G, "d": d, "eta": eta, "instance": kind,
                           "probability": p, "bound": bound, "vacuous": vac, "verdict": verdict})
    nonvac = [p for p in points if not p["vacuous"]]
    verdicts = [p["verdict"] for p in points]
    verdict = "fail" if "fail" in verdicts else ("pass" if nonvac else "vacuous")
    worst = max(points, key=lambda p: p["probability"] / p["bound"])
    return BoundCheckReport("shunt", worst["probability"], worst["probability"], worst["probability"],
                            worst["bound"], not nonvac, verdict, 0, time.perf_counter() - t0,
                            {"non_vacuous_points": len(nonvac), "points": points})


def _thin(A, fiber, rng):
    """Drop random edges while A keeps all its vertices and stays connected."""
    edges = set(A.edges)
    for e in sorted(A.edges):
        if rng.random() < 0.3:
            trial = edges - {e}
            sub = Subgraph.from_edges(trial)
            if sub.vertices == A.vertices and sub.is_connected():
                edges = trial
    return Subgraph(A.vertices, frozenset(edges))



def absorbing_exit_law(A: Subgraph, delta, a, fiber) -> dict:
    """Exit-edge law from the transition matrix of the walk killed on
    leaving A: absorption probabilities B = (I - Q)^-1 R, dense."""
    verts = sorted(A.vertices)
    idx = {v: i for i, v in enumerate(verts)}
    exits = sorted(edge_boundary(A, fiber))
    col = {f: j for j, f in enumerate(exits)}
    n, m = len(verts), len(exits)
    Q = np.zeros((n, n))
    R = np.zeros((n, m))
    w_in = 1.0 + float(delta)
    for v in verts:
        row = {}
        for w in ambient_neighbors(v, fiber):
            if edge_key(v, w) in A.edges:
                row[("in", w)] = w_in
            else:
                row[("out", w)] = 1.0
        total = sum(row.values())
        for (kind, w), c in row.items():
            if kind == "in":
                Q[idx[v], idx[w]] += c / total
            else:
                R[idx[v], col[DirectedEdge(v, w)]] += c / total
    B = np.linalg.solve(np.eye(n) - Q, R)
    i = idx[CylinderVertex(*a)]
    return {f: float(B[i, j]) for j, f in enumerate(exits)}


def exp_exit_oracle(cfg: ExperimentConfig) -> BoundCheckReport:
    """Exit-edge law from the electrical solver against the absorbing chain."""
    t0 = time.perf_counter()
    fibers = _fibers(cfg, DEFAULT_BALANCE_FIBERS)
    samples = cfg.samples or 20
    rng = np.random.default_rng([cfg.seed, 606])
    points, worst = [], 0.0
    for s in range(samples):
        fiber = fibers[s % len(fibers)]
        n_vert = int(rng.integers(2, 13))
        A = random_subgraph_with_vertices(fiber, 6, min(n_vert, 6 * fiber.vertex_count), rng)
        delta = cfg.delta if cfg.delta is not None else Fraction(int(rng.integers(0, 50)), int(rng.integers(1, 4)))
        a = sorted(A.vertices)[int(rng.integers(len(A.vertices)))]
        solver = el.exit_edge_distribution(A, delta, a, fiber)
        oracle = absorbing_exit_law(A, delta, a, fiber)
        diff = max(abs(solver[f] - oracle[f]) for f in oracle)
        worst = max(worst, diff)
        points.append({"instance": s, "fiber": fiber.name, "vertices": len(A.vertices),
                       "delta": delta, "exit_edges": len(oracle), "max_abs_diff": diff})
    verdict = "pass" if worst <= 1e-8 else "fail"
    return BoundCheckReport("exit_oracle", worst, worst, worst, 1e-8, False, verdict, samples,
                            time.perf_counter() - t0, {"points": points})
