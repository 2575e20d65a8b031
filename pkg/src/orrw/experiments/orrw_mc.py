"""Monte Carlo campaigns for the once-reinforced walk itself."""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np
from scipy import stats

from .. import _layout as L
from ..graph_core import FiberGraph, parse_fiber, path, point
from ..reports import (
    BoundCheckReport,
    ReturnTimeReport,
    ShapeReport,
    combine_verdicts,
    lower_bound_verdict,
    mean_and_se,
    upper_bound_verdict,
    wilson_interval,
)
from ..walks import (
    HitLevel,
    HitVertex,
    LevelComplete,
    MaxSteps,
    OrrwState,
    RngStream,
    VertexCount,
    as_delta,
    martingale_value,
    range_extents,
    replay_martingale,
    run_until,
)
from .config import ConfigError, ExperimentConfig
from .runner import map_blocks


def _fiber(spec) -> FiberGraph:
    return spec if isinstance(spec, FiberGraph) else parse_fiber(spec)


# ---------------------------------------------------------------------------
# hitting a vertex of the starting level


HITFRONT_GRID = (("path2", (0, 1)), ("path3", (0, 1)), ("path3", (0, 2)))


def hitfront_horizon(G: int) -> int:
    return 4**6 * G**6


def _hit_block(seed, key, start, stop, params):
    state = OrrwState(params["fiber"], 0, params["a"], record_events=False).freeze()
    conds = [HitVertex(params["b"]), MaxSteps(params["horizon"])]
    out = []
    for i in range(start, stop):
        state.reset()
        out.append(run_until(state, conds, RngStream(seed, (key, i))).stop_reason == "hit_vertex")
    return out


def exp_hitfront(cfg: ExperimentConfig) -> BoundCheckReport:
    """Simple walk (delta = 0) from (0, 0) to a vertex b of level 0."""
    t0 = time.perf_counter()
    reps = cfg.replications or 10_000
    if cfg.fiber is not None:
        b = tuple(cfg.extra.get("b", (0, cfg.fiber.vertex_count - 1)))
        grid = [(cfg.fiber, b)]
    else:
        grid = [(_fiber(f), tuple(b)) for f, b in cfg.extra.get("grid", HITFRONT_GRID)]
    points = []
    for pi, (fiber, b) in enumerate(grid):
        if b[0] != 0:
            raise ConfigError("a and b must lie on the same level")
        horizon = cfg.horizon if cfg.horizon is not None else hitfront_horizon(fiber.vertex_count)
        params = {"fiber": fiber, "a": (0, 0), "b": b, "horizon": horizon}
        hits = sum(map_blocks(_hit_block, reps, cfg.seed, (909, pi), params, progress=f"hitfront {fiber.name}"))
        lo, hi = wilson_interval(hits, reps, cfg.confidence)
        est = hits / reps
        verdict, vac = lower_bound_verdict(lo, 0.5)
        if verdict == "fail" and est >= 0.5:
            verdict = "pass"  # estimate above 1/2 with the interval straddling it
        points.append({"fiber": fiber.name, "b": list(b), "horizon": horizon, "estimate": est,
                       "ci_low": lo, "ci_high": hi, "bound": 0.5, "vacuous": vac, "verdict": verdict})
    head = min(points, key=lambda p: p["ci_low"])
    return BoundCheckReport("hitfront", head["estimate"], head["ci_low"], head["ci_high"], 0.5, False,
                            combine_verdicts(p["verdict"] for p in points), reps * len(points),
                            time.perf_counter() - t0, {"points": points})


# ---------------------------------------------------------------------------
# martingale


MARTINGALE_GRID = tuple((f, Fraction(d)) for f in ("point", "cycle4") for d in (0, 1, 100))


def _martingale_block(seed, key, start, stop, params):
    fiber, delta, T, n_replay = params["fiber"], params["delta"], params["horizon"], params["replay"]
    fast = OrrwState(fiber, delta).freeze()
    slow = OrrwState(fiber, delta, record_path=True).freeze() if start < n_replay else None
    out = []
    for i in range(start, stop):
        state = slow if i < n_replay else fast
        state.reset()
        tr = run_until(state, [MaxSteps(T)], RngStream(seed, (key, i)))
        m = state.martingale
        ok_log = martingale_value(tr) == m
        ok_replay = replay_martingale(tr) == m if i < n_replay else None
        out.append((state.position.level, state.horizontal_balance, ok_log, ok_replay))
    return out


def exp_martingale(cfg: ExperimentConfig) -> BoundCheckReport:
    """Mean of M_T against M_0 = 0 plus exact recomputation of M_T on every
    trace from the event log (and from the path on a subset)."""
    t0 = time.perf_counter()
    reps = cfg.replications or 100_000
    T = cfg.horizon if cfg.horizon is not None else 10_000
    n_replay = int(cfg.extra.get("replay", 32))
    if cfg.fiber is not None or cfg.delta is not None:
        grid = [(cfg.fiber or point(), cfg.delta if cfg.delta is not None else Fraction(1))]
    else:
        grid = [(_fiber(f), Fraction(d)) for f, d in cfg.extra.get("grid", MARTINGALE_GRID)]
    points = []
    for pi, (fiber, delta) in enumerate(grid):
        params = {"fiber": fiber, "delta": delta, "horizon": T, "replay": n_replay}
        res = map_blocks(_martingale_block, reps, cfg.seed, (1010, pi), params,
                         progress=f"martingale {fiber.name} {delta}")
        levels = np.array([r[0] for r in res], dtype=np.int64)
        bal = np.array([r[1] for r in res], dtype=np.int64)
        exact_mean = (Fraction(int(levels.sum())) + delta * int(bal.sum())) / reps
        m = levels + float(delta) * bal
        _, se = mean_and_se(m)
        gap = abs(float(exact_mean))
        se = 0.0 if reps > 1 and np.all(m == m[0]) else se
        ok_mean = exact_mean == 0 if se == 0 or not math.isfinite(se) else gap <= 4 * se
        bad_log = sum(1 for r in res if not r[2])
        bad_replay = sum(1 for r in res if r[3] is False)
        ok = ok_mean and bad_log == 0 and bad_replay == 0
        points.append({"fiber": fiber.name, "delta": delta, "horizon": T, "mean": float(exact_mean),
                       "mean_exact": exact_mean, "se": se, "z": gap / se if se > 0 else 0.0,
                       "recompute_failures": bad_log, "replayed": min(n_replay, reps),
                       "replay_failures": bad_replay, "verdict": "pass" if ok else "fail"})
    worst = max(points, key=lambda p: p["z"])
    est, se = worst["mean"], worst["se"]
    return BoundCheckReport("martingale", est, est - 4 * se, est + 4 * se, 0.0, False,
                            combine_verdicts(p["verdict"] for p in points), reps * len(points),
                            time.perf_counter() - t0, {"points": points})


# ---------------------------------------------------------------------------
# gambler's ruin races


def race_replica(state: OrrwState, rng: RngStream, xs, eps: float, cap: int) -> dict:
    """For every x: whether x is reached, then whether 2x and floor((1+eps)x)
    are reached before the first return to level 0 after H_x.  ``None``
    marks an outcome left open by the step cap."""
    xs = sorted(set(int(x) for x in xs))
    goals = {x: {"double": 2 * x, "eps": math.floor((1 + eps) * x)} for x in xs}
    reached = {x: False for x in xs}
    outcome = {x: {"double": None, "eps": None} for x in xs}
    capped = False
    while True:
        pending, armed = [], False
        for x in xs:
            if not reached[x]:
                pending.append(x)
            else:
                for kind, t in goals[x].items():
                    if outcome[x][kind] is None:
                        pending.append(t)
                        armed = True
        if not pending:
            break
        if state.step >= cap:
            capped = True
            break
        up = min(pending)
        conds = [HitLevel(up), MaxSteps(cap - state.step)]
        if armed:
            conds.append(HitLevel(0))
        tr = run_until(state, conds, rng)
        if tr.stop_reason != "hit_level":
            capped = True
            break
        z = state.position.level
        for x in xs:
            if not reached[x]:
                continue
            for kind, t in goals[x].items():
                if outcome[x][kind] is None and (z == t or z == 0):
                    outcome[x][kind] = z == t
        for x in xs:
            if z == x:
                reached[x] = True
                for kind, t in goals[x].items():
                    if t <= x:
                        outcome[x][kind] = True
    return {"reached": reached, "outcome": outcome, "capped": capped, "steps": state.step}


def _race_block(seed, key, start, stop, params):
    out = []
    for i in range(start, stop):
        state = OrrwState(params["fiber"], params["delta"], record_events=False)
        out.append(race_replica(state, RngStream(seed, (key, i)), params["xs"], params["eps"], params["cap"]))
    return out


def srw_ruin_probability(x: int, target: int) -> Fraction:
    """Simple walk on Z from x: probability of reaching target before 0."""
    return Fraction(x, target)


def refined_ruin_bound(G: int, delta, alpha: float, beta: float, eps: float) -> float:
    d = float(delta)
    return 10 * G**4 * d ** (alpha + beta) / (1 + eps * d)


def _race_points(cfg, fiber, delta, xs, reps, cap, key, calibrated):
    res = map_blocks(_race_block, reps, cfg.seed, key,
                     {"fiber": fiber, "delta": delta, "xs": xs, "eps": cfg.epsilon, "cap": cap},
                     progress=f"races {fiber.name} {delta}")
    points = []
    for x in sorted(xs):
        reached = [r for r in res if r["reached"][x]]
        not_reached = reps - len(reached)
        for kind in ("double", "eps"):
            target = 2 * x if kind == "double" else math.floor((1 + cfg.epsilon) * x)
            done = [r["outcome"][x][kind] for r in reached if r["outcome"][x][kind] is not None]
            open_ = len(reached) - len(done)
            k, n = sum(done), len(done)
            lo, hi = wilson_interval(k, n, cfg.confidence)
            p = {"fiber": fiber.name, "delta": delta, "x": x, "race": kind, "target": target,
                 "estimate": k / n if n else math.nan, "ci_low": lo, "ci_high": hi, "n": n,
                 "cap_exhausted": open_ + not_reached,
                 "invalid": (open_ + not_reached) > 0.01 * reps}
            if delta == 0 and fiber.vertex_count == 1:
                exact = srw_ruin_probability(x, target)
                se = math.sqrt(float(exact) * (1 - float(exact)) / max(n, 1))
                p.update(oracle=exact, oracle_z=abs(p["estimate"] - float(exact)) / se if se else math.inf)
                p["verdict"] = "pass" if n and abs(p["estimate"] - float(exact)) <= 4 * se else "fail"
            else:
                b1 = 2.0**-10
                b2 = refined_ruin_bound(fiber.vertex_count, delta, cfg.alpha, cfg.beta, cfg.epsilon)
                v1, _ = upper_bound_verdict(hi, b1)
                v2, vac2 = upper_bound_verdict(hi, b2)
                p.update(bound=b1, refined_bound=b2, refined_vacuous=vac2)
                p["verdict"] = combine_verdicts([v1, v2]) if x in calibrated else \
                    ("vacuous" if vac2 and kind == "eps" else "reported")
            if p["invalid"]:
                p["verdict"] = "fail"
            points.append(p)
    return points


def exp_gamblers_ruin(cfg: ExperimentConfig) -> BoundCheckReport:
    """Races from H_x on a grid of x; a simple-walk control is checked
    against the closed form."""
    t0 = time.perf_counter()
    fiber = cfg.fiber or path(3)
    delta = cfg.delta if cfg.delta is not None else Fraction(1000)
    xs = [cfg.x] if cfg.x is not None else list(cfg.extra.get("xs", (50, 100, 200)))
    if any(x < 1 for x in xs):
        raise ConfigError("x must be positive")
    reps = cfg.replications or 100
    cap = int(cfg.extra.get("cap", 2 * 10**9))
    calibrated = set(cfg.extra.get("calibrated", ()))
    points = _race_points(cfg, fiber, delta, xs, reps, cap, (1111, 0), calibrated)
    proxy_ok, trend_ok = True, True
    if not (delta == 0 and fiber.vertex_count == 1):
        dbl = [p for p in points if p["race"] == "double"]
        proxy_ok = all(p["estimate"] < 0.5 for p in dbl)
        trend_ok = all(b["estimate"] <= a["estimate"] or b["ci_low"] <= a["ci_high"] for a, b in zip(dbl, dbl[1:]))
    control = []
    if cfg.extra.get("control", True) and not (delta == 0 and fiber.vertex_count == 1):
        ccfg = cfg.with_(replications=None)
        control = _race_points(ccfg, point(), Fraction(0), [int(cfg.extra.get("control_x", 10))],
                               int(cfg.extra.get("control_reps", 10_000)),
                               int(cfg.extra.get("control_cap", 10**7)), (1111, 1), set())
        for p in control:
            p["kind"] = "control"
    verdicts = [p["verdict"] for p in points + control]
    verdict = combine_verdicts(verdicts + ([] if proxy_ok and trend_ok else ["fail"]))
    head = next(p for p in points if p["race"] == "double")
    return BoundCheckReport("gamblers_ruin", head["estimate"], head["ci_low"], head["ci_high"],
                            head.get("bound", float(head.get("oracle", 0))), False, verdict, reps,
                            time.perf_counter() - t0,
                            {"below_half": proxy_ok, "trend_ok": trend_ok, "points": points + control})


# ---------------------------------------------------------------------------
# D-walls


DWALL_GRID = ((1, 0), (4, 16), (16, 256), (32, 1024))


def dwall_replica(state: OrrwState, rng: RngStream, x: int, D: int, cap: int) -> str:
    """'wall', 'no_wall', or 'capped' for one fresh walk."""
    tr = run_until(state, [HitLevel(x), MaxSteps(cap)], rng)
    if tr.stop_reason != "hit_level":
        return "capped"
    tr = run_until(state, [LevelComplete(x, x + D - 1), HitLevel(x + D), MaxSteps(cap - state.step)], rng)
    if tr.stop_reason == "level_complete":
        return "wall"
    if tr.stop_reason == "hit_level":
        return "no_wall"
    return "capped"


def _dwall_block(seed, key, start, stop, params):
    state = OrrwState(params["fiber"], params["delta"], record_events=False).freeze()
    out = []
    for i in range(start, stop):
        state.reset()
        out.append(dwall_replica(state, RngStream(seed, (key, i)), params["x"], params["D"], params["cap"]))
    return out


def exp_dwall(cfg: ExperimentConfig) -> BoundCheckReport:
    """(D, delta) grid; the frontier where the estimate reaches 1/2 is
    reported and only calibrated points are asserted."""
    t0 = time.perf_counter()
    fiber = cfg.fiber or path(2)
    x = cfg.x if cfg.x is not None else 4
    reps = cfg.replications or 200
    cap = int(cfg.extra.get("cap", 10**9))
    if cfg.D is not None:
        grid = [(cfg.D, cfg.delta if cfg.delta is not None else Fraction(cfg.D**2))]
    else:
        grid = [(D, Fraction(d)) for D, d in cfg.extra.get("grid", DWALL_GRID)]
    calibrated = {(int(D), Fraction(d)) for D, d in cfg.extra.get("calibrated", ())}
    points = []
    for pi, (D, delta) in enumerate(grid):
        params = {"fiber": fiber, "delta": delta, "x": x, "D": D, "cap": cap}
        res = map_blocks(_dwall_block, reps, cfg.seed, (1212, pi), params, progress=f"dwall D={D}")
        walls = res.count("wall")
        capped = res.count("capped")
        n = reps - capped
        lo, hi = wilson_interval(walls, n, cfg.confidence)
        est = walls / n if n else math.nan
        if capped > 0.01 * reps:
            verdict = "fail"
        elif (D, delta) in calibrated:
            verdict, _ = lower_bound_verdict(lo, 0.5)
        else:
            verdict = "reported"
        points.append({"D": D, "delta": delta, "x": x, "estimate": est, "ci_low": lo, "ci_high": hi,
                       "capped": capped, "at_least_half": bool(est >= 0.5), "calibrated": (D, delta) in calibrated,
                       "verdict": verdict})
    frontier = [{"D": p["D"], "delta": p["delta"]} for p in points if p["at_least_half"]]
    head = points[-1]
    return BoundCheckReport("dwall", head["estimate"], head["ci_low"], head["ci_high"], 0.5, False,
                            combine_verdicts(p["verdict"] for p in points), reps * len(points),
                            time.perf_counter() - t0, {"frontier": frontier, "points": points})


# ---------------------------------------------------------------------------
# shape of the range


def point_range_jump_chain(delta, counts, rng: RngStream) -> dict:
    """Extents of the range on Z when it first has ``c`` vertices, for each
    c in ``counts``, sampled from the exact endpoint-to-endpoint chain.

    From an endpoint of a range with L edges the walk extends that side
    before reaching the other end with probability L / (L + 1 + delta).
    """
    delta = as_delta(delta)
    num, den = delta.numerator, delta.denominator
    want = sorted(set(int(c) for c in counts))
    out = {}
    left = right = 0
    if 1 in want:
        out[1] = (0, 0)
    at_right = rng.randbelow(2) == 1
    if at_right:
        right = 1
    else:
        left = -1
    while True:
        size = right - left + 1
        if size in want:
            out[size] = (left, right)
        if size >= want[-1]:
            return out
        Lk = right - left
        if rng.randbelow(Lk * den + den + num) < Lk * den:
            if at_right:
                right += 1
            else:
                left -= 1
        else:
            at_right = not at_right


def _shape_point_block(seed, key, start, stop, params):
    return [point_range_jump_chain(params["delta"], params["counts"], RngStream(seed, (key, i)))
            for i in range(start, stop)]


def _shape_step_block(seed, key, start, stop, params):
    fiber, delta, counts, cap = params["fiber"], params["delta"], params["counts"], params["cap"]
    state = OrrwState(fiber, delta, record_events=False).freeze()
    out = []
    for i in range(start, stop):
        state.reset()
        rng = RngStream(seed, (key, i))
        rec = {}
        for c in sorted(counts):
            tr = run_until(state, [VertexCount(c), MaxSteps(cap - state.step)], rng)
            if tr.stop_reason != "vertex_count":
                break
            lo, hi, _ = range_extents(state)
            gaps = sum(1 for z in range(lo, hi + 1) if not state.level_complete(z))
            rec[c] = (lo, hi, state.step, gaps)
        out.append(rec)
    return out


def overhang(left: int, right: int, n: int) -> tuple[float, float]:
    """(midpoint x_n, max(|left - (x_n - n)|, |right - (x_n + n)|))."""
    x = (left + right) / 2
    return x, max(abs(left - (x - n)), abs(right - (x + n)))


def _slope_fit(ns, values, confidence):
    x = np.log(np.repeat(np.asarray(ns, float)[None, :], len(values), 0).ravel())
    y = np.log1p(np.asarray(values, float).ravel())
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    if len(x) < 3 or np.ptp(x) == 0:
        return math.nan, (math.nan, math.nan)
    res = stats.linregress(x, y)
    tq = stats.t.ppf(0.5 + confidence / 2, len(x) - 2)
    return float(res.slope), (float(res.slope - tq * res.stderr), float(res.slope + tq * res.stderr))


def exp_shape(cfg: ExperimentConfig) -> ShapeReport:
    """t(n) is the first time the range holds (2n + 1)|fiber| vertices
    ("box" convention; ``extra['convention'] = 'literal'`` switches to
    (2|fiber| + 1)n).  A one-vertex fiber uses the exact endpoint chain,
    which does not track time, so ``t_n`` is null there."""
    t0 = time.perf_counter()
    fiber = cfg.fiber or point()
    G = fiber.vertex_count
    delta = cfg.delta if cfg.delta is not None else Fraction(1000)
    reps = cfg.replications or 200
    default_ns = (10, 20, 50, 100, 200, 500, 1000, 2000) if G == 1 else (2, 4, 8, 16, 32)
    ns = [int(n) for n in cfg.extra.get("n_grid", default_ns)]
    convention = cfg.extra.get("convention", "box")
    if convention not in ("box", "literal"):
        raise ConfigError("convention must be 'box' or 'literal'")
    box = {n: (2 * n + 1) * G for n in ns}
    literal = {n: (2 * G + 1) * n for n in ns}
    counts = sorted(set(box.values()) | set(literal.values()))
    mode = "jump_chain" if G == 1 and not cfg.extra.get("step_level", False) else "step_level"
    if mode == "jump_chain":
        res = map_blocks(_shape_point_block, reps, cfg.seed, (1313, 0), {"delta": delta, "counts": counts},
                         progress="shape")
        res = [{c: (lo, hi, None, 0) for c, (lo, hi) in r.items()} for r in res]
    else:
        cap = int(cfg.extra.get("cap", 10**9))
        res = map_blocks(_shape_step_block, reps, cfg.seed, (1313, 1),
                         {"fiber": fiber, "delta": delta, "counts": counts, "cap": cap}, progress="shape")

    def table(target):
        full = [r for r in res if all(target[n] in r for n in ns)]
        over = [[overhang(r[target[n]][0], r[target[n]][1], n)[1] for n in ns] for r in full]
        cent = [[overhang(r[target[n]][0], r[target[n]][1], n)[0] for n in ns] for r in full]
        tn = [[r[target[n]][2] for n in ns] for r in full]
        gaps = [[r[target[n]][3] for n in ns] for r in full]
        return full, over, cent, tn, gaps

    full, over, cent, tn, gaps = table(box if convention == "box" else literal)
    dropped = reps - len(full)
    slope, ci = _slope_fit(ns, over, cfg.confidence) if over else (math.nan, (math.nan, math.nan))
    other = literal if convention == "box" else box
    _, o_over, _, _, _ = table(other)
    o_slope, o_ci = _slope_fit(ns, o_over, cfg.confidence) if o_over else (math.nan, (math.nan, math.nan))
    calibrated = {(str(f), Fraction(d)) for f, d in cfg.extra.get("calibrated", (("point", 1000),))}
    if (fiber.name, delta) in calibrated and math.isfinite(ci[1]):
        verdict = "pass" if ci[1] < 0.5 else "fail"
    else:
        verdict = "reported"
    if dropped:
        verdict = "fail" if verdict == "pass" and dropped > 0.01 * reps else verdict
    if any(o < 0 for row in over for o in row):
        raise AssertionError("negative overhang")
    drift = [float(np.mean([c[j] / n for c in cent])) for j, n in enumerate(ns)] if cent else []
    return ShapeReport(
        name="shape", n_grid=ns, t_n=tn if mode == "step_level" else None, centers=cent, overhang=over,
        slope=slope, slope_ci=ci, verdict=verdict, replications=len(full), wall_clock=time.perf_counter() - t0,
        details={"fiber": fiber.name, "delta": delta, "mode": mode, "convention": convention,
                 "dropped": dropped, "mean_center_over_n": drift,
                 "incomplete_levels": gaps if mode == "step_level" else None,
                 "other_convention": {"slope": o_slope, "slope_ci": o_ci,
                                      "mean_overhang": [float(np.mean([o[j] for o in o_over])) for j in range(len(ns))]
                                      if o_over else []}})


# ---------------------------------------------------------------------------
# return times


def return_time_trace(state: OrrwState, rng: RngStream, i_max: int, cap: int) -> list:
    """``(tau_plus_i, tau_{i+1}, M_{i+1})`` for i = 0..i_max, where
    tau_0 = 0, tau_i^+ is the first time after tau_i on a positive level and
    tau_{i+1} the next visit to level 0; tau_{i+1} is None past the cap."""
    out = []
    prev = state.step
    for _ in range(i_max + 1):
        if state.step >= cap:
            break
        tr = run_until(state, [HitLevel(1), MaxSteps(cap - state.step)], rng)
        if tr.stop_reason != "hit_level":
            break
        tplus = state.step
        tr = run_until(state, [HitLevel(0), MaxSteps(cap - state.step)], rng)
        if tr.stop_reason != "hit_level":
            out.append((tplus, None, None))
            break
        if not prev < tplus < state.step:
            raise AssertionError("return times must increase strictly")
        prev = state.step
        out.append((tplus, state.step, int(state.st[L.ST_MAXLEV])))
    return out


def _return_block(seed, key, start, stop, params):
    state = OrrwState(params["fiber"], params["delta"], record_events=False).freeze()
    out = []
    for i in range(start, stop):
        state.reset()
        out.append(return_time_trace(state, RngStream(seed, (key, i)), params["i_max"], params["cap"]))
    return out


def _moments(x, confidence):
    x = np.asarray(x, float)
    if x.size == 0:
        return {"count": 0}
    m, se = mean_and_se(x)
    z = stats.norm.ppf(0.5 + confidence / 2)
    return {"count": int(x.size), "mean": m, "m2": float(np.mean(x**2)), "m3": float(np.mean(x**3)),
            "se": se, "ci": (m - z * se, m + z * se) if math.isfinite(se) else (m, m)}


def _return_campaign(cfg, fiber, delta, reps, cap, i_max, key):
    """Each trace runs to twice the cap; the cap-limited campaign is the
    same traces truncated, so the two differ only through long excursions."""
    traces = map_blocks(_return_block, reps, cfg.seed, key,
                        {"fiber": fiber, "delta": delta, "i_max": i_max, "cap": 2 * cap},
                        progress=f"returns {fiber.name} {delta}")
    samples, maxlev, moments = {}, {}, {}
    pooled_full, pooled_half = [], []
    for i in range(i_max + 1):
        done = [tr[i] for tr in traces if len(tr) > i and tr[i][1] is not None]
        samples[i] = [tn - tp for tp, tn, _ in done]
        half = [tn - tp for tp, tn, _ in done if tn <= cap]
        maxlev[i + 1] = [m for _, _, m in done]
        pooled_full += samples[i]
        pooled_half += half
        mo = _moments(samples[i], cfg.confidence)
        mh = _moments(half, cfg.confidence)
        mo["count_half_cap"] = mh["count"]
        mo["mean_half_cap"] = mh.get("mean", math.nan)
        mo["rel_change"] = (abs(mo["mean"] - mh["mean"]) / mh["mean"]) if mh["count"] else math.nan
        mo["capped"] = reps - len(done)
        moments[i] = mo
    pooled = (abs(np.mean(pooled_full) - np.mean(pooled_half)) / np.mean(pooled_half)
              if pooled_half else math.nan)
    pairs = [(tr[i - 1][2], tr[i][2]) for tr in traces for i in range(1, len(tr))
             if tr[i][1] is not None]
    return samples, moments, maxlev, pooled, pairs


def _max_level_tail(pairs):
    """Frequencies of M_{i+1} >= 2^n M_i over consecutive pairs (i >= 1)
    and the fitted log2 decay rate in n."""
    freq = {}
    for n in range(1, 6):
        freq[n] = sum(1 for a, b in pairs if b >= 2**n * a) / len(pairs) if pairs else math.nan
    pts = [(n, math.log2(f)) for n, f in freq.items() if f > 0]
    rate = float(np.polyfit(*zip(*pts), 1)[0]) if len(pts) >= 2 else math.nan
    return freq, rate


def exp_return_times(cfg: ExperimentConfig) -> ReturnTimeReport:
    """Excursion lengths tau_{i+1} - tau_i^+ with a cap-doubling stability
    test; a simple-walk control shows the drift of an infinite mean."""
    t0 = time.perf_counter()
    fiber = cfg.fiber or path(3)
    delta = cfg.delta if cfg.delta is not None else Fraction(1000)
    reps = cfg.replications or 10_000
    cap = int(cfg.horizon if cfg.horizon is not None else cfg.extra.get("cap", 10**6))
    i_max = int(cfg.extra.get("i_max", 5))
    samples, moments, maxlev, pooled, pairs = _return_campaign(cfg, fiber, delta, reps, cap, i_max, (1414, 0))
    stable = all(m.get("rel_change", math.inf) < 0.1 for m in moments.values())
    calibrated = {(str(f), Fraction(d)) for f, d in cfg.extra.get("calibrated", (("path3", 1000),))}
    verdict = ("pass" if stable else "fail") if (fiber.name, delta) in calibrated else "reported"
    freq, rate = _max_level_tail(pairs)
    details = {"fiber": fiber.name, "delta": delta, "cap": cap, "cap_doubled": 2 * cap,
               "pooled_rel_change": pooled, "stable": stable, "max_level_ratio_tail": freq,
               "max_level_tail_log2_rate": rate}
    if cfg.extra.get("control", True) and not (delta == 0 and fiber.vertex_count == 1):
        c_reps = int(cfg.extra.get("control_reps", 5000))
        c_cap = int(cfg.extra.get("control_cap", 10**5))
        _, c_mom, _, c_pooled, _ = _return_campaign(cfg, point(), Fraction(0), c_reps, c_cap, i_max, (1414, 1))
        diverges = bool(c_pooled > 0.1)
        details["control"] = {"fiber": "point", "delta": 0, "cap": c_cap, "replications": c_reps,
                              "pooled_rel_change": c_pooled, "diverges": diverges,
                              "moments": c_mom}
        if verdict == "pass" and not diverges:
            verdict = "fail"
    return ReturnTimeReport("return_times", samples, moments, maxlev, verdict, reps,
                            time.perf_counter() - t0, details)
