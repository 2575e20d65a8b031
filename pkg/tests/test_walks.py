from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from orrw import electric as el
from orrw import kernels
from orrw.graph_core import CylinderVertex, Subgraph, build_cylinder_window, cycle, edge_key, parse_fiber, path, point
from orrw.walks import (
    ExitSubgraph,
    HitLevel,
    HitVertex,
    LevelComplete,
    MaxSteps,
    NewEdge,
    OrrwState,
    ReturnToLevel,
    RngStream,
    VertexCount,
    as_delta,
    begins_dwall,
    exit_time_replay,
    first_vertex_count_time,
    martingale_value,
    network_walk_batch,
    orrw_step,
    range_extents,
    read_trace,
    replay_martingale,
    run_until,
    step_law,
    write_trace,
)

from .oracles import naive_orrw_path, orrw_exact_laws, point_range_growth_law

V = CylinderVertex


def test_delta_parsing():
    assert as_delta("1/1000") == Fraction(1, 1000)
    assert as_delta(0.5) == Fraction(1, 2)
    with pytest.raises(ValueError):
        as_delta(-1)


def test_rng_streams():
    a = RngStream(3, (1, (2, 3))).bitgen.random_raw(4)
    b = RngStream(3, (1, 2, 3)).bitgen.random_raw(4)
    c = RngStream(3, (1, 2, 4)).bitgen.random_raw(4)
    assert list(a) == list(b) and list(a) != list(c)
    r = RngStream(0, 0)
    draws = [r.randbelow(6) for _ in range(600)]
    assert set(draws) == set(range(6))
    assert all(0 <= r.random() < 1 for _ in range(100))


@pytest.mark.parametrize("fiber,delta", [("point", 0), ("point", 7), ("path3", Fraction(5, 2)),
                                         ("cycle4", 100), ("complete4", Fraction(1, 1000))])
@pytest.mark.parametrize("backend", ["python", "cython"])
def test_kernel_path_matches_naive_walk(fiber, delta, backend):
    if backend == "cython" and not kernels.compiled_available():
        pytest.skip("compiled kernels not built")
    f = parse_fiber(fiber)
    n = 3000
    s = OrrwState(f, delta, record_path=True, window=8)  # small window forces regrowth
    run_until(s, [MaxSteps(n)], RngStream(11, 4), impl=kernels.backend_module(backend))
    want = naive_orrw_path(f, delta, n, RngStream(11, 4).bitgen)
    assert [tuple(r) for r in s.path().tolist()] == want
    assert s.martingale == replay_martingale(_trace(s))


def _trace(state):
    from orrw.walks import TraceRecord
    return TraceRecord("max_steps", None, state.step, 0, state.summary(), state.delta, state.start,
                       state.event_log(), state.path(), state.preset_edges)


def test_exact_martingale_mean_is_zero():
    for fiber, delta in ((cycle(4), 2), (point(), Fraction(1, 3)), (path(2), 0)):
        for law in orrw_exact_laws(fiber, delta, 5):
            assert sum(p * (y[0] + Fraction(delta) * b) for (y, b), p in law.items()) == 0


def test_simulated_law_matches_enumeration():
    f, delta, n = cycle(4), 2, 4
    exact = orrw_exact_laws(f, delta, n)[-1]
    reps = 20_000
    s = OrrwState(f, delta).freeze()
    counts = Counter()
    for i in range(reps):
        s.reset()
        run_until(s, [MaxSteps(n)], RngStream(5, i))
        counts[(tuple(s.position), s.horizontal_balance)] += 1
    keys = sorted(exact)
    assert set(counts) <= set(keys)
    obs = np.array([counts[k] for k in keys], float)
    exp = np.array([float(exact[k]) * reps for k in keys])
    p = stats.chisquare(obs, exp).pvalue
    assert p > 1e-3


def test_step_law_weights():
    s = OrrwState(path(3), 4, start=(0, 1))
    law = step_law(s)
    assert set(law) == {V(1, 1), V(-1, 1), V(0, 0), V(0, 2)} and all(p == Fraction(1, 4) for p in law.values())
    orrw_step(s, RngStream(0))
    y = s.position
    back = step_law(s)[V(0, 1)]
    assert back == Fraction(5, 5 + len(step_law(s)) - 1)
    assert sum(step_law(s).values()) == 1 and y != V(0, 1)


def test_stopping_conditions():
    f = path(2)
    s = OrrwState(f, 3)
    tr = run_until(s, [NewEdge()], RngStream(1))
    assert tr.stop_reason == "new_edge" and tr.steps == 1
    tr = run_until(s, [HitLevel(4)], RngStream(2))
    assert tr.stop_reason == "hit_level" and s.position.level == 4
    tr = run_until(s, [HitVertex((-2, 1))], RngStream(3))
    assert s.position == V(-2, 1)
    tr = run_until(s, [VertexCount(30)], RngStream(4))
    assert tr.stop_reason == "vertex_count" and s.vertex_count == 30
    tr = run_until(s, [MaxSteps(17)], RngStream(5))
    assert tr.steps == 17 and tr.stop_reason == "max_steps"
    with pytest.raises(ValueError):
        run_until(s, [], RngStream(0))


def test_level_complete_point_fiber_fires_at_start():
    s = OrrwState(point(), 1)
    tr = run_until(s, [LevelComplete(0, 0)], RngStream(0))
    assert tr.stop_reason == "level_complete" and tr.steps == 0


def test_level_complete_needs_vertical_edges():
    s = OrrwState(path(3), 0, record_path=True)
    tr = run_until(s, [LevelComplete(0, 0), MaxSteps(10**6)], RngStream(9))
    assert tr.stop_reason == "level_complete"
    assert s.level_complete(0)
    assert s.is_crossed((0, 0), (0, 1)) and s.is_crossed((0, 1), (0, 2))
    # one step earlier the level was not complete
    t = s.range()
    assert all((0, g) in t.vertices for g in range(3))


def test_exit_condition_agrees_with_replay():
    f = path(2)
    A = build_cylinder_window(f, -2, 2)
    A = Subgraph(A.vertices, A.edges - {edge_key((0, 0), (0, 1))})
    for i in range(30):
        s = OrrwState(f, 2, record_path=True)
        tr = run_until(s, [ExitSubgraph(A)], RngStream(8, i))
        assert tr.stop_reason == "exit_subgraph" and exit_time_replay(tr, A) == tr.steps


def test_return_to_level():
    s = OrrwState(point(), 0)
    tr = run_until(s, [ReturnToLevel(0, 3), MaxSteps(10**7)], RngStream(2))
    assert tr.stop_reason == "return_to_level" and s.position.level == 0
    assert s.summary()["max_level"] >= 3


def test_freeze_reset_copy():
    s = OrrwState(cycle(4), 5, record_path=True, preset_edges=[((0, 0), (1, 0))]).freeze()
    run_until(s, [MaxSteps(5000)], RngStream(1))
    p1 = s.path().copy()
    c = s.copy()
    s.reset()
    assert s.step == 0 and s.position == V(0, 0) and s.is_crossed((0, 0), (1, 0))
    run_until(s, [MaxSteps(5000)], RngStream(1))
    assert np.array_equal(p1, s.path())
    assert np.array_equal(c.path(), p1)
    run_until(c, [MaxSteps(10)], RngStream(2))
    assert c.step == 5010 and s.step == 5000
    with pytest.raises(ValueError):
        OrrwState(point(), 1).reset()


def test_preset_edges_are_not_counted_as_crossings():
    A = [((0, 0), (1, 0)), ((1, 0), (2, 0))]
    s = OrrwState(point(), 10, preset_edges=A)
    law = step_law(s)
    assert law[V(1, 0)] == Fraction(11, 12)
    tr = run_until(s, [NewEdge()], RngStream(0))
    assert s.crossed_count == 1 and s.range().edges.isdisjoint({edge_key(*e) for e in A})
    assert tr.preset_edges == frozenset(edge_key(*e) for e in A)


def test_trace_roundtrip(tmp_path):
    s = OrrwState(path(2), 1, record_path=True)
    tr = run_until(s, [MaxSteps(200)], RngStream(0))
    for name in ("t.txt", "t.txt.gz"):
        arr = read_trace(write_trace(tr, tmp_path / name))
        assert arr.shape == (201, 4) and arr[0].tolist() == [0, 0, 0, 0]
        assert arr[1:, 1:].tolist() == tr.path.tolist()
    assert martingale_value(tr) == replay_martingale(tr) == s.martingale


def test_trace_helpers():
    s = OrrwState(path(2), 0, record_path=True)
    tr = run_until(s, [MaxSteps(20_000)], RngStream(4))
    k = 12
    n = first_vertex_count_time(tr, k)
    s2 = OrrwState(path(2), 0)
    run_until(s2, [VertexCount(k)], RngStream(4))
    assert n == s2.step
    lo, hi, count = range_extents(s)
    assert count == len(s.visited_vertices()) and lo <= 0 <= hi
    assert begins_dwall(tr, 0, 3, path(2)) in (True, False)


def test_dwall_point_fiber_always_true():
    s = OrrwState(point(), 50, record_path=True)
    tr = run_until(s, [HitLevel(12), MaxSteps(10**7)], RngStream(0))
    assert all(begins_dwall(tr, x, D, point()) for x in range(0, 5) for D in (1, 3))


@settings(max_examples=40, deadline=None)
@given(fiber=st.sampled_from(["point", "path2", "cycle3", "complete4"]),
       num=st.integers(0, 50), den=st.integers(1, 9), steps=st.integers(0, 400), seed=st.integers(0, 2**63))
def test_trajectory_invariants(fiber, num, den, steps, seed):
    f = parse_fiber(fiber)
    s = OrrwState(f, Fraction(num, den), record_path=True, window=4)
    tr = run_until(s, [MaxSteps(steps)], RngStream(seed))
    prev, seen, edges = V(0, 0), {V(0, 0)}, set()
    for z, g, fresh in tr.path.tolist():
        cur = V(z, g)
        e = edge_key(prev, cur)
        assert (abs(z - prev.level) == 1 and g == prev.fiber) or (z == prev.level and (min(g, prev.fiber), max(g, prev.fiber)) in f.edges)
        assert fresh == (e not in edges)
        edges.add(e)
        seen.add(cur)
        prev = cur
    assert s.vertex_count == len(seen) and s.crossed_count == len(edges)
    assert s.crossed_edges() == edges and s.visited_vertices() == seen
    lo, hi, _ = range_extents(s)
    assert (lo, hi) == (min(v.level for v in seen), max(v.level for v in seen))
    assert martingale_value(tr) == replay_martingale(tr) == s.martingale


def test_network_walks_match_solver():
    W = build_cylinder_window(path(2), 0, 5)
    net = el.Network.from_subgraph(W, lambda e: 1 + e[0].level)
    hit = [V(5, 0), V(5, 1)]
    avoid = [V(0, 1)]
    n = 20_000
    b = network_walk_batch(net, V(2, 0), hit + avoid, n, RngStream(1, 2))
    ends = Counter(net.vertices[i] for i in b.end)
    p = el.hit_probability(net, V(2, 0), hit, avoid)
    est = (ends[hit[0]] + ends[hit[1]]) / n
    assert abs(est - p) <= 4 * np.sqrt(p * (1 - p) / n)
    assert b.counts.min() >= 0 and b.steps.min() >= 2


def test_series_edge_carries_every_walk_once():
    net = el.Network({("a", "b"): 1.0, ("b", "c"): 2.0, ("c", "b2"): 1.0, ("b2", "z"): 1.0, ("b", "b2"): 1.0})
    batch = network_walk_batch(net, "a", ["z"], 2000, RngStream(3), track=True)
    k = net.edge_index[("a", "b")]
    assert batch.net_sum[k] == 2000 and batch.net_sumsq[k] == 2000


def test_point_range_jump_chain_and_step_level_match_exact_law():
    from orrw.experiments.orrw_mc import point_range_jump_chain
    delta, size, reps = 3, 6, 6000
    exact = point_range_growth_law(delta, size)
    keys = sorted(exact)
    jump = Counter(point_range_jump_chain(delta, [size], RngStream(4, i))[size] for i in range(reps))
    s = OrrwState(point(), delta).freeze()
    step = Counter()
    for i in range(reps):
        s.reset()
        run_until(s, [VertexCount(size)], RngStream(5, i))
        step[range_extents(s)[:2]] += 1
    expv = np.array([float(exact[k]) * reps for k in keys])
    for hist in (jump, step):
        assert set(hist) <= set(keys)
        assert stats.chisquare(np.array([hist[k] for k in keys], float), expv).pvalue > 1e-3
