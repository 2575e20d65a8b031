"""Step-level simulators for the once-reinforced walk and network walks.

The reinforcement parameter is kept as an exact ``Fraction`` so that
transition weights are integers (``den`` for a fresh edge, ``den + num``
for a crossed one) and the martingale is recomputed without rounding.
Heavy stepping is delegated to :mod:`orrw.kernels`; this module owns the
bookkeeping around it.
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _layout as L
from . import kernels
from .graph_core import CylinderVertex, FiberGraph, Subgraph, edge_key

DEFAULT_MAX_STEPS = 10**8
_INT63 = 1 << 63


def as_delta(delta) -> Fraction:
    """Exact rational reinforcement parameter (floats are expanded exactly)."""
    d = Fraction(delta) if not isinstance(delta, str) else Fraction(delta.strip())
    if d < 0:
        raise ValueError(f"reinforcement must be non-negative, got {delta}")
    return d


def _flatten(key):
    for k in key:
        if isinstance(k, tuple):
            yield from _flatten(k)
        else:
            yield int(k)


class RngStream:
    """Independent PCG64 stream keyed by ``(seed, stream)``.

    ``stream`` is an integer or a (possibly nested) tuple of integers, e.g.
    parameter point and replica index; distinct keys give independent
    streams.
    """

    def __init__(self, seed: int, stream: int | tuple = 0):
        self.seed = int(seed)
        self.stream = tuple(_flatten(stream)) if isinstance(stream, tuple) else int(stream)
        key = self.stream if isinstance(self.stream, tuple) else (self.stream,)
        ss = np.random.SeedSequence(self.seed, spawn_key=key)
        self.bitgen = np.random.PCG64(ss)

    def randbelow(self, total: int) -> int:
        from ._kernels_py import bounded_uint64
        return bounded_uint64(self.bitgen.random_raw, int(total))

    def random(self) -> float:
        from ._kernels_py import uniform01
        return uniform01(self.bitgen.random_raw)

    def generator(self) -> np.random.Generator:
        """A ``Generator`` sharing this stream's state."""
        return np.random.Generator(self.bitgen)


# ---------------------------------------------------------------------------
# stopping conditions


@dataclass(frozen=True)
class MaxSteps:
    n: int


@dataclass(frozen=True)
class HitLevel:
    """First time the level equals ``r`` (from either side; n >= 0)."""
    r: int


@dataclass(frozen=True)
class HitVertex:
    vertex: tuple


@dataclass(frozen=True)
class NewEdge:
    """First step that crosses a not-yet-crossed edge."""


@dataclass(frozen=True)
class ExitSubgraph:
    """First n >= 1 with (X_{n-1}, X_n) a boundary edge of ``A``."""
    A: Subgraph


@dataclass(frozen=True)
class LevelComplete:
    """First time some level in ``lo..hi`` is fully visited and crossed."""
    lo: int
    hi: int


@dataclass(frozen=True)
class VertexCount:
    k: int


@dataclass(frozen=True)
class ReturnToLevel:
    """First return to ``level`` after the first visit to ``after``."""
    level: int
    after: int


StoppingCondition = (MaxSteps, HitLevel, HitVertex, NewEdge, ExitSubgraph,
                     LevelComplete, VertexCount, ReturnToLevel)


# ---------------------------------------------------------------------------
# state


class OrrwState:
    """Mutable once-reinforced walk on Z x fiber.

    Crossed edges, visited vertices and per-level completion counters live
    in flat arrays over a window of levels that doubles when the walk nears
    its edge.
    """

    def __init__(self, fiber: FiberGraph, delta, start=(0, 0), *, window: int = 64,
                 preset_edges: Iterable = (), record_events: bool = True,
                 record_path: bool = False, path_chunk: int = 1 << 16):
        self.fiber = fiber
        self.delta = as_delta(delta)
        self.G = fiber.vertex_count
        self.fiber_edges = fiber.sorted_edges()
        self.EG = len(self.fiber_edges)
        self._eid = {e: i for i, e in enumerate(self.fiber_edges)}
        indptr, indices, eids = [0], [], []
        for g, nbrs in enumerate(fiber.adjacency()):
            for h in nbrs:
                indices.append(h)
                eids.append(self._eid[(min(g, h), max(g, h))])
            indptr.append(len(indices))
        self.fib_indptr = np.asarray(indptr, dtype=np.int64)
        self.fib_indices = np.asarray(indices, dtype=np.int64)
        self.fib_eid = np.asarray(eids, dtype=np.int64)
        self.dnum = self.delta.numerator
        self.dden = self.delta.denominator
        if (self.dnum + self.dden) * (2 + fiber.max_degree) >= _INT63:
            raise ValueError("reinforcement numerator/denominator too large for exact sampling")

        start = CylinderVertex(*start)
        if not 0 <= start.fiber < self.G:
            raise ValueError(f"start {start} outside the fiber")
        preset = [edge_key(u, v) for u, v in preset_edges]
        levels = [start.level] + [w.level for e in preset for w in e]
        lo, hi = min(levels), max(levels)
        nlev = max(int(window), 2 * (hi - lo) + 8)
        self.st = np.zeros(L.ST_SIZE, dtype=np.int64)
        self.st[L.ST_LO] = (lo + hi) // 2 - nlev // 2
        self.st[L.ST_NLEV] = nlev
        self.crossed = np.zeros(nlev * (self.G + self.EG), dtype=np.uint8)
        self.visited = np.zeros(nlev * self.G, dtype=np.uint8)
        self.lvlcount = np.zeros(nlev, dtype=np.int32)
        self.amask = None
        self.vmask = None
        self._mask_key = None
        self.preset_edges = frozenset(preset)
        for e in preset:
            s = self._slot(*e)
            if not self.crossed[s]:
                self.crossed[s] = 1
                if e[0].level == e[1].level:
                    self.lvlcount[e[0].level - self.lo] += 1
        self.start = start
        self.st[L.ST_LEVEL] = start.level
        self.st[L.ST_FIBER] = start.fiber
        self.st[L.ST_MINLEV] = start.level
        self.st[L.ST_MAXLEV] = start.level
        self.st[L.ST_VCOUNT] = 1
        self.visited[(start.level - self.lo) * self.G + start.fiber] = 1
        self.lvlcount[start.level - self.lo] += 1
        self.record_events = record_events
        self.events = np.zeros((256, L.EV_COLS), dtype=np.int64) if record_events else None
        self.record_path = record_path
        self._path_buf = np.zeros((path_chunk, L.PATH_COLS), dtype=np.int64) if record_path else None
        self._path_chunks: list[np.ndarray] = []
        self._template = None

    def copy(self) -> "OrrwState":
        """Independent copy (arrays duplicated, recorded history included)."""
        new = object.__new__(OrrwState)
        new.__dict__.update(self.__dict__)
        for name in ("st", "crossed", "visited", "lvlcount", "amask", "vmask", "events", "_path_buf"):
            arr = getattr(self, name)
            setattr(new, name, None if arr is None else arr.copy())
        new._path_chunks = [c.copy() for c in self._path_chunks]
        return new

    def freeze(self) -> "OrrwState":
        """Remember the current arrays as the target of :meth:`reset`."""
        self._template = (self.st.copy(), self.crossed.copy(), self.visited.copy(),
                          self.lvlcount.copy())
        return self

    def reset(self) -> "OrrwState":
        """Return to the frozen configuration, reusing the arrays when the
        window has not grown since."""
        if self._template is None:
            raise ValueError("call freeze() before reset()")
        st, crossed, visited, lvlcount = self._template
        if len(crossed) != len(self.crossed):
            self.crossed = crossed.copy()
            self.visited = visited.copy()
            self.lvlcount = lvlcount.copy()
            self.amask = self.vmask = None
            self._mask_key = None
        else:
            np.copyto(self.crossed, crossed)
            np.copyto(self.visited, visited)
            np.copyto(self.lvlcount, lvlcount)
        np.copyto(self.st, st)
        self._path_chunks = []
        return self

    # -- geometry of the arrays ------------------------------------------
    @property
    def lo(self) -> int:
        return int(self.st[L.ST_LO])

    @property
    def nlev(self) -> int:
        return int(self.st[L.ST_NLEV])

    def _slot(self, u, v) -> int:
        u, v = edge_key(u, v)
        ES = self.G + self.EG
        zi = u.level - self.lo
        if not 0 <= zi < self.nlev:
            raise IndexError(f"edge {(u, v)} outside the window")
        if u.fiber == v.fiber and v.level == u.level + 1:
            return zi * ES + u.fiber
        if u.level == v.level:
            key = (min(u.fiber, v.fiber), max(u.fiber, v.fiber))
            if key in self._eid:
                return zi * ES + self.G + self._eid[key]
        raise ValueError(f"{(u, v)} is not a cylinder edge")

    def _grow(self) -> None:
        """Double the window, keeping the old rows centred."""
        old_n, G, ES = self.nlev, self.G, self.G + self.EG
        new_n = 2 * old_n
        shift = old_n // 2

        def regrow(arr, width):
            if arr is None:
                return None
            out = np.zeros(new_n * width, dtype=arr.dtype)
            out[shift * width:(shift + old_n) * width] = arr
            return out

        self.crossed = regrow(self.crossed, ES)
        self.visited = regrow(self.visited, G)
        self.lvlcount = regrow(self.lvlcount, 1)
        self.amask = regrow(self.amask, ES)
        self.vmask = regrow(self.vmask, G)
        self.st[L.ST_LO] -= shift
        self.st[L.ST_NLEV] = new_n

    def _ensure_levels(self, lo: int, hi: int) -> None:
        while lo - 1 < self.lo or hi + 1 > self.lo + self.nlev - 1:
            self._grow()

    # -- observables ------------------------------------------------------
    @property
    def position(self) -> CylinderVertex:
        return CylinderVertex(int(self.st[L.ST_LEVEL]), int(self.st[L.ST_FIBER]))

    @property
    def step(self) -> int:
        return int(self.st[L.ST_STEP])

    @property
    def horizontal_balance(self) -> int:
        """Signed count of first crossings of horizontal edges (+1 rightward)."""
        return int(self.st[L.ST_DRIFT])

    @property
    def drift_total(self) -> Fraction:
        return self.delta * self.horizontal_balance

    @property
    def martingale(self) -> Fraction:
        return self.position.level + self.drift_total

    @property
    def vertex_count(self) -> int:
        return int(self.st[L.ST_VCOUNT])

    @property
    def crossed_count(self) -> int:
        """Edges crossed by the walk itself (preset edges excluded)."""
        return int(self.st[L.ST_ECOUNT])

    def event_log(self) -> np.ndarray:
        if self.events is None:
            raise ValueError("this state was created without an event log")
        return self.events[: int(self.st[L.ST_NEVENTS])].copy()

    def path(self) -> np.ndarray:
        if self._path_buf is None:
            raise ValueError("this state was created without path recording")
        parts = self._path_chunks + [self._path_buf[: int(self.st[L.ST_NPATH])]]
        return np.concatenate(parts) if parts else np.zeros((0, L.PATH_COLS), np.int64)

    def crossed_edges(self) -> set:
        ES = self.G + self.EG
        out = set()
        for s in np.flatnonzero(self.crossed):
            zi, r = divmod(int(s), ES)
            z = zi + self.lo
            if r < self.G:
                out.add(edge_key((z, r), (z + 1, r)))
            else:
                a, b = self.fiber_edges[r - self.G]
                out.add(edge_key((z, a), (z, b)))
        return out

    def visited_vertices(self) -> set:
        return {CylinderVertex(int(i) // self.G + self.lo, int(i) % self.G)
                for i in np.flatnonzero(self.visited)}

    def range(self) -> Subgraph:
        """Visited vertices with crossed edges (preset edges not included)."""
        edges = self.crossed_edges() - self.preset_edges
        verts = self.visited_vertices()
        return Subgraph(frozenset(verts | {w for e in edges for w in e}), frozenset(edges))

    def is_crossed(self, u, v) -> bool:
        try:
            return bool(self.crossed[self._slot(u, v)])
        except IndexError:
            return False

    def level_complete(self, z: int) -> bool:
        zi = z - self.lo
        if not 0 <= zi < self.nlev:
            return False
        return int(self.lvlcount[zi]) == self.G + self.EG

    def summary(self) -> dict:
        return {
            "position": tuple(self.position),
            "step": self.step,
            "vertex_count": self.vertex_count,
            "crossed_count": self.crossed_count,
            "horizontal_balance": self.horizontal_balance,
            "martingale": self.martingale,
            "min_level": int(self.st[L.ST_MINLEV]),
            "max_level": int(self.st[L.ST_MAXLEV]),
        }

    # -- masks for exit conditions --------------------------------------
    def _install_mask(self, A: Subgraph) -> None:
        if self._mask_key is A:
            return
        levels = A.levels()
        self._ensure_levels(levels[0], levels[-1])
        ES = self.G + self.EG
        self.amask = np.zeros(self.nlev * ES, dtype=np.uint8)
        self.vmask = np.zeros(self.nlev * self.G, dtype=np.uint8)
        for v in A.vertices:
            self.vmask[(v.level - self.lo) * self.G + v.fiber] = 1
        for u, v in A.edges:
            self.amask[self._slot(u, v)] = 1
        self._mask_key = A


def range_extents(state: OrrwState) -> tuple[int, int, int]:
    """(leftmost level, rightmost level, number of visited vertices)."""
    return int(state.st[L.ST_MINLEV]), int(state.st[L.ST_MAXLEV]), state.vertex_count


# ---------------------------------------------------------------------------
# running


@dataclass
class TraceRecord:
    stop_reason: str
    condition: object
    steps: int
    start_step: int
    final_state: dict
    delta: Fraction
    start: CylinderVertex
    events: np.ndarray | None = None
    path: np.ndarray | None = None
    preset_edges: frozenset = field(default_factory=frozenset)


def _stop_vector(state: OrrwState, conditions, start_step: int):
    stop = np.zeros(L.SP_SIZE, dtype=np.int64)
    stop[L.SP_MAX_STEPS] = start_step + DEFAULT_MAX_STEPS
    stop[L.SP_LEVEL_HI] = L.NO_HI
    stop[L.SP_LEVEL_LO] = L.NO_LO
    stop[L.SP_VERTEX_FIBER] = -1
    stop[L.SP_COMPLETE_LO] = 1
    stop[L.SP_COMPLETE_HI] = 0
    by_status = {}
    z = state.position.level
    for c in conditions:
        if isinstance(c, MaxSteps):
            stop[L.SP_MAX_STEPS] = start_step + int(c.n)
            by_status[L.STOP_MAX] = c
        elif isinstance(c, HitLevel):
            if c.r >= z:
                stop[L.SP_LEVEL_HI] = min(stop[L.SP_LEVEL_HI], c.r)
                by_status[L.STOP_HI] = c
            if c.r <= z:
                stop[L.SP_LEVEL_LO] = max(stop[L.SP_LEVEL_LO], c.r)
                by_status[L.STOP_LO] = c
        elif isinstance(c, HitVertex):
            v = CylinderVertex(*c.vertex)
            stop[L.SP_VERTEX_LEVEL] = v.level
            stop[L.SP_VERTEX_FIBER] = v.fiber
            by_status[L.STOP_VERTEX] = c
        elif isinstance(c, NewEdge):
            stop[L.SP_NEW_EDGE] = 1
            by_status[L.STOP_NEW_EDGE] = c
        elif isinstance(c, ExitSubgraph):
            state._install_mask(c.A)
            stop[L.SP_USE_MASK] = 1
            by_status[L.STOP_EXIT] = c
        elif isinstance(c, LevelComplete):
            stop[L.SP_COMPLETE_LO] = c.lo
            stop[L.SP_COMPLETE_HI] = c.hi
            by_status[L.STOP_COMPLETE] = c
        elif isinstance(c, VertexCount):
            stop[L.SP_VCOUNT] = int(c.k)
            by_status[L.STOP_VCOUNT] = c
        else:
            raise TypeError(f"unsupported stopping condition {c!r}")
    by_status.setdefault(L.STOP_MAX, MaxSteps(int(stop[L.SP_MAX_STEPS]) - start_step))
    return stop, by_status


def _advance(state: OrrwState, stop: np.ndarray, rng: RngStream, impl=None) -> int:
    run = (impl or kernels).orrw_run
    while True:
        status = run(state.st, state.crossed, state.visited, state.lvlcount,
                     state.fib_indptr, state.fib_indices, state.fib_eid,
                     state.G, state.EG, state.dnum, state.dden, rng.bitgen, stop,
                     state.amask if stop[L.SP_USE_MASK] else None,
                     state.vmask if stop[L.SP_USE_MASK] else None,
                     state.events, state._path_buf)
        if status == L.NEED_GROW:
            state._grow()
        elif status == L.EVENTS_FULL:
            bigger = np.zeros((2 * len(state.events), L.EV_COLS), dtype=np.int64)
            bigger[: len(state.events)] = state.events
            state.events = bigger
        elif status == L.PATH_FULL:
            state._path_chunks.append(state._path_buf.copy())
            state.st[L.ST_NPATH] = 0
        else:
            return status


def run_until(state: OrrwState, conditions, rng: RngStream, *, impl=None) -> TraceRecord:
    """Step ``state`` until the first of ``conditions`` fires.

    A missing ``MaxSteps`` gets the default safety cap.  ``ReturnToLevel``
    runs in two phases: first to ``after``, then back to ``level``.
    """
    conditions = list(conditions)
    if not conditions:
        raise ValueError("run_until needs at least one stopping condition")
    start_step = state.step
    returns = [c for c in conditions if isinstance(c, ReturnToLevel)]
    if len(returns) > 1:
        raise ValueError("at most one ReturnToLevel condition")
    others = [c for c in conditions if not isinstance(c, ReturnToLevel)]
    reason, fired = None, None
    if returns:
        ret = returns[0]
        stop, by_status = _stop_vector(state, others + [HitLevel(ret.after)], start_step)
        status = _advance(state, stop, rng, impl)
        fired = by_status.get(status)
        if not isinstance(fired, HitLevel) or fired.r != ret.after or state.position.level != ret.after:
            reason = L.STATUS_NAMES[status]
        else:
            stop, by_status = _stop_vector(state, others + [HitLevel(ret.level)], start_step)
            status = _advance(state, stop, rng, impl)
            fired = by_status.get(status)
            if isinstance(fired, HitLevel) and fired.r == ret.level and state.position.level == ret.level:
                fired, reason = ret, "return_to_level"
            else:
                reason = L.STATUS_NAMES[status]
    else:
        stop, by_status = _stop_vector(state, others, start_step)
        status = _advance(state, stop, rng, impl)
        fired = by_status.get(status)
        reason = L.STATUS_NAMES[status]
    if reason == "hit_level_low":
        reason = "hit_level"
    return TraceRecord(
        stop_reason=reason,
        condition=fired,
        steps=state.step - start_step,
        start_step=start_step,
        final_state=state.summary(),
        delta=state.delta,
        start=state.start,
        events=state.event_log() if state.events is not None else None,
        path=state.path() if state._path_buf is not None else None,
        preset_edges=state.preset_edges,
    )


def orrw_step(state: OrrwState, rng: RngStream) -> OrrwState:
    """Exactly one step of the once-reinforced walk."""
    run_until(state, [MaxSteps(1)], rng)
    return state


def step_law(state: OrrwState) -> dict:
    """Exact one-step transition law from the current position."""
    x = state.position
    nbrs = [CylinderVertex(x.level + 1, x.fiber), CylinderVertex(x.level - 1, x.fiber)]
    nbrs += [CylinderVertex(x.level, h) for h in state.fiber.neighbors(x.fiber)]
    w = {y: 1 + state.delta * state.is_crossed(x, y) for y in nbrs}
    total = sum(w.values())
    return {y: wy / total for y, wy in w.items()}


# ---------------------------------------------------------------------------
# trace-derived quantities


def martingale_value(trace: TraceRecord) -> Fraction:
    """Recompute the martingale at the end of ``trace`` from its event log."""
    if trace.events is None:
        raise ValueError("trace has no event log")
    ev = trace.events
    horizontal = ev[:, L.EV_HEAD_LEVEL] - ev[:, L.EV_TAIL_LEVEL]
    balance = int(horizontal.sum())
    level = trace.final_state["position"][0]
    return level + trace.delta * balance


def replay_martingale(trace: TraceRecord) -> Fraction:
    """Recompute the martingale from the step path alone.

    Independent of the event log: first crossings are re-derived by
    tracking the set of crossed edges along the path.
    """
    if trace.path is None:
        raise ValueError("trace has no path")
    crossed = set(trace.preset_edges)
    prev = trace.start
    balance = 0
    for z, g, _flag in trace.path.tolist():
        cur = CylinderVertex(z, g)
        e = edge_key(prev, cur)
        if e not in crossed:
            crossed.add(e)
            balance += cur.level - prev.level
        prev = cur
    return prev.level + trace.delta * balance


def begins_dwall(trace: TraceRecord, x: int, D: int, fiber: FiberGraph) -> bool:
    """Whether the range at the first visit to level x + D contains a complete
    level in x..x+D-1; true when that level is never reached in the trace."""
    if D < 1:
        raise ValueError("D must be positive")
    if trace.path is None:
        raise ValueError("trace has no path")
    target = x + D
    prev = trace.start
    verts = {prev}
    edges = set()
    if prev.level != target:
        for z, g, _flag in trace.path.tolist():
            cur = CylinderVertex(z, g)
            edges.add(edge_key(prev, cur))
            verts.add(cur)
            prev = cur
            if z == target:
                break
        else:
            return True
    for y in range(x, x + D):
        if all((y, g) in verts for g in range(fiber.vertex_count)) and all(
                edge_key((y, a), (y, b)) in edges for a, b in fiber.edges):
            return True
    return False


def first_vertex_count_time(trace: TraceRecord, k: int) -> int | None:
    """Replay: first n with |visited vertices| = k, or None."""
    if trace.path is None:
        raise ValueError("trace has no path")
    seen = {trace.start}
    if k <= 1:
        return 0 if k == 1 else None
    for n, (z, g, _f) in enumerate(trace.path.tolist(), start=1):
        seen.add((z, g))
        if len(seen) == k:
            return n
    return None


def exit_time_replay(trace: TraceRecord, A: Subgraph) -> int | None:
    """Replay: first n >= 1 with X_{n-1} in A and edge {X_{n-1}, X_n} not in A."""
    if trace.path is None:
        raise ValueError("trace has no path")
    prev = trace.start
    for n, (z, g, _f) in enumerate(trace.path.tolist(), start=1):
        cur = CylinderVertex(z, g)
        if prev in A.vertices and edge_key(prev, cur) not in A.edges:
            return n
        prev = cur
    return None


def write_trace(trace: TraceRecord, path_: str | Path) -> Path:
    """One line per time ``n level fiber new_edge_flag`` (n = 0 is the start).
    Gzip-compressed when the file name ends in ``.gz``."""
    path_ = Path(path_)
    if trace.path is None:
        raise ValueError("trace has no path")
    lines = [f"0 {trace.start.level} {trace.start.fiber} 0"]
    base = trace.start_step if len(trace.path) == trace.steps else 0
    lines += [f"{base + n} {z} {g} {f}" for n, (z, g, f) in enumerate(trace.path.tolist(), start=1)]
    text = "\n".join(lines) + "\n"
    if path_.suffix == ".gz":
        with gzip.open(path_, "wt") as fh:
            fh.write(text)
    else:
        path_.write_text(text)
    return path_


def read_trace(path_: str | Path) -> np.ndarray:
    path_ = Path(path_)
    opener = gzip.open if path_.suffix == ".gz" else open
    with opener(path_, "rt") as fh:
        return np.loadtxt(fh, dtype=np.int64, ndmin=2)


# ---------------------------------------------------------------------------
# network walks


def network_walk_step(net, position, rng: RngStream):
    """One step of the reversible walk on ``net`` from ``position``."""
    i = net.index[position] if not isinstance(position, (int, np.integer)) else int(position)
    nbrs = net._adj[i]
    if not nbrs:
        raise ValueError(f"vertex {net.vertices[i]!r} is isolated")
    weights = np.array([net.conductance[k] for _j, k in nbrs])
    cum = np.cumsum(weights)
    u = rng.random() * float(cum[-1])
    k = 0
    while k < len(cum) - 1 and u >= cum[k]:
        k += 1
    return net.vertices[nbrs[k][0]]


@dataclass
class WalkBatch:
    end: np.ndarray
    steps: np.ndarray
    counts: np.ndarray
    net_sum: np.ndarray
    net_sumsq: np.ndarray


def network_walk_batch(net, start, absorbing: Iterable, n_walks: int, rng: RngStream, *,
                       count=(), max_steps: int = DEFAULT_MAX_STEPS, track: bool = False,
                       impl=None) -> WalkBatch:
    """``n_walks`` independent walks from ``start`` until ``absorbing``.

    ``end`` holds vertex indices (-1 when the cap was hit), ``counts`` the
    number of visits (time 0 included) to vertices in ``count``; with
    ``track`` the per-edge net crossings are summed over walks.
    """
    indptr, indices, weights, eids = net.csr()
    if np.any(np.diff(indptr) == 0):
        isolated = [net.vertices[i] for i in np.flatnonzero(np.diff(indptr) == 0)]
        absorbing = set(absorbing)
        if not all(v in absorbing for v in isolated):
            raise ValueError("network has isolated non-absorbing vertices")
    cumw = np.zeros_like(weights)
    rows = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    for i in range(len(indptr) - 1):
        a, b = indptr[i], indptr[i + 1]
        cumw[a:b] = np.cumsum(weights[a:b])
    esign = np.where(net._u[eids] == rows, 1, -1).astype(np.int64)
    nv = len(net.vertices)
    absorb = np.zeros(nv, dtype=np.uint8)
    for v in absorbing:
        absorb[net.index[v]] = 1
    cmask = np.zeros(nv, dtype=np.uint8)
    for v in count:
        cmask[net.index[v]] = 1
    m = len(net.edges)
    out = WalkBatch(np.zeros(n_walks, np.int64), np.zeros(n_walks, np.int64),
                    np.zeros(n_walks, np.int64), np.zeros(m), np.zeros(m))
    (impl or kernels).network_walks(
        indptr.astype(np.int64), indices.astype(np.int64), cumw.astype(np.float64),
        esign, eids.astype(np.int64), int(net.index[start]), absorb, cmask, int(max_steps),
        rng.bitgen, out.end, out.steps, out.counts, out.net_sum, out.net_sumsq, bool(track))
    return out
