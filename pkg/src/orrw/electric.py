"""Electrical networks on finite subgraphs of Z x Gamma.

A :class:`Network` is a finite weighted multigraph whose parallel edges are
merged by summing conductances.  Vertex labels are cylinder vertices or
arbitrary hashable auxiliaries (the cemetery ``"Delta"``, the shunt
vertices ``"b"`` and ``"z"``).  All solves go through a sparse LU
factorisation of the grounded Laplacian.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph_core import (
    CylinderVertex,
    DirectedEdge,
    FiberGraph,
    Subgraph,
    bfs_distances,
    edge_boundary,
    edge_key,
)
from .reports import BoundCheckReport

CEMETERY = "Delta"


class NetworkError(ValueError):
    pass


class DisconnectedError(NetworkError):
    pass


class FlowDecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    residual_tolerance: float = 1e-10
    max_condition_warn: float = 1e12

    def __post_init__(self):
        if not self.residual_tolerance > 0:
            raise ValueError("residual_tolerance must be positive")


def _label_sort_key(x):
    # cylinder vertices first, auxiliaries after, each group in natural order
    if isinstance(x, tuple):
        return (0, x, "")
    return (1, (), str(x))


class Network:
    """Undirected network with one aggregated conductance per vertex pair."""

    def __init__(self, conductance: Mapping, vertices: Iterable | None = None):
        agg: dict = {}
        for (u, v), c in conductance.items():
            if u == v:
                raise NetworkError(f"self-loop at {u!r}")
            if not c > 0:
                raise NetworkError(f"conductance of {(u, v)} must be positive, got {c}")
            key = (u, v) if _label_sort_key(u) <= _label_sort_key(v) else (v, u)
            agg[key] = agg.get(key, 0) + c
        labels = set(vertices) if vertices is not None else set()
        for u, v in agg:
            labels.update((u, v))
        self.vertices: tuple = tuple(sorted(labels, key=_label_sort_key))
        self.index = {x: i for i, x in enumerate(self.vertices)}
        keys = sorted(agg, key=lambda e: (self.index[e[0]], self.index[e[1]]))
        self.edges: tuple = tuple(keys)
        self.conductance = np.array([float(agg[k]) for k in keys], dtype=float)
        self.exact_conductance = [agg[k] for k in keys]
        self.edge_index = {k: i for i, k in enumerate(keys)}
        n = len(self.vertices)
        self._u = np.array([self.index[u] for u, _ in keys], dtype=np.int64)
        self._v = np.array([self.index[v] for _, v in keys], dtype=np.int64)
        self.pi = np.bincount(self._u, self.conductance, n) + np.bincount(self._v, self.conductance, n)
        self._adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for k, (i, j) in enumerate(zip(self._u, self._v)):
            self._adj[i].append((int(j), k))
            self._adj[j].append((int(i), k))

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Network({len(self.vertices)} vertices, {len(self.edges)} edges)"

    @classmethod
    def from_subgraph(cls, sub: Subgraph, conductance=1.0) -> "Network":
        """Network on ``sub``; ``conductance`` is a constant, mapping or callable."""
        cmap = {}
        for e in sorted(sub.edges):
            if callable(conductance):
                c = conductance(e)
            elif isinstance(conductance, Mapping):
                c = conductance[e]
            else:
                c = conductance
            cmap[e] = c
        return cls(cmap, vertices=sub.vertices)

    def neighbors(self, x) -> list:
        return [self.vertices[j] for j, _ in self._adj[self.index[x]]]

    def c(self, x, y) -> float:
        key = (x, y) if _label_sort_key(x) <= _label_sort_key(y) else (y, x)
        k = self.edge_index.get(key)
        return 0.0 if k is None else float(self.conductance[k])

    def weighted_degree(self, x) -> float:
        return float(self.pi[self.index[x]])

    def component(self, x) -> set[int]:
        start = self.index[x]
        seen = {start}
        todo = [start]
        while todo:
            for j, _ in self._adj[todo.pop()]:
                if j not in seen:
                    seen.add(j)
                    todo.append(j)
        return seen

    def laplacian(self) -> sp.csr_matrix:
        n = len(self.vertices)
        rows = np.concatenate([self._u, self._v, np.arange(n)])
        cols = np.concatenate([self._v, self._u, np.arange(n)])
        vals = np.concatenate([-self.conductance, -self.conductance, self.pi])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def csr(self):
        """``(indptr, indices, weights, edge_ids)`` adjacency arrays, rows sorted."""
        indptr = [0]
        indices, weights, eids = [], [], []
        for i in range(len(self.vertices)):
            for j, k in sorted(self._adj[i]):
                indices.append(j)
                weights.append(self.conductance[k])
                eids.append(k)
            indptr.append(len(indices))
        return (np.array(indptr, dtype=np.int64), np.array(indices, dtype=np.int64),
                np.array(weights, dtype=float), np.array(eids, dtype=np.int64))

    def with_conductances(self, values) -> "Network":
        return Network({e: float(c) for e, c in zip(self.edges, values)}, vertices=self.vertices)


@dataclass
class VoltagePotential:
    network: Network
    values: np.ndarray
    source: Hashable
    sinks: frozenset

    def __getitem__(self, x) -> float:
        return float(self.values[self.network.index[x]])


class FlowMap:
    """Antisymmetric edge function: one value per undirected edge, stored
    in the network's canonical orientation ``edges[k] = (u, v)``."""

    def __init__(self, network: Network, values):
        if len(values) != len(network.edges):
            raise ValueError("one flow value per network edge is required")
        self.network = network
        self.values = list(values)

    def __call__(self, x, y):
        key = (x, y)
        k = self.network.edge_index.get(key)
        if k is not None:
            return self.values[k]
        k = self.network.edge_index.get((y, x))
        if k is not None:
            return -self.values[k]
        return 0

    def divergence(self, x):
        """Net flow out of ``x``."""
        i = self.network.index[x]
        total = 0
        for _, k in self.network._adj[i]:
            total += self.values[k] if self.network._u[k] == i else -self.values[k]
        return total

    def strength(self, source):
        return self.divergence(source)

    def __add__(self, other: "FlowMap") -> "FlowMap":
        return FlowMap(self.network, [a + b for a, b in zip(self.values, other.values)])

    def __sub__(self, other: "FlowMap") -> "FlowMap":
        return FlowMap(self.network, [a - b for a, b in zip(self.values, other.values)])

    def scaled(self, s) -> "FlowMap":
        return FlowMap(self.network, [s * a for a in self.values])


# ---------------------------------------------------------------------------
# solves


def _grounded_solve(net: Network, keep: np.ndarray, rhs: np.ndarray, opts: SolveOptions) -> np.ndarray:
    """Solve ``L[keep, keep] x = rhs`` (rhs may have several columns)."""
    L = net.laplacian().tocsc()
    idx = np.flatnonzero(keep)
    M = L[idx][:, idx].tocsc()
    if len(idx) <= 400:
        dense = M.toarray()
        cond = np.linalg.cond(dense)
        if not np.isfinite(cond):
            raise NetworkError("singular grounded Laplacian")
        if cond > opts.max_condition_warn:
            warnings.warn(f"grounded Laplacian is ill-conditioned (cond={cond:.3g})", RuntimeWarning)
    try:
        lu = spla.splu(M)
    except RuntimeError as exc:
        raise NetworkError(f"singular grounded Laplacian: {exc}") from None
    x = lu.solve(np.asarray(rhs, dtype=float))
    if not np.all(np.isfinite(x)):
        raise NetworkError("non-finite solution; the network is probably disconnected")
    return x


def _check_harmonic(net: Network, v: np.ndarray, interior: np.ndarray, opts: SolveOptions) -> float:
    residual = net.laplacian() @ v
    scale = max(1.0, float(np.max(np.abs(v))) * float(np.max(net.pi, initial=1.0)))
    worst = float(np.max(np.abs(residual[interior]), initial=0.0))
    if worst > opts.residual_tolerance * scale:
        raise NetworkError(f"harmonic residual {worst:.3g} exceeds tolerance")
    return worst


def solve_unit_current(net: Network, a, Z: Iterable, opts: SolveOptions = SolveOptions()):
    """Voltage and unit current from ``a`` to the set ``Z``.

    Returns ``(VoltagePotential, FlowMap)`` with ``v = 0`` on Z and
    ``v(a) = R(a <-> Z)``.  Vertices outside the component of ``a`` get
    zero voltage and carry no current.
    """
    Z = frozenset(Z)
    if not Z:
        raise NetworkError("the sink set is empty")
    if a in Z:
        raise NetworkError("the source lies in the sink set")
    for x in (a, *Z):
        if x not in net.index:
            raise NetworkError(f"{x!r} is not a vertex of the network")
    comp = net.component(a)
    zi = {net.index[x] for x in Z}
    if not comp & zi:
        raise DisconnectedError(f"{a!r} is not connected to the sinks")
    n = len(net)
    keep = np.zeros(n, dtype=bool)
    keep[list(comp - zi)] = True
    rhs = np.zeros(n)
    rhs[net.index[a]] = 1.0
    v = np.zeros(n)
    v[keep] = _grounded_solve(net, keep, rhs[keep], opts)
    interior = keep.copy()
    interior[net.index[a]] = False
    _check_harmonic(net, v, interior, opts)
    cur = net.conductance * (v[net._u] - v[net._v])
    flow = FlowMap(net, cur.tolist())
    strength = flow.strength(a)
    if abs(strength - 1.0) > 1e-8:
        raise NetworkError(f"unit current has strength {strength}")
    return VoltagePotential(net, v, a, Z), flow


def effective_resistance(net: Network, a, Z: Iterable, opts: SolveOptions = SolveOptions()) -> float:
    volt, _ = solve_unit_current(net, a, Z, opts)
    return volt[a]


def effective_conductance(net: Network, a, Z: Iterable, opts: SolveOptions = SolveOptions()) -> float:
    return 1.0 / effective_resistance(net, a, Z, opts)


def hit_probability(net: Network, a, hit: Iterable, avoid: Iterable,
                    opts: SolveOptions = SolveOptions()) -> float:
    """P_a(the network walk reaches ``hit`` before ``avoid``)."""
    hit, avoid = set(hit), set(avoid)
    if hit & avoid:
        raise NetworkError("hit and avoid sets overlap")
    if a in hit:
        return 1.0
    if a in avoid:
        return 0.0
    comp = net.component(a)
    hi = {net.index[x] for x in hit} & comp
    ai = {net.index[x] for x in avoid} & comp
    if not hi:
        return 0.0
    if not ai:
        # a recurrent finite chain with a reachable target hits it surely
        return 1.0
    n = len(net)
    keep = np.zeros(n, dtype=bool)
    keep[list(comp - hi - ai)] = True
    h = np.zeros(n)
    h[list(hi)] = 1.0
    L = net.laplacian()
    rhs = -(L @ h)[keep]
    h[keep] = _grounded_solve(net, keep, rhs, opts)
    _check_harmonic(net, h, keep, opts)
    return float(h[net.index[a]])


def expected_hitting_time(net: Network, a, z, opts: SolveOptions = SolveOptions()) -> float:
    """E_a[H_z] from the first-step equations with ``z`` absorbing."""
    if a == z:
        return 0.0
    comp = net.component(z)
    if net.index[a] not in comp:
        raise DisconnectedError(f"{a!r} and {z!r} are not connected")
    n = len(net)
    keep = np.zeros(n, dtype=bool)
    keep[list(comp)] = True
    keep[net.index[z]] = False
    h = np.zeros(n)
    h[keep] = _grounded_solve(net, keep, net.pi[keep], opts)
    return float(h[net.index[a]])


def flow_energy(net: Network, j: FlowMap) -> float:
    """Half the sum over directed edges of r(e) j(e)^2."""
    vals = np.asarray([float(x) for x in j.values])
    return float(np.sum(vals * vals / net.conductance))


def orrw_conductances(A: Subgraph, window: Subgraph, delta) -> Network:
    """Window network with conductance 1 + delta on A-edges and 1 elsewhere."""
    if not A.vertices <= window.vertices or not A.edges <= window.edges:
        raise NetworkError("A is not contained in the window")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    return Network.from_subgraph(window, lambda e: 1 + delta if e in A.edges else 1)


def fundamental_cycles(net: Network) -> list[list[tuple[int, int]]]:
    """Cycle basis as lists of ``(edge_index, sign)`` from a BFS spanning forest."""
    n = len(net)
    parent = [-1] * n
    parent_edge = [-1] * n
    depth = [-1] * n
    tree = set()
    for root in range(n):
        if depth[root] >= 0:
            continue
        depth[root] = 0
        queue = [root]
        for x in queue:
            for y, k in sorted(net._adj[x]):
                if depth[y] < 0:
                    depth[y] = depth[x] + 1
                    parent[y] = x
                    parent_edge[y] = k
                    tree.add(k)
                    queue.append(y)
    cycles = []
    for k in range(len(net.edges)):
        if k in tree:
            continue
        u, v = int(net._u[k]), int(net._v[k])
        # walk u -> ... -> v along the tree, then close with edge v -> u
        up, vp = [], []
        x, y = u, v
        while x != y:
            if depth[x] >= depth[y]:
                up.append(x)
                x = parent[x]
            else:
                vp.append(y)
                y = parent[y]
        cyc = []
        for w in up:
            e = parent_edge[w]
            cyc.append((e, 1 if net._u[e] == w else -1))
        for w in reversed(vp):
            e = parent_edge[w]
            cyc.append((e, 1 if net._v[e] == w else -1))
        cyc.append((k, -1))
        cycles.append(cyc)
    return cycles


# ---------------------------------------------------------------------------
# exit edges


def cemetery_network(A: Subgraph, delta, ambient: FiberGraph) -> tuple[Network, list[DirectedEdge]]:
    """A with interior conductance 1 + delta and one unit edge to the
    cemetery per boundary edge (parallel edges summed)."""
    boundary = sorted(edge_boundary(A, ambient))
    cmap: dict = {e: 1 + delta for e in sorted(A.edges)}
    for f in boundary:
        key = (f.tail, CEMETERY)
        cmap[key] = cmap.get(key, 0) + 1
    return Network(cmap, vertices=set(A.vertices) | {CEMETERY}), boundary


def exit_tail_voltages(A: Subgraph, delta, ambient: FiberGraph, sources,
                       opts: SolveOptions = SolveOptions()) -> tuple[Network, list[DirectedEdge], np.ndarray]:
    """Voltage columns for unit currents from each source to the cemetery.

    ``V[i, s]`` is the voltage at network vertex ``i`` for the current out of
    ``sources[s]``; the exit probability of edge f is ``V[f.tail, s]``.
    """
    if not A.is_connected():
        raise NetworkError("A must be connected")
    net, boundary = cemetery_network(A, delta, ambient)
    if not boundary:
        raise NetworkError("A has an empty edge boundary")
    for a in sources:
        if CylinderVertex(*a) not in A.vertices:
            raise NetworkError(f"source {a} is not in A")
    keep = np.ones(len(net), dtype=bool)
    keep[net.index[CEMETERY]] = False
    rhs = np.zeros((int(keep.sum()), len(sources)))
    pos = {i: p for p, i in enumerate(np.flatnonzero(keep))}
    for s, a in enumerate(sources):
        rhs[pos[net.index[CylinderVertex(*a)]], s] = 1.0
    sol = _grounded_solve(net, keep, rhs, opts)
    V = np.zeros((len(net), len(sources)))
    V[keep] = sol.reshape(int(keep.sum()), len(sources))
    for s in range(len(sources)):
        interior = keep.copy()
        interior[net.index[CylinderVertex(*sources[s])]] = False
        _check_harmonic(net, V[:, s], interior, opts)
    return net, boundary, V


def exit_edge_distribution(A: Subgraph, delta, a, ambient: FiberGraph,
                           opts: SolveOptions = SolveOptions()) -> dict[DirectedEdge, float]:
    """Law of the first boundary edge crossed by the walk with conductances
    1 + delta on A and 1 elsewhere, started at ``a``."""
    a = CylinderVertex(*a)
    net, boundary, V = exit_tail_voltages(A, delta, ambient, [a], opts)
    probs = {f: float(V[net.index[f.tail], 0]) for f in boundary}
    total = math.fsum(probs.values())
    if abs(total - 1.0) > 1e-8:
        raise NetworkError(f"exit probabilities sum to {total}")
    return probs


def check_balance_inequality(A: Subgraph, delta, a, ambient: FiberGraph,
                             tolerance: float = 1e-8,
                             opts: SolveOptions = SolveOptions()) -> BoundCheckReport:
    """Check |P(f1) - P(f2)| <= d_A(f1-, f2-) / (1 + delta) over all boundary
    pairs.  ``a=None`` checks every starting vertex of A at once."""
    sources = sorted(A.vertices) if a is None else [CylinderVertex(*a)]
    net, boundary, V = exit_tail_voltages(A, delta, ambient, sources, opts)
    tails = sorted({f.tail for f in boundary})
    rows = np.array([net.index[t] for t in tails])
    P = V[rows]  # tails x sources
    dist = np.zeros((len(tails), len(tails)))
    for i, t in enumerate(tails):
        d = bfs_distances(A, t)
        dist[i] = [d[u] for u in tails]
    worst = (math.inf, 0.0, 0.0)
    for s in range(len(sources)):
        diff = np.abs(P[:, s][:, None] - P[:, s][None, :])
        bound = dist / (1 + float(delta))
        slack = bound - diff
        k = np.unravel_index(np.argmin(slack), slack.shape)
        if slack[k] < worst[0]:
            worst = (float(slack[k]), float(diff[k]), float(bound[k]))
    slack, diff, bound = worst
    verdict = "pass" if slack >= -tolerance else "fail"
    return BoundCheckReport(
        name="balance",
        estimate=diff,
        ci_low=diff,
        ci_high=diff,
        bound=bound,
        vacuous=False,
        verdict=verdict,
        replications=0,
        details={"worst_slack": slack, "boundary_edges": len(boundary),
                 "sources": len(sources), "delta": float(delta)},
    )


# ---------------------------------------------------------------------------
# shunt network and flow decomposition


def build_shunt_network(A: Subgraph, S: Iterable[int], r: int, eta: float):
    """Unit-conductance copy of A with level r glued into ``"b"`` and an
    auxiliary ``"z"`` joined with conductance ``eta`` to every A-vertex on a
    level of S.  Returns ``(network, "b", "z")``."""
    S = sorted(set(S))
    if not eta > 0:
        raise ValueError("eta must be positive")
    if not any(v.level == r for v in A.vertices):
        raise NetworkError(f"A has no vertex at level {r}")
    if any(s >= r for s in S):
        raise NetworkError("levels of S must lie strictly left of r")

    def glue(x):
        return "b" if x.level == r else x

    cmap: dict = {}
    for u, v in sorted(A.edges):
        gu, gv = glue(u), glue(v)
        if gu == gv:
            continue
        key = (gu, gv)
        cmap[key] = cmap.get(key, 0) + 1
    Sset = set(S)
    for x in sorted(A.vertices):
        if x.level in Sset:
            cmap[(x, "z")] = eta
    verts = {glue(x) for x in A.vertices} | {"b", "z"}
    return Network(cmap, vertices=verts), "b", "z"


def shunt_hit_probability(A: Subgraph, a, S, r: int, eta: float) -> float:
    net, b, z = build_shunt_network(A, S, r, eta)
    return hit_probability(net, CylinderVertex(*a), {b}, {z})


def decompose_flow(j: FlowMap, a, b, z) -> tuple[FlowMap, FlowMap]:
    """Split an acyclic flow from ``a`` to ``{b, z}`` into ``j_b + j_z``.

    Backward exploration from the sinks: a vertex is completed once the
    ``j_b`` value on all its outgoing edges is known, and its incoming edges
    then receive the incoming ``j`` scaled by (outgoing j_b)/(incoming j).
    Ties go to the smallest vertex in network order.  Works with any
    ordered field type (floats or Fractions).
    """
    net = j.network
    ia, ib, iz = net.index[a], net.index[b], net.index[z]
    n = len(net)
    m = len(net.edges)
    vals = j.values
    # orientation of the support: tail -> head with positive magnitude
    out_edges: list[list[int]] = [[] for _ in range(n)]
    in_edges: list[list[int]] = [[] for _ in range(n)]
    tail = [-1] * m
    mag = [0] * m
    for k in range(m):
        x = vals[k]
        if x == 0:
            continue
        u, v = int(net._u[k]), int(net._v[k])
        t, h = (u, v) if x > 0 else (v, u)
        tail[k] = t
        mag[k] = x if x > 0 else -x
        out_edges[t].append(k)
        in_edges[h].append(k)
    if in_edges[ia]:
        raise FlowDecompositionError("flow enters the source")
    if out_edges[ib] or out_edges[iz]:
        raise FlowDecompositionError("flow leaves a sink")
    # cycle detection (Kahn)
    indeg = [len(in_edges[x]) for x in range(n)]
    order = [x for x in range(n) if indeg[x] == 0]
    for x in order:
        for k in out_edges[x]:
            h = int(net._v[k]) if tail[k] == int(net._u[k]) else int(net._u[k])
            indeg[h] -= 1
            if indeg[h] == 0:
                order.append(h)
    if len(order) != n:
        raise FlowDecompositionError("the flow has a cycle")

    jb: list = [None] * m
    for k in range(m):
        if tail[k] < 0:
            jb[k] = 0 * mag[k]
    zero = 0 * (vals[0] if m else 0)
    for k in in_edges[ib]:
        jb[k] = mag[k]
    for k in in_edges[iz]:
        jb[k] = zero
    pending = [sum(1 for k in out_edges[x] if jb[k] is None) for x in range(n)]
    done = [False] * n
    done[ib] = done[iz] = True
    ready = [x for x in range(n) if not done[x] and pending[x] == 0 and (out_edges[x] or in_edges[x])]
    heapq.heapify(ready)
    while ready:
        x = heapq.heappop(ready)
        if done[x]:
            continue
        done[x] = True
        inflow = sum((mag[k] for k in in_edges[x]), zero)
        if in_edges[x]:
            outflow = sum((jb[k] for k in out_edges[x]), zero)
            alpha = outflow / inflow
            for k in in_edges[x]:
                jb[k] = alpha * mag[k]
                t = tail[k]
                pending[t] -= 1
                if pending[t] == 0 and not done[t]:
                    heapq.heappush(ready, t)
    if any(v is None for v in jb):
        raise FlowDecompositionError("exploration did not reach every edge of the support")
    signed = []
    for k in range(m):
        if tail[k] < 0:
            signed.append(jb[k])
        else:
            signed.append(jb[k] if tail[k] == int(net._u[k]) else -jb[k])
    j_b = FlowMap(net, signed)
    return j_b, j - j_b


def to_fraction_flow(j: FlowMap) -> FlowMap:
    return FlowMap(j.network, [Fraction(x) for x in j.values])


def subgraph_edges(net: Network) -> list[tuple]:
    return [edge_key(u, v) for u, v in net.edges if isinstance(u, tuple) and isinstance(v, tuple)]


def decomposition_properties(i: FlowMap, j: FlowMap, b, z) -> dict[str, bool]:
    """Properties (a)-(e) of a split ``i = j + (i - j)`` toward ``b``.

    Exact for Fraction-valued flows; for floats the comparisons are exact
    too, so pass Fractions when an exact verdict is required.
    """
    net = i.network
    ib = net.index[b]
    iz = net.index[z]
    strength_b = -i.divergence(b)
    a_ok = all(j.values[k] == i.values[k] for _, k in net._adj[ib])
    b_ok = all(j.values[k] == 0 for _, k in net._adj[iz])
    c_ok = all(x * y >= 0 for x, y in zip(i.values, j.values))
    d_ok = all(abs(y) <= abs(x) for x, y in zip(i.values, j.values))
    e_ok = all(abs(y) <= strength_b for y in j.values)
    # j must itself be a flow from the source to b: conserved elsewhere
    cons = all(j.divergence(x) == 0 for x in net.vertices
               if x not in (b, z) and i.divergence(x) == 0)
    return {"a": a_ok, "b": b_ok, "c": c_ok, "d": d_ok, "e": e_ok, "conservation": cons}


def commute_time_gap(net: Network, a, z, opts: SolveOptions = SolveOptions()) -> float:
    """|E_a H_z + E_z H_a - R(a <-> z) * sum(pi)| with sum(pi) = 2 * total conductance."""
    lhs = expected_hitting_time(net, a, z, opts) + expected_hitting_time(net, z, a, opts)
    rhs = effective_resistance(net, a, [z], opts) * float(net.pi.sum())
    return abs(lhs - rhs)


def rayleigh_gap(net: Network, a, Z, raise_mask, factors,
                 opts: SolveOptions = SolveOptions()) -> float:
    """C_eff after multiplying the masked conductances by ``factors`` (>= 1)
    minus C_eff before; never negative up to rounding."""
    before = effective_conductance(net, a, Z, opts)
    c = net.conductance.copy()
    c[raise_mask] *= np.asarray(factors, dtype=float)[raise_mask]
    after = effective_conductance(net.with_conductances(c), a, Z, opts)
    return after - before


def thomson_gap(net: Network, a, Z, coefficients, opts: SolveOptions = SolveOptions()) -> float:
    """Energy of the unit current plus a combination of fundamental cycles,
    minus the energy of the current itself."""
    _, cur = solve_unit_current(net, a, Z, opts)
    vals = np.asarray(cur.values, dtype=float)
    for coef, cyc in zip(coefficients, fundamental_cycles(net)):
        for k, sign in cyc:
            vals[k] += coef * sign
    return flow_energy(net, FlowMap(net, vals.tolist())) - flow_energy(net, cur)


def _fraction_solve(M: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(M)
    A = [row[:] + [b] for row, b in zip(M, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise NetworkError("singular system")
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col] * inv
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [A[i][n] / A[i][i] for i in range(n)]


def exact_unit_current(net: Network, a, Z: Iterable) -> FlowMap:
    """Unit current in exact rational arithmetic (small networks only).

    Uses the network's exact conductances, so integer or Fraction inputs
    give a flow that is conserved exactly at every interior vertex.
    """
    Z = set(Z)
    comp = net.component(a)
    zi = {net.index[x] for x in Z}
    unknowns = sorted(comp - zi)
    pos = {i: p for p, i in enumerate(unknowns)}
    c = [Fraction(x) for x in net.exact_conductance]
    M = [[Fraction(0)] * len(unknowns) for _ in unknowns]
    for k in range(len(net.edges)):
        u, v = int(net._u[k]), int(net._v[k])
        for x, y in ((u, v), (v, u)):
            if x in pos:
                M[pos[x]][pos[x]] += c[k]
                if y in pos:
                    M[pos[x]][pos[y]] -= c[k]
    rhs = [Fraction(0)] * len(unknowns)
    rhs[pos[net.index[a]]] = Fraction(1)
    sol = _fraction_solve(M, rhs)
    volt = [Fraction(0)] * len(net)
    for i, p in pos.items():
        volt[i] = sol[p]
    return FlowMap(net, [c[k] * (volt[int(net._u[k])] - volt[int(net._v[k])]) for k in range(len(net.edges))])
