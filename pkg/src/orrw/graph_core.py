"""Cylinder graphs Z x Gamma, finite subgraphs, boundaries and distances.

Vertices are ``(level, fiber)`` pairs.  Undirected edges are stored as
sorted 2-tuples of vertices, so ``{u, v}`` and ``{v, u}`` hash the same.
The ambient cylinder is never materialised: anything that needs ambient
neighbours computes them from the fiber on demand.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple


class CylinderVertex(NamedTuple):
    level: int
    fiber: int


class DirectedEdge(NamedTuple):
    tail: CylinderVertex
    head: CylinderVertex

    @property
    def undirected(self) -> tuple:
        return edge_key(self.tail, self.head)

    def is_horizontal(self) -> bool:
        return self.tail.level != self.head.level


def edge_key(u, v) -> tuple:
    """Canonical undirected edge: the endpoints in sorted order."""
    u = CylinderVertex(*u)
    v = CylinderVertex(*v)
    return (u, v) if u <= v else (v, u)


class FiberFormatError(ValueError):
    """Raised for malformed fiber edge-list files; carries the line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class FiberGraph:
    """A finite connected simple graph, the cross-section of the cylinder."""

    vertex_count: int
    edges: frozenset = frozenset()
    name: str = ""

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("a fiber needs at least one vertex")
        canon = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise ValueError(f"self-loop at fiber vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge {e} out of range")
            canon.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(canon))
        if not self.name:
            object.__setattr__(self, "name", f"fiber{self.vertex_count}")
        if not self._connected():
            raise ValueError(f"fiber {self.name!r} is not connected")

    def _connected(self) -> bool:
        adj = self.adjacency()
        seen = {0}
        todo = [0]
        while todo:
            for w in adj[todo.pop()]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return len(seen) == self.vertex_count

    def __len__(self) -> int:
        return self.vertex_count

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def neighbors(self, g: int) -> list[int]:
        return self.adjacency()[g]

    @property
    def max_degree(self) -> int:
        return max(len(a) for a in self.adjacency())


def point() -> FiberGraph:
    return FiberGraph(1, frozenset(), "point")


def path(m: int) -> FiberGraph:
    if m == 1:
        return point()
    return FiberGraph(m, frozenset((i, i + 1) for i in range(m - 1)), f"path{m}")


def cycle(m: int) -> FiberGraph:
    if m < 3:
        raise ValueError("a simple cycle needs at least 3 vertices")
    return FiberGraph(m, frozenset((i, (i + 1) % m) for i in range(m)), f"cycle{m}")


def complete(m: int) -> FiberGraph:
    edges = frozenset((i, j) for i in range(m) for j in range(i + 1, m))
    return FiberGraph(m, edges, f"complete{m}")


def load_fiber_file(path_: str | Path, name: str | None = None) -> FiberGraph:
    """Read a fiber from a ``u v`` edge list (0-based, ``#`` comments)."""
    path_ = Path(path_)
    edges = []
    for lineno, raw in enumerate(path_.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FiberFormatError(f"expected 'u v', got {raw!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise FiberFormatError(f"non-integer vertex in {raw!r}", lineno) from None
        if u < 0 or v < 0:
            raise FiberFormatError("vertex indices must be non-negative", lineno)
        if u == v:
            raise FiberFormatError(f"self-loop {u}", lineno)
        edges.append((u, v))
    if not edges:
        return FiberGraph(1, frozenset(), name or path_.stem)
    n = 1 + max(max(e) for e in edges)
    try:
        return FiberGraph(n, frozenset(edges), name or path_.stem)
    except ValueError as exc:
        raise FiberFormatError(str(exc)) from None


_FAMILY = re.compile(r"^(point|path|cycle|complete)(\d*)$")


def parse_fiber(spec: str) -> FiberGraph:
    """``point``, ``path3``, ``cycle4``, ``complete5`` or ``file:<path>``."""
    spec = spec.strip()
    if spec.startswith("file:"):
        return load_fiber_file(spec[5:])
    m = _FAMILY.match(spec)
    if m is None:
        raise ValueError(f"unknown fiber {spec!r}")
    family, size = m.groups()
    if family == "point":
        if size not in ("", "1"):
            raise ValueError("point takes no size")
        return point()
    if not size:
        raise ValueError(f"fiber family {family!r} needs a size, e.g. {family}3")
    return {"path": path, "cycle": cycle, "complete": complete}[family](int(size))


# ---------------------------------------------------------------------------
# ambient cylinder


def ambient_neighbors(v, fiber: FiberGraph) -> list[CylinderVertex]:
    z, g = v
    out = [CylinderVertex(z - 1, g), CylinderVertex(z + 1, g)]
    out.extend(CylinderVertex(z, h) for h in fiber.neighbors(g))
    return out


def is_cylinder_edge(u, v, fiber: FiberGraph) -> bool:
    (zu, gu), (zv, gv) = u, v
    if gu == gv:
        return abs(zu - zv) == 1
    if zu == zv:
        return (min(gu, gv), max(gu, gv)) in fiber.edges
    return False


@dataclass(frozen=True)
class Subgraph:
    """A finite subgraph of Z x Gamma: vertex set plus undirected edge set."""

    vertices: frozenset
    edges: frozenset = frozenset()
    _adj: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        verts = frozenset(CylinderVertex(*v) for v in self.vertices)
        edges = frozenset(edge_key(u, v) for u, v in self.edges)
        for u, v in edges:
            if u not in verts or v not in verts:
                raise ValueError(f"edge {(u, v)} has an endpoint outside the vertex set")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)
        adj: dict = {v: [] for v in verts}
        for u, v in sorted(edges):
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adj", adj)

    @classmethod
    def from_edges(cls, edges: Iterable, extra_vertices: Iterable = ()) -> "Subgraph":
        edges = [edge_key(u, v) for u, v in edges]
        verts = {v for e in edges for v in e}
        verts.update(CylinderVertex(*v) for v in extra_vertices)
        return cls(frozenset(verts), frozenset(edges))

    def __contains__(self, v) -> bool:
        return CylinderVertex(*v) in self.vertices

    def neighbors(self, v) -> list[CylinderVertex]:
        return self._adj[CylinderVertex(*v)]

    def has_edge(self, u, v) -> bool:
        return edge_key(u, v) in self.edges

    def sorted_vertices(self) -> list[CylinderVertex]:
        return sorted(self.vertices)

    def levels(self) -> list[int]:
        return sorted({v.level for v in self.vertices})

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        start = min(self.vertices)
        return len(_bfs(self, start)) == len(self.vertices)

    def validate_in(self, fiber: FiberGraph) -> None:
        for v in self.vertices:
            if not 0 <= v.fiber < fiber.vertex_count:
                raise ValueError(f"vertex {v} outside fiber {fiber.name}")
        for u, v in self.edges:
            if not is_cylinder_edge(u, v, fiber):
                raise ValueError(f"{(u, v)} is not an edge of Z x {fiber.name}")

    def union(self, other: "Subgraph") -> "Subgraph":
        return Subgraph(self.vertices | other.vertices, self.edges | other.edges)


def build_cylinder_window(fiber: FiberGraph, z_min: int, z_max: int) -> Subgraph:
    """All vertices and edges of Z x Gamma on levels ``z_min..z_max``."""
    if z_min > z_max:
        raise ValueError(f"empty window: z_min={z_min} > z_max={z_max}")
    verts = [CylinderVertex(z, g) for z in range(z_min, z_max + 1)
             for g in range(fiber.vertex_count)]
    edges = []
    for z in range(z_min, z_max + 1):
        for a, b in fiber.edges:
            edges.append(((z, a), (z, b)))
        if z < z_max:
            edges.extend(((z, g), (z + 1, g)) for g in range(fiber.vertex_count))
    return Subgraph(frozenset(verts), frozenset(edge_key(u, v) for u, v in edges))


def edge_boundary(A: Subgraph, ambient: FiberGraph) -> set[DirectedEdge]:
    """Directed ambient edges with tail in A whose undirected edge is not in A."""
    out = set()
    for v in A.vertices:
        for w in ambient_neighbors(v, ambient):
            if edge_key(v, w) not in A.edges:
                out.add(DirectedEdge(v, w))
    return out


def sorted_edge_boundary(A: Subgraph, ambient: FiberGraph) -> list[DirectedEdge]:
    return sorted(edge_boundary(A, ambient))


def vertex_boundary(A: Subgraph, ambient: FiberGraph) -> set[CylinderVertex]:
    return {e.tail for e in edge_boundary(A, ambient)}


def _bfs(A: Subgraph, source) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in A.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def bfs_distances(A: Subgraph, source) -> dict:
    """Intrinsic distances from ``source`` to every vertex of its component."""
    source = CylinderVertex(*source)
    if source not in A.vertices:
        raise KeyError(f"{source} is not a vertex of the subgraph")
    return _bfs(A, source)


def intrinsic_distance(A: Subgraph, u, v) -> int | None:
    """Length of a shortest u-v path using only edges of A; None if unreachable."""
    u, v = CylinderVertex(*u), CylinderVertex(*v)
    if v not in A.vertices:
        raise KeyError(f"{v} is not a vertex of the subgraph")
    return bfs_distances(A, u).get(v)


def level_complete(A: Subgraph, z: int, fiber: FiberGraph) -> bool:
    """Whether the whole level set {z} x Gamma, edges included, lies in A."""
    for g in range(fiber.vertex_count):
        if (z, g) not in A.vertices:
            return False
    return all(edge_key((z, a), (z, b)) in A.edges for a, b in fiber.edges)


def incomplete_level_distance(A: Subgraph, u, v, fiber: FiberGraph) -> int:
    """Number of levels between u and v (inclusive) not contained in A."""
    u, v = CylinderVertex(*u), CylinderVertex(*v)
    for w in (u, v):
        if w not in A.vertices:
            raise KeyError(f"{w} is not a vertex of the subgraph")
    lo, hi = sorted((u.level, v.level))
    return sum(1 for i in range(lo, hi + 1) if not level_complete(A, i, fiber))


def iter_levels(vertices: Iterable) -> Iterator[int]:
    return iter(sorted({CylinderVertex(*v).level for v in vertices}))
