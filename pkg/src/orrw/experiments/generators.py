"""Seeded random instances: connected cylinder subgraphs and networks."""

from __future__ import annotations

import numpy as np

from ..electric import Network
from ..graph_core import (
    CylinderVertex,
    FiberGraph,
    Subgraph,
    ambient_neighbors,
    edge_key,
)


def random_connected_subgraph(fiber: FiberGraph, levels: int, target_edges: int,
                              rng: np.random.Generator, origin=(0, 0)) -> Subgraph:
    """Grow a connected edge set from ``origin`` inside levels 0..levels-1.

    Each step adds a uniformly chosen ambient edge touching the current
    vertex set (inside the window, not yet present).  Stops at
    ``target_edges`` or when the window is exhausted.
    """
    origin = CylinderVertex(*origin)
    verts = {origin}
    edges: set = set()
    frontier: set = set()

    def extend(v):
        for w in ambient_neighbors(v, fiber):
            if 0 <= w.level < levels:
                e = edge_key(v, w)
                if e not in edges:
                    frontier.add(e)

    extend(origin)
    while len(edges) < target_edges and frontier:
        choices = sorted(frontier)
        e = choices[int(rng.integers(len(choices)))]
        frontier.discard(e)
        edges.add(e)
        for v in e:
            if v not in verts:
                verts.add(v)
                extend(v)
    return Subgraph(frozenset(verts), frozenset(edges))


def random_subgraph_with_vertices(fiber: FiberGraph, levels: int, n_vertices: int,
                                  rng: np.random.Generator, extra_edge_prob: float = 0.5) -> Subgraph:
    """Connected subgraph with exactly ``n_vertices`` vertices; each edge
    between chosen vertices beyond a spanning tree kept with the given
    probability."""
    if n_vertices > levels * fiber.vertex_count:
        raise ValueError("window too small for the requested vertex count")
    origin = CylinderVertex(0, 0)
    verts = [origin]
    tree = []
    seen = {origin}
    while len(verts) < n_vertices:
        cand = sorted({(v, w) for v in verts for w in ambient_neighbors(v, fiber)
                       if 0 <= w.level < levels and w not in seen})
        v, w = cand[int(rng.integers(len(cand)))]
        seen.add(w)
        verts.append(w)
        tree.append(edge_key(v, w))
    edges = set(tree)
    vset = set(verts)
    for v in sorted(vset):
        for w in ambient_neighbors(v, fiber):
            e = edge_key(v, w)
            if w in vset and e not in edges and v < w and rng.random() < extra_edge_prob:
                edges.add(e)
    return Subgraph(frozenset(vset), frozenset(edges))


def random_network(fiber: FiberGraph, n_vertices: int, rng: np.random.Generator,
                   levels: int | None = None, c_range=(0.2, 5.0)) -> Network:
    """Random connected cylinder subgraph with log-uniform conductances."""
    levels = levels or max(2, n_vertices)
    sub = random_subgraph_with_vertices(fiber, levels, n_vertices, rng)
    lo, hi = np.log(c_range[0]), np.log(c_range[1])
    cmap = {e: float(np.exp(rng.uniform(lo, hi))) for e in sorted(sub.edges)}
    return Network(cmap, vertices=sub.vertices)
