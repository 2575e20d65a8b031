import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orrw.graph_core import (
    CylinderVertex,
    FiberFormatError,
    FiberGraph,
    Subgraph,
    ambient_neighbors,
    bfs_distances,
    build_cylinder_window,
    complete,
    cycle,
    edge_boundary,
    edge_key,
    incomplete_level_distance,
    intrinsic_distance,
    is_cylinder_edge,
    level_complete,
    load_fiber_file,
    parse_fiber,
    path,
    point,
    vertex_boundary,
)
from orrw.experiments.generators import random_connected_subgraph

import numpy as np


@pytest.mark.parametrize("spec,n,m", [("point", 1, 0), ("path3", 3, 2), ("cycle4", 4, 4), ("complete5", 5, 10)])
def test_fiber_families(spec, n, m):
    f = parse_fiber(spec)
    assert (f.vertex_count, len(f.edges), f.name) == (n, m, spec)


@pytest.mark.parametrize("spec", ["path", "ring3", "point2", "cycle", ""])
def test_bad_fiber_specs(spec):
    with pytest.raises(ValueError):
        parse_fiber(spec)


def test_fiber_must_be_connected():
    with pytest.raises(ValueError, match="not connected"):
        FiberGraph(4, frozenset({(0, 1), (2, 3)}))


def test_fiber_file_roundtrip(tmp_path):
    p = tmp_path / "tri.txt"
    p.write_text("# triangle\n0 1\n1 2\n\n2 0  # closing edge\n")
    f = parse_fiber(f"file:{p}")
    assert f.vertex_count == 3 and f.edges == cycle(3).edges and f.name == "tri"


@pytest.mark.parametrize("body,line", [("0 1\n1 x\n", 2), ("0 1\n\n2 2\n", 3), ("0 1 2\n", 1), ("0 -1\n", 1)])
def test_fiber_file_errors_carry_line(tmp_path, body, line):
    p = tmp_path / "bad.txt"
    p.write_text(body)
    with pytest.raises(FiberFormatError) as exc:
        load_fiber_file(p)
    assert exc.value.lineno == line
    assert f"line {line}" in str(exc.value)


def test_ambient_neighbors_and_edges():
    f = path(3)
    assert sorted(ambient_neighbors((5, 1), f)) == [(4, 1), (5, 0), (5, 2), (6, 1)]
    assert is_cylinder_edge((0, 0), (1, 0), f)
    assert not is_cylinder_edge((0, 0), (1, 1), f)
    assert not is_cylinder_edge((0, 0), (0, 2), f)
    assert edge_key((1, 0), (0, 0)) == ((0, 0), (1, 0))


@pytest.mark.parametrize("fiber", [point(), path(3), cycle(4), complete(4)])
def test_window_counts_and_boundary(fiber):
    W = build_cylinder_window(fiber, -2, 3)
    G, EG, n = fiber.vertex_count, len(fiber.edges), 6
    assert len(W.vertices) == n * G
    assert len(W.edges) == n * EG + (n - 1) * G
    bd = edge_boundary(W, fiber)
    assert len(bd) == 2 * G
    assert {f.head.level for f in bd} == {-3, 4}
    assert vertex_boundary(W, fiber) == {v for v in W.vertices if v.level in (-2, 3)}
    assert all(level_complete(W, z, fiber) for z in range(-2, 4))


def test_boundary_includes_missing_edges_between_members():
    f = path(2)
    A = Subgraph.from_edges([((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 1), (1, 0))])
    bd = edge_boundary(A, f)
    assert ((0, 0), (1, 0)) in bd and ((1, 0), (0, 0)) in bd
    assert level_complete(A, 0, f) and level_complete(A, 1, f)


def test_distances():
    f = path(2)
    A = Subgraph.from_edges([((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (2, 1))], extra_vertices=[(5, 0)])
    assert intrinsic_distance(A, (0, 0), (2, 1)) == 3
    assert intrinsic_distance(A, (0, 0), (5, 0)) is None
    assert bfs_distances(A, (1, 1)) == {(1, 1): 0, (1, 0): 1, (2, 1): 1, (0, 0): 2}
    assert incomplete_level_distance(A, (0, 0), (2, 1), f) == 2  # level 1 is complete
    with pytest.raises(KeyError):
        intrinsic_distance(A, (0, 0), (9, 9))


def test_subgraph_rejects_dangling_edge():
    with pytest.raises(ValueError):
        Subgraph(frozenset({(0, 0)}), frozenset({((0, 0), (1, 0))}))


@settings(max_examples=60, deadline=None)
@given(fiber=st.sampled_from(["point", "path3", "cycle4", "complete3"]),
       levels=st.integers(1, 6), target=st.integers(0, 40), seed=st.integers(0, 2**32 - 1))
def test_random_connected_subgraph_properties(fiber, levels, target, seed):
    f = parse_fiber(fiber)
    A = random_connected_subgraph(f, levels, target, np.random.default_rng(seed))
    assert A.is_connected()
    assert CylinderVertex(0, 0) in A.vertices
    assert all(0 <= v.level < levels for v in A.vertices)
    A.validate_in(f)
    total = levels * len(f.edges) + (levels - 1) * f.vertex_count
    assert len(A.edges) == min(target, total)
    for e in edge_boundary(A, f):
        assert e.tail in A.vertices and is_cylinder_edge(e.tail, e.head, f)
        assert edge_key(e.tail, e.head) not in A.edges
