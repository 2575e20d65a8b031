"""Compiled and pure-Python kernels must agree bit for bit."""

import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orrw import _kernels_py, kernels
from orrw.electric import Network
from orrw.graph_core import build_cylinder_window, parse_fiber, path
from orrw.walks import (
    ExitSubgraph,
    HitLevel,
    LevelComplete,
    MaxSteps,
    NewEdge,
    OrrwState,
    RngStream,
    VertexCount,
    network_walk_batch,
    run_until,
)

needs_compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled kernels not built")


def test_bounded_draw_rejection_rule():
    seq = iter([0, 5, 2**64 - 1])
    # total 3: threshold = 2^64 mod 3 = 1, so raw 0 is rejected
    assert _kernels_py.bounded_uint64(lambda: next(seq), 3) == 5 % 3
    assert _kernels_py.uniform01(lambda: 2**64 - 1) < 1.0
    assert _kernels_py.uniform01(lambda: 0) == 0.0


def _conditions(kind, A):
    return {
        "max": [MaxSteps(3000)],
        "level": [HitLevel(6), MaxSteps(10**6)],
        "new": [NewEdge(), MaxSteps(10**6)],
        "complete": [LevelComplete(2, 4), MaxSteps(10**6)],
        "vcount": [VertexCount(25), MaxSteps(10**6)],
        "exit": [ExitSubgraph(A), MaxSteps(10**6)],
    }[kind]


@needs_compiled
@settings(max_examples=60, deadline=None)
@given(fiber=st.sampled_from(["point", "path2", "path3", "cycle4", "complete3"]),
       num=st.integers(0, 2000), den=st.integers(1, 7),
       kind=st.sampled_from(["max", "level", "new", "complete", "vcount", "exit"]),
       seed=st.integers(0, 2**32), rounds=st.integers(1, 4))
def test_orrw_backends_identical(fiber, num, den, kind, seed, rounds):
    f = parse_fiber(fiber)
    A = build_cylinder_window(f, -3, 3)
    out = []
    for name in ("python", "cython"):
        impl = kernels.backend_module(name)
        s = OrrwState(f, Fraction(num, den), record_path=True, window=6)
        rng = RngStream(seed, 1)
        reasons = []
        for _ in range(rounds):
            reasons.append(run_until(s, _conditions(kind, A), rng, impl=impl).stop_reason)
        out.append((reasons, s.st.tolist(), s.path().tobytes(), s.event_log().tobytes(),
                    s.crossed.tobytes(), s.visited.tobytes(), s.lvlcount.tobytes()))
    assert out[0] == out[1]


@needs_compiled
@pytest.mark.parametrize("track", [False, True])
def test_network_backends_identical(track):
    W = build_cylinder_window(path(3), 0, 6)
    net = Network.from_subgraph(W, lambda e: 0.5 + e[0].fiber + e[1].level)
    absorbing = [v for v in net.vertices if v.level == 6] + [(0, 2)]
    res = []
    for name in ("python", "cython"):
        b = network_walk_batch(net, (3, 0), absorbing, 300, RngStream(2, 2), count=[(1, 1), (2, 1)],
                               track=track, max_steps=40, impl=kernels.backend_module(name))
        res.append((b.end.tobytes(), b.steps.tobytes(), b.counts.tobytes(), b.net_sum.tobytes(), b.net_sumsq.tobytes()))
    assert res[0] == res[1]
    assert (np.frombuffer(res[0][0], dtype=np.int64) == -1).any()  # some walks hit the cap


def test_pure_python_fallback_selected_by_env():
    code = "from orrw import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, ORRW_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.backend_module("fortran")
