"""Compiled vs pure-Python kernels: wall time per step and output identity.

    python3 benchmarks/bench_kernels.py [--steps N] [--walks N]
"""

from __future__ import annotations

import argparse
import time

from orrw import kernels
from orrw.electric import Network
from orrw.graph_core import build_cylinder_window, path, point
from orrw.walks import MaxSteps, OrrwState, RngStream, network_walk_batch, run_until


def bench_orrw(impl, fiber, delta, steps, seed):
    state = OrrwState(fiber, delta, record_events=True)
    t0 = time.perf_counter()
    run_until(state, [MaxSteps(steps)], RngStream(seed, 0), impl=impl)
    dt = time.perf_counter() - t0
    return dt, (state.position, state.step, state.event_log().tobytes())


def bench_network(impl, walks, seed):
    window = build_cylinder_window(path(3), 0, 12)
    net = Network.from_subgraph(window, lambda e: 1 + (e[0].fiber + e[1].level) % 5)
    absorbing = [v for v in net.vertices if v.level in (0, 12)]
    start = next(v for v in net.vertices if v.level == 6)
    t0 = time.perf_counter()
    b = network_walk_batch(net, start, absorbing, walks, RngStream(seed, 1), track=True, impl=impl)
    dt = time.perf_counter() - t0
    return dt, int(b.steps.sum()), (b.end.tobytes(), b.steps.tobytes(), b.net_sum.tobytes())


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--walks", type=int, default=2_000)
    p.add_argument("--seed", type=int, default=0)
    ns = p.parse_args(argv)
    if not kernels.compiled_available():
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    cy, py = kernels.backend_module("cython"), kernels.backend_module("python")

    print(f"{'kernel':<28}{'python s':>10}{'cython s':>10}{'speedup':>9}  identical")
    for name, fiber, delta in (("orrw point delta=1", point(), 1), ("orrw path3 delta=1000", path(3), 1000)):
        tp, out_p = bench_orrw(py, fiber, delta, ns.steps, ns.seed)
        tc, out_c = bench_orrw(cy, fiber, delta, ns.steps, ns.seed)
        print(f"{name:<28}{tp:>10.3f}{tc:>10.4f}{tp / tc:>9.1f}  {out_p == out_c}")
    tp, n_p, out_p = bench_network(py, ns.walks, ns.seed)
    tc, n_c, out_c = bench_network(cy, ns.walks, ns.seed)
    print(f"{'network walks (' + str(n_p) + ' steps)':<28}{tp:>10.3f}{tc:>10.4f}{tp / tc:>9.1f}  "
          f"{out_p == out_c and n_p == n_c}")


if __name__ == "__main__":
    main()
