"""Replica fan-out with worker-count-independent results.

Replica ``i`` of parameter point ``key`` always uses the stream
``(seed, (key, i))``; blocks of replicas run in a process pool and are
reassembled in block order.
"""

from __future__ import annotations

import os
import sys
from concurrent.futures import ProcessPoolExecutor

BLOCK = 256


def worker_count() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get("ORRW_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


class _EachReplica:
    def __init__(self, task):
        self.task = task

    def __call__(self, seed, key, start, stop, params):
        return [self.task(seed, key, i, params) for i in range(start, stop)]


def map_blocks(block_task, n: int, seed: int, key: int, params, *, progress: str | None = None,
               workers: int | None = None) -> list:
    """Concatenated ``block_task(seed, key, start, stop, params)`` over fixed
    blocks of ``BLOCK`` replicas; the block task returns one item per
    replica.  Lets a block reuse expensive setup (e.g. a preset template)."""
    workers = worker_count() if workers is None else workers
    blocks = [(s, min(n, s + BLOCK)) for s in range(0, n, BLOCK)]
    out: list = []
    if workers <= 1 or len(blocks) <= 1:
        for j, (s, e) in enumerate(blocks):
            out.extend(block_task(seed, key, s, e, params))
            _report(progress, j + 1, len(blocks))
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(block_task, seed, key, s, e, params) for s, e in blocks]
        for j, f in enumerate(futures):
            out.extend(f.result())
            _report(progress, j + 1, len(blocks))
    return out


def map_replicas(task, n: int, seed: int, key: int, params, *, progress: str | None = None,
                 workers: int | None = None) -> list:
    """``[task(seed, key, i, params) for i in range(n)]``, possibly in parallel.

    ``task`` must be a module-level function so it can be pickled.
    """
    return map_blocks(_EachReplica(task), n, seed, key, params, progress=progress, workers=workers)


def _report(label, done, total):
    if label and os.environ.get("ORRW_PROGRESS"):
        print(f"[{label}] {done}/{total} blocks", file=sys.stderr, flush=True)
