"""Replica-parallel map with order-independent, thread-count-invariant results.

Workers receive (payload, start, stop) and return one array (or tuple of
arrays) of per-replica values; chunks are concatenated in replica order, so
the reduction is bit-identical for any worker count.  Workers must be
module-level functions and payloads picklable.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np


def map_replicas(worker, payload, n: int, threads: int = 1, chunk: int | None = None):
    if threads <= 1:
        return worker(payload, 0, n)
    chunk = chunk or max(1, min(512, (n + 4 * threads - 1) // (4 * threads)))
    spans = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(worker, [payload] * len(spans),
                            [s for s, _ in spans], [e for _, e in spans],
                            chunksize=1))
    first = parts[0]
    if isinstance(first, tuple):
        return tuple(np.concatenate([p[i] for p in parts])
                     for i in range(len(first)))
    return np.concatenate(parts)
