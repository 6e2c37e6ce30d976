"""Replicate-level parallelism with order-preserving reduction."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit value, else ``MCG_THREADS`` (0 means all cores)."""
    if workers is None:
        try:
            workers = int(os.environ.get("MCG_THREADS", "1"))
        except ValueError:
            workers = 1
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def pmap(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly in worker processes; results keep input order."""
    items = list(items)
    workers = min(resolve_workers(workers), max(len(items), 1))
    if workers <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))
