"""Deterministic worker-pool helpers.

Results are always collected in submission order, so the output is
byte-identical whatever the worker count (set SNFIT_THREADS to cap it;
default is the machine's core count).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    env = os.environ.get("SNFIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def pmap(fn, items):
    """Map preserving order; runs in a thread pool when workers > 1."""
    items = list(items)
    w = worker_count()
    if w <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))
