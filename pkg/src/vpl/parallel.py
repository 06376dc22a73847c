"""Thread-pool helper honoring the VPL_THREADS cap.

All heavy loops in the library are embarrassingly parallel over quadrature
nodes or scan samples.  VPL_THREADS caps the worker count; unset or 1 means
serial execution (the default, fully deterministic either way since pmap
preserves order).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def max_threads() -> int:
    raw = os.environ.get("VPL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def pmap(fn, items):
    """Order-preserving map, threaded when VPL_THREADS > 1."""
    items = list(items)
    n = min(max_threads(), len(items)) if items else 1
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
