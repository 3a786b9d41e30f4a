"""Thread-pool helper honoring the REGTUNE_THREADS cap (default: sequential)."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_cap():
    try:
        return max(1, int(os.environ.get("REGTUNE_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Map preserving order; uses threads only when REGTUNE_THREADS > 1."""
    items = list(items)
    cap = thread_cap()
    if cap == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, items))
