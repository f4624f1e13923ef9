"""Order-preserving work pools.

Work is always split into the same fixed chunks whatever the worker count,
and results are reassembled in chunk order, so output never depends on the
schedule.
"""

import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor

WORKERS_ENV = "MULTITREND_WORKERS"


def default_workers():
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def chunk_ranges(n, size):
    return [range(i, min(n, i + size)) for i in range(0, n, size)]


def map_ordered(fn, items, workers=None, processes=False):
    """``[fn(x) for x in items]``, optionally spread over a pool."""
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    pool_cls = ProcessPoolExecutor if processes else ThreadPoolExecutor
    with pool_cls(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
