"""Process-wide worker pool sizing.

Work items are always written to disjoint outputs and results are
collected in submission order, so the thread count never changes a
result.
"""

import os
from concurrent.futures import ThreadPoolExecutor

_threads = os.cpu_count() or 1


def set_threads(n):
    global _threads
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = n


def get_threads():
    return _threads


def pmap(fn, items):
    items = list(items)
    if _threads == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(_threads, len(items))) as ex:
        return list(ex.map(fn, items))


def blas_threads():
    """Worker count handed to BLAS: the global setting, capped at the core count.

    BLAS pools busy-wait, so more threads than cores only slows them down.
    """
    if hasattr(os, "sched_getaffinity"):
        cores = len(os.sched_getaffinity(0))
    else:
        cores = os.cpu_count() or 1
    return max(1, min(_threads, cores))
