"""Deterministic fan-out: results depend only on the task list, never on the
worker count.  MARCZ_THREADS picks the thread pool size (default 1)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("MARCZ_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        return 1
    return max(1, min(k, 64))


def det_map(fn, items):
    """Map fn over items, returning results in item order.

    Every task must be a pure function of its item (seeded streams included),
    which makes the output identical for any MARCZ_THREADS value.
    """
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
