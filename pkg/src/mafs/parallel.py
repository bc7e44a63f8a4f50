"""Worker-pool helpers honoring the MAFS_THREADS cap.

Results are always assembled in index order, so the outcome never depends
on the pool size or scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("MAFS_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def map_indexed(fn, count: int) -> list:
    """Evaluate fn(i) for i in range(count), possibly concurrently."""
    workers = min(worker_count(), count) if count else 1
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))
