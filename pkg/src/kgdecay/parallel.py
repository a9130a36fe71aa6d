"""Order-preserving parallel map for independent sweep points."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

_THREADS = 1


def set_threads(n: int) -> None:
    global _THREADS
    _THREADS = max(1, int(n))


def pmap(fn, items, threads: int | None = None) -> list:
    """Map fn over items; results are returned in input order."""
    items = list(items)
    n = _THREADS if threads is None else max(1, int(threads))
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
