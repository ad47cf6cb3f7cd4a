"""Order-preserving thread pool for independent numerical tasks."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

import structlog

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable

__all__ = ["ordered_map"]

logger = structlog.get_logger()


def ordered_map[T, R](fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Apply ``fn`` to every item and return results in input order.

    Results are gathered by index, so any reduction over the returned list
    is independent of thread scheduling.

    Args:
        fn: Task function; must not mutate shared state.
        items: Task inputs.
        threads: Worker count; 1 or less runs serially.

    Returns:
        ``[fn(item) for item in items]``.
    """
    work = list(items)
    if threads <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    logger.debug("parallel_map", tasks=len(work), threads=threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, work))
