"""
Parallel helpers for ghlab
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from ..config_loader import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Map fn over items on a thread pool; results keep the input order"""
    items = list(items)
    threads = settings.threads if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("running %d tasks on %d threads", len(items), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
