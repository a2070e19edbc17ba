"""Order-preserving thread map for ladder entries and battery members."""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from app.config import get_settings

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Results come back in input order, so reductions over them stay deterministic."""
    items = list(items)
    n = threads if threads is not None else get_settings().threads
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
