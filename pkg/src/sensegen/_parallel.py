from __future__ import annotations

from typing import Callable, Iterable, TypeVar

from joblib import Parallel, delayed

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Iterable[T], n_jobs: int | None = None) -> list[R]:
    """Order-preserving map; runs serially when ``n_jobs`` is None or 1."""
    items = list(items)
    if n_jobs in (None, 1) or len(items) < 2:
        return [func(x) for x in items]
    return Parallel(n_jobs=n_jobs)(delayed(func)(x) for x in items)
