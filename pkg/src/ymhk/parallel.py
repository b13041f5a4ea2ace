"""Thread fan-out for elementwise kernels and deterministic reductions.

Only elementwise work is split across threads, along the first lattice
axis; every output entry is computed by the same arithmetic whatever the
thread count. Reductions go through :func:`tree_sum`, whose pairwise tree
depends only on the array length.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable

import numpy as np

_MIN_CHUNK_ELEMENTS = 1 << 15


def thread_count() -> int:
    raw = os.environ.get("YMHK_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"YMHK_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"YMHK_THREADS must be a positive integer, got {raw!r}")
    return n


@lru_cache(maxsize=8)
def _pool(n: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=n, thread_name_prefix="ymhk")


def map_split(fn: Callable[..., np.ndarray], *arrays: np.ndarray) -> np.ndarray:
    """Apply an elementwise ``fn`` to ``arrays`` split along axis 0.

    All arrays must share the leading axis. With one thread (or small
    inputs) this is just ``fn(*arrays)``.
    """
    n = thread_count()
    lead = arrays[0].shape[0]
    if n == 1 or lead < 2 or arrays[0].size < _MIN_CHUNK_ELEMENTS:
        return fn(*arrays)
    bounds = np.linspace(0, lead, min(n, lead) + 1).astype(int)
    jobs = [
        _pool(n).submit(fn, *(a[lo:hi] for a in arrays))
        for lo, hi in zip(bounds[:-1], bounds[1:])
    ]
    return np.concatenate([j.result() for j in jobs], axis=0)


def tree_sum(values: np.ndarray) -> float:
    """Pairwise sum over a fixed binary tree on the flattened array."""
    a = np.asarray(values, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, 0.0)
        a = a[0::2] + a[1::2]
    return float(a[0])
