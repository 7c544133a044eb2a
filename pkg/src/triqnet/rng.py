"""Counter-based random streams and a small keyed worker pool.

Every stream is a Philox generator keyed by (seed, experiment, block index), so
results depend only on those keys and never on scheduling or worker count.
"""
from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import UsageError

BLOCK_SIZE = 1024
THREADS_ENV = "TRIQNET_THREADS"


def check_seed(seed) -> int:
    try:
        s = int(seed)
    except (TypeError, ValueError):
        raise UsageError(f"seed must be an integer, got {seed!r}") from None
    if not 0 <= s < 2 ** 64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    return s


def experiment_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "big")


def stream(seed: int, experiment: str, index: int = 0) -> np.random.Generator:
    """Independent generator for substream ``index`` of ``experiment``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=(experiment_key(experiment), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def worker_count(requested: int | None = None) -> int:
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
    return max(1, int(n))


def map_keyed(fn, keys, workers: int | None = None) -> list:
    """``[fn(k) for k in keys]``, optionally on a thread pool; output order follows ``keys``."""
    keys = list(keys)
    w = worker_count(workers)
    if w == 1 or len(keys) <= 1:
        return [fn(k) for k in keys]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, keys))
