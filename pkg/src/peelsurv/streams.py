"""Per-sample random streams and sample sharding across worker processes.

Every Monte Carlo sample owns a Philox stream keyed by ``(seed, *key,
sample_index)``, so a sample's path does not depend on which worker ran it or
in what order.  Shard results are concatenated in sample-index order, which
keeps every downstream reduction bit-identical across worker counts.
"""

from __future__ import annotations

import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor

import numpy as np

__all__ = ["sample_stream", "shard_bounds", "run_sharded"]


def sample_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based generator for one sample."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def shard_bounds(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(int(parts), n)) if n > 0 else 1
    edges = np.linspace(0, n, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def run_sharded(fn, n_samples: int, workers: int, *args):
    """Run ``fn(start, stop, *args)`` over contiguous index shards.

    ``fn`` must be a module-level function returning a tuple of 1-d arrays
    covering samples ``start..stop-1`` in order.  Returns the concatenated
    arrays.
    """
    bounds = shard_bounds(n_samples, workers)
    if workers <= 1 or len(bounds) == 1:
        parts = [fn(a, b, *args) for a, b in bounds]
    else:
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=len(bounds), mp_context=ctx) as pool:
            futures = [pool.submit(fn, a, b, *args) for a, b in bounds]
            parts = [f.result() for f in futures]
    return tuple(np.concatenate(cols) for cols in zip(*parts))
