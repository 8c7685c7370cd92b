"""Deterministic random substreams and replicate-level parallelism."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *key); stable across worker counts."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, key)])))


def _run_chunk(args):
    fn, seed, key, indices = args
    return [fn(substream(seed, *key, i), i) for i in indices]


def map_replicates(
    fn: Callable[[np.random.Generator, int], T],
    replicates: int,
    seed: int,
    key: Sequence[int] = (),
    threads: int = 1,
) -> list[T]:
    """Run ``fn(rng, i)`` for each replicate ``i`` with its own substream.

    Results come back in replicate order, so any aggregation over the list is
    independent of ``threads``. With ``threads > 1`` ``fn`` must be picklable.
    """
    key = tuple(key)
    if threads <= 1 or replicates < 2:
        return [fn(substream(seed, *key, i), i) for i in range(replicates)]
    chunks = [list(range(replicates))[w::threads] for w in range(threads)]
    out: list = [None] * replicates
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for idx, res in zip(chunks, pool.map(_run_chunk, [(fn, seed, key, c) for c in chunks])):
            for i, r in zip(idx, res):
                out[i] = r
    return out
