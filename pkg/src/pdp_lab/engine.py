"""Replicate-parallel execution with worker-count-invariant output.

Replicate k of a job always draws from the stream keyed (master_seed,
root_index + 1 + k), and rows are assembled in replicate order, so the result
is a pure function of (kernel, args, root seed, m) no matter how many workers
run or how chunks interleave. Index 0 above the root is reserved for
setup-level draws by the caller.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

from .rng import SeedSpec

Kernel = Callable[[tuple, SeedSpec], np.ndarray]


def replicate_seed(root: SeedSpec, k: int) -> SeedSpec:
    return SeedSpec(root.master_seed, root.stream_index + 1 + k)


def _run_chunk(kernel: Kernel, args: tuple, root: SeedSpec, start: int, stop: int):
    rows = [kernel(args, replicate_seed(root, k)) for k in range(start, stop)]
    return start, np.vstack(rows)


def map_rows(
    kernel: Kernel, args: tuple, root: SeedSpec, m: int, workers: int = 1
) -> np.ndarray:
    """Stack kernel(args, seed_k) for k = 0..m-1 into an (m, width) matrix.

    kernel must be a module-level function of (args, SeedSpec) returning a
    fixed-width 1-D array, with no state besides the stream it builds.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if workers <= 1 or m < 2 * workers:
        _, rows = _run_chunk(kernel, args, root, 0, m)
        return rows
    chunk = math.ceil(m / (workers * 4))
    starts = list(range(0, m, chunk))
    out = None
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_chunk, kernel, args, root, s, min(s + chunk, m))
            for s in starts
        ]
        for fut in futures:
            start, rows = fut.result()
            if out is None:
                out = np.empty((m, rows.shape[1]))
            out[start : start + rows.shape[0]] = rows
    return out
