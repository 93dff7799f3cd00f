"""Sequential prediction-rule sampling and partition bookkeeping.

A sample from the random measure can be produced without ever constructing
the measure: each new observation is either a fresh draw from the base
measure or a repeat of an earlier value, with weights set by the observed
partition. The partition summary (distinct values with multiplicities) is
the only state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .measures import AtomicMeasure, BaseMeasure
from .py_sampler import PYParams
from .rng import RandomStream, draw_categorical


@dataclass(frozen=True)
class PartitionSummary:
    """n observations grouped into blocks of equal values, first-appearance order."""

    n: int
    blocks: tuple  # of (location, count)

    def __post_init__(self):
        object.__setattr__(
            self, "blocks", tuple((float(y), int(e)) for y, e in self.blocks)
        )
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise ValueError(f"n must be a nonnegative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        counts = [e for _, e in self.blocks]
        if any(e < 1 for e in counts):
            raise ValueError("block counts must be positive")
        if sum(counts) != self.n:
            raise ValueError(f"block counts sum to {sum(counts)}, expected n={self.n}")
        locs = [y for y, _ in self.blocks]
        if len(set(locs)) != len(locs):
            raise ValueError("block locations must be pairwise distinct")
        if not all(math.isfinite(y) for y in locs):
            raise ValueError("block locations must be finite")

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def locations(self) -> np.ndarray:
        return np.array([y for y, _ in self.blocks], dtype=np.float64)

    def counts(self) -> np.ndarray:
        return np.array([e for _, e in self.blocks], dtype=np.float64)


EMPTY_SUMMARY = PartitionSummary(0, ())


def summarize(data) -> PartitionSummary:
    """Distinct values with multiplicities, in order of first appearance."""
    seen: dict = {}
    arr = np.atleast_1d(np.asarray(data, dtype=np.float64))
    for x in arr.tolist():
        seen[x] = seen.get(x, 0) + 1
    return PartitionSummary(int(arr.size), tuple(seen.items()))


def predictive_weights(summary: PartitionSummary, params: PYParams):
    """Chance of a fresh value, and of each existing block, for the next draw.

    fresh = (theta + n_blocks * alpha) / (theta + n);
    block j = (count_j - alpha) / (theta + n). Totals 1.
    """
    if summary.n == 0:
        return 1.0, np.zeros(0)
    alpha, theta = params.alpha, params.theta
    denom = theta + summary.n
    new_weight = (theta + summary.n_blocks * alpha) / denom
    block_weights = (summary.counts() - alpha) / denom
    return float(new_weight), block_weights


def urn_draw(
    summary: PartitionSummary,
    params: PYParams,
    base: BaseMeasure,
    stream: RandomStream,
) -> Tuple[float, PartitionSummary]:
    """One step of the prediction rule; returns the value and the grown summary."""
    if getattr(base, "atomic", True):
        raise ValueError("urn sampling requires a non-atomic base measure")
    new_w, block_w = predictive_weights(summary, params)
    idx = draw_categorical(stream, np.concatenate([[new_w], block_w]))
    if idx == 0:
        value = float(base.sample(stream))
        blocks = summary.blocks + ((value, 1),)
    else:
        j = idx - 1
        value, count = summary.blocks[j]
        blocks = summary.blocks[:j] + ((value, count + 1),) + summary.blocks[j + 1 :]
    return value, PartitionSummary(summary.n + 1, blocks)


def urn_sequence(
    params: PYParams, base: BaseMeasure, n: int, stream: RandomStream
) -> Tuple[np.ndarray, PartitionSummary]:
    """n sequential draws starting from the empty partition.

    Equivalent to iterating urn_draw (same draws off the stream); the loop
    here keeps mutable lists so long chains stay cheap.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if getattr(base, "atomic", True):
        raise ValueError("urn sampling requires a non-atomic base measure")
    alpha, theta = params.alpha, params.theta
    locs: list = []
    counts: list = []
    values = np.empty(n)
    for i in range(n):
        k = len(locs)
        denom = theta + i
        if i == 0:
            weights = np.ones(1)
        else:
            weights = np.empty(k + 1)
            weights[0] = (theta + k * alpha) / denom
            weights[1:] = (np.asarray(counts) - alpha) / denom
        idx = draw_categorical(stream, weights)
        if idx == 0:
            value = float(base.sample(stream))
            locs.append(value)
            counts.append(1)
        else:
            counts[idx - 1] += 1
            value = locs[idx - 1]
        values[i] = value
    summary = PartitionSummary(n, tuple(zip(locs, counts)))
    return values, summary


def ftilde(summary: PartitionSummary, alpha: float) -> AtomicMeasure:
    """The block measure with weights (count_j - alpha) / (n - n_blocks * alpha).

    At alpha = 0, or when all values are distinct, this is exactly the
    empirical measure of the data.
    """
    if summary.n < 1:
        raise ValueError("ftilde needs at least one observation")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha!r}")
    counts = summary.counts()
    denom = summary.n - summary.n_blocks * alpha
    return AtomicMeasure(summary.locations(), (counts - alpha) / denom)
