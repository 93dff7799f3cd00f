"""Posterior sampling, the posterior mean, and posterior-spread statistics.

Given data summarized as a partition, the posterior of the random measure is
a mixture: a beta-distributed fraction r of mass goes to a fresh draw of the
same family at strength raised by n_blocks * discount, and the complement is
spread over the observed values with Dirichlet(count_j - alpha) weights. The
posterior mean coincides with the prediction rule of the urn module; both
facts are exercised against each other in the test suites.

Single draws advance the stream they are given. The M-replicate statistics
(concentration_statistic, bvm_replicates) use only the seed identity of the
stream argument, assigning replicate k the substream at offset k + 1, so
their output is a pure function of (inputs, seed) and is identical for any
worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .engine import map_rows
from .measures import (
    AtomicMeasure,
    BaseMeasure,
    CellPartition,
    cell_probs,
    integrate,
)
from .py_sampler import (
    PYParams,
    TruncationPolicy,
    auto_continuous_policy,
    compose_identity_sample,
    stick_breaking_sample,
)
from .records import ReplicateSet, labels_for
from .rng import RandomStream, draw_beta, draw_dirichlet, make_stream
from .urn import PartitionSummary, predictive_weights, summarize

CONTINUOUS_ROUTES = ("sticks", "compose")


@dataclass(frozen=True)
class PosteriorDraw:
    """One posterior realization: mixing fraction, data atoms, fresh measure."""

    r: float
    dn: AtomicMeasure
    continuous_part: AtomicMeasure
    combined: AtomicMeasure


def _combine(r: float, continuous_part: AtomicMeasure, dn: AtomicMeasure) -> AtomicMeasure:
    locs = np.concatenate([continuous_part.locations, dn.locations])
    w = np.concatenate([r * continuous_part.weights, (1.0 - r) * dn.weights])
    mask = w > 0.0
    return AtomicMeasure(locs[mask], w[mask])


def posterior_sample(
    summary: PartitionSummary,
    params: PYParams,
    base: BaseMeasure,
    trunc: TruncationPolicy,
    stream: RandomStream,
    continuous_route: str = "sticks",
) -> PosteriorDraw:
    """Draw once from the posterior given the data partition.

    Draw order is fixed: the beta fraction, then the Dirichlet data weights,
    then the continuous part. continuous_route selects how the raised-strength
    measure is sampled: "sticks" directly, "compose" through the gamma
    composition of n_blocks small-strength measures (equal in law; needs
    discount > 0 and strength > 0; far cheaper when the raised strength is
    large). The truncation policy applies to whichever route runs.
    """
    if summary.n < 1:
        raise ValueError("posterior needs at least one observation; sample the prior instead")
    if continuous_route not in CONTINUOUS_ROUTES:
        raise ValueError(f"unknown continuous_route {continuous_route!r}")
    alpha, theta = params.alpha, params.theta
    k = summary.n_blocks
    a = theta + k * alpha
    b = summary.n - k * alpha
    r = draw_beta(stream, a, b)
    dn = AtomicMeasure(summary.locations(), draw_dirichlet(stream, summary.counts() - alpha))
    if continuous_route == "compose":
        continuous = compose_identity_sample(alpha, theta, k, base, trunc, stream)
    else:
        continuous = stick_breaking_sample(PYParams(alpha, a), base, trunc, stream)
    return PosteriorDraw(r, dn, continuous, _combine(r, continuous, dn))


def posterior_mean(
    summary: PartitionSummary,
    params: PYParams,
    base: BaseMeasure,
    partition: CellPartition,
) -> np.ndarray:
    """Cell probabilities of the predictive law for the next observation."""
    new_w, block_w = predictive_weights(summary, params)
    out = new_w * cell_probs(base, partition)
    if summary.n:
        idx = partition.cell_index(summary.locations())
        out = out + np.bincount(idx, weights=block_w, minlength=partition.n_cells)
    return out


def posterior_mean_function(
    summary: PartitionSummary, params: PYParams, base: BaseMeasure, f
) -> float:
    """The predictive law applied to a test function instead of cells."""
    new_w, block_w = predictive_weights(summary, params)
    out = new_w * integrate(base, f)
    if summary.n:
        out += float(np.dot(block_w, f(summary.locations())))
    return out


def _concentration_kernel(args: tuple, seed) -> np.ndarray:
    summary, params, base, partition, pm, trunc, route = args
    draw = posterior_sample(summary, params, base, trunc, make_stream(seed), route)
    d = cell_probs(draw.combined, partition) - pm
    return np.array([np.dot(d, d)])


def concentration_statistic(
    summary: PartitionSummary,
    params: PYParams,
    base: BaseMeasure,
    partition: CellPartition,
    replicates: int,
    stream: RandomStream,
    workers: int = 1,
) -> Tuple[float, float]:
    """Monte Carlo E of the squared cell-seminorm between a posterior draw and
    the posterior mean, with its standard error.

    The sampling route and truncation are chosen internally so the truncation
    contribution stays orders of magnitude below the Monte Carlo noise.
    """
    if replicates < 100:
        raise ValueError("need at least 100 replicates for a usable standard error")
    route, trunc = auto_continuous_policy(params.alpha, params.theta, summary.n_blocks)
    pm = posterior_mean(summary, params, base, partition)
    rows = map_rows(
        _concentration_kernel,
        (summary, params, base, partition, pm, trunc, route),
        stream.spec,
        replicates,
        workers,
    )
    d2 = rows[:, 0]
    return float(d2.mean()), float(d2.std(ddof=1) / math.sqrt(replicates))


def _bvm_kernel(args: tuple, seed) -> np.ndarray:
    summary, params, base, f_list, trunc, route, pm_f, sqrt_n = args
    draw = posterior_sample(summary, params, base, trunc, make_stream(seed), route)
    locs, w = draw.combined.locations, draw.combined.weights
    vals = np.array([np.dot(w, f(locs)) for f in f_list])
    return sqrt_n * (vals - pm_f)


def bvm_replicates(
    data,
    params: PYParams,
    base: BaseMeasure,
    f_list,
    m: int,
    trunc: TruncationPolicy,
    stream: RandomStream,
    continuous_route: str = "sticks",
    workers: int = 1,
) -> ReplicateSet:
    """Rows of sqrt(n) * (P(f) - predictive_mean(f)) over posterior draws,
    conditioning on the one data set passed in."""
    data = np.atleast_1d(np.asarray(data, dtype=np.float64))
    if data.size == 0:
        raise ValueError("data must be nonempty")
    summary = summarize(data)
    f_list = tuple(f_list)
    pm_f = np.array([posterior_mean_function(summary, params, base, f) for f in f_list])
    rows = map_rows(
        _bvm_kernel,
        (summary, params, base, f_list, trunc, continuous_route, pm_f, math.sqrt(summary.n)),
        stream.spec,
        m,
        workers,
    )
    meta = {
        "process": "bvm",
        "alpha": params.alpha,
        "theta": params.theta,
        "n": summary.n,
        "m": m,
        "seed": (stream.spec.master_seed, stream.spec.stream_index),
        "route": continuous_route,
    }
    return ReplicateSet(labels_for(f_list), rows, meta)
