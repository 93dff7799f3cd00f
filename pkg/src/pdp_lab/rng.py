"""Seedable, splittable random streams and the variate generators used everywhere.

Streams are counter-based: a (master_seed, stream_index) pair keys a Philox
generator, so replicate k of any experiment can always use stream_index = k
and results never depend on how work is split across workers.

Beta and Dirichlet variates are built from gamma variates on purpose. The
composition and decomposition identities this library verifies are statements
about sums and ratios of independent gammas, so keeping gamma generation as
the single exactness audit surface means every downstream law inherits its
correctness from one sampler.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class SeedSpec:
    """Identity of one random stream: (master_seed, stream_index)."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ValueError(f"{name} must be an integer, got {v!r}")
            if not 0 <= v <= _UINT64_MAX:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer")


@dataclass
class RandomStream:
    """A counter-based generator bound to one SeedSpec.

    Advancing the underlying generator is the only mutation. Confine each
    instance to one worker at a time.
    """

    spec: SeedSpec
    gen: np.random.Generator = field(repr=False)


def make_stream(seed: SeedSpec) -> RandomStream:
    """Create the stream keyed by seed; output is a pure function of seed."""
    key = np.array([seed.master_seed, seed.stream_index], dtype=np.uint64)
    return RandomStream(spec=seed, gen=np.random.Generator(np.random.Philox(key=key)))


def substream(seed: SeedSpec, offset: int) -> RandomStream:
    """Stream at seed.stream_index + offset under the same master seed."""
    return make_stream(SeedSpec(seed.master_seed, seed.stream_index + offset))


def _check_positive(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.size == 0 or not np.all(np.isfinite(arr)) or not np.all(arr > 0.0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return arr


def draw_gamma(stream: RandomStream, shape, size=None):
    """Gamma(shape, scale 1) variates via the exact rejection sampler.

    Shapes below 1 are fully supported; they arise constantly here (both a
    discount parameter and its complement are used as gamma shapes).
    """
    shape_arr = _check_positive("shape", shape)
    out = stream.gen.standard_gamma(shape_arr if size is None else shape_arr, size=size)
    if np.isscalar(shape) and size is None:
        return float(out)
    return out


def draw_beta(stream: RandomStream, a, b, size=None):
    """Beta(a, b) realized as G_a / (G_a + G_b) from draw_gamma."""
    a_arr = _check_positive("a", a)
    b_arr = _check_positive("b", b)
    ga = stream.gen.standard_gamma(a_arr, size=size)
    gb = stream.gen.standard_gamma(b_arr, size=size)
    out = ga / (ga + gb)
    if size is None and np.isscalar(a) and np.isscalar(b):
        return float(out)
    return out


def draw_dirichlet(stream: RandomStream, params) -> np.ndarray:
    """Dirichlet vector realized as normalized independent gammas."""
    p = _check_positive("params", params)
    if p.ndim != 1:
        raise ValueError("params must be a one-dimensional vector")
    g = stream.gen.standard_gamma(p)
    total = g.sum()
    if total <= 0.0:
        # Probability ~ 0 for the shapes used here; refuse rather than bias.
        raise ArithmeticError("all gamma draws underflowed to zero")
    return g / total


def draw_categorical(stream: RandomStream, weights, size=None):
    """Index i with probability weights[i].

    Weights must be nonnegative and sum to 1 within 1e-12.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty vector")
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be nonnegative and finite")
    total = w.sum()
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1 within 1e-12, got {total!r}")
    cum = np.cumsum(w / total)
    cum[-1] = 1.0
    u = stream.gen.random(size)
    idx = np.searchsorted(cum, u, side="right")
    idx = np.minimum(idx, w.size - 1)
    if size is None:
        return int(idx)
    return idx
