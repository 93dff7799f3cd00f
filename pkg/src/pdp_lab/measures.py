"""Probability measures on the line, test functions, partitions, and fit statistics.

Everything downstream reduces random measures to finite-dimensional views:
either integrals of a small family of bounded test functions, or probability
vectors over a fixed cell partition. This module owns those reductions and
keeps them exact where a closed form exists, so Monte Carlo error is the only
error anywhere in the verification suites.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import kolmogorov, ndtr

from .rng import RandomStream, draw_categorical

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class Indicator:
    """f(x) = 1 for a < x <= b, else 0."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"need finite a < b, got ({self.a}, {self.b})")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return ((x > self.a) & (x <= self.b)).astype(np.float64)

    def label(self) -> str:
        return f"ind({self.a:g},{self.b:g}]"


@dataclass(frozen=True)
class Polynomial:
    """f(x) = sum_k coefficients[k] * x**k on [lo, hi], 0 outside.

    The bounded domain keeps every instance a bounded function, which is what
    the moment formulas and limit covariances assume.
    """

    coefficients: tuple
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if len(self.coefficients) == 0:
            raise ValueError("coefficients must be nonempty")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"need finite lo < hi, got ({self.lo}, {self.hi})")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.lo) & (x <= self.hi)
        vals = np.polynomial.polynomial.polyval(x, np.asarray(self.coefficients))
        return np.where(inside, vals, 0.0)

    def label(self) -> str:
        return f"poly{self.coefficients}on[{self.lo:g},{self.hi:g}]"


@dataclass(frozen=True)
class Constant:
    """f(x) = c everywhere."""

    c: float

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.full_like(x, float(self.c))

    def label(self) -> str:
        return f"const({self.c:g})"


FunctionSpec = Union[Indicator, Polynomial, Constant]


def _pieces(f: FunctionSpec):
    """Represent f as polynomial pieces [(lo, hi, coeffs)] for atomless bases.

    Endpoint membership is immaterial there, so (a, b] and [lo, hi] collapse
    to the same open-interval bookkeeping.
    """
    if isinstance(f, Indicator):
        return [(f.a, f.b, (1.0,))]
    if isinstance(f, Polynomial):
        return [(f.lo, f.hi, f.coefficients)]
    if isinstance(f, Constant):
        return [(-math.inf, math.inf, (float(f.c),))]
    raise TypeError(f"not a FunctionSpec: {f!r}")


def function_label(f: FunctionSpec) -> str:
    return f.label()


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many weighted atoms; weights positive and summing to 1.

    Locations may repeat; merging duplicates is a separate explicit step.
    """

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.atleast_1d(np.asarray(self.locations, dtype=np.float64))
        w = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)
        if loc.ndim != 1 or loc.shape != w.shape or loc.size == 0:
            raise ValueError("locations and weights must be equal-length nonempty vectors")
        if not np.all(np.isfinite(loc)):
            raise ValueError("locations must be finite")
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be strictly positive and finite")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1 within 1e-9, got {total!r}")

    @property
    def atoms(self):
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    def merged(self) -> "AtomicMeasure":
        """Combine atoms at exactly equal locations."""
        loc, inv = np.unique(self.locations, return_inverse=True)
        w = np.bincount(inv, weights=self.weights, minlength=loc.size)
        return AtomicMeasure(loc, w)


class Uniform01:
    """The uniform distribution on (0, 1); non-atomic."""

    atomic = False

    def sample(self, stream: RandomStream, size=None):
        return stream.gen.random(size)

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)

    def integrate(self, f: FunctionSpec) -> float:
        return sum(_uniform_piece(lo, hi, c) for lo, hi, c in _pieces(f))

    def integrate_product(self, f: FunctionSpec, g: FunctionSpec) -> float:
        return sum(
            _uniform_piece(*piece) for piece in _product_pieces(_pieces(f), _pieces(g))
        )

    def __repr__(self):
        return "Uniform01()"


class StdNormal:
    """The standard normal distribution; non-atomic."""

    atomic = False

    def sample(self, stream: RandomStream, size=None):
        return stream.gen.standard_normal(size)

    def cdf(self, x):
        return ndtr(np.asarray(x, dtype=np.float64))

    def integrate(self, f: FunctionSpec) -> float:
        return sum(_normal_piece(lo, hi, c) for lo, hi, c in _pieces(f))

    def integrate_product(self, f: FunctionSpec, g: FunctionSpec) -> float:
        return sum(
            _normal_piece(*piece) for piece in _product_pieces(_pieces(f), _pieces(g))
        )

    def __repr__(self):
        return "StdNormal()"


class FiniteSupport:
    """A fixed discrete distribution on given support points; atomic."""

    atomic = True

    def __init__(self, points: Sequence[float], probs: Sequence[float]):
        pts = np.asarray(points, dtype=np.float64)
        pr = np.asarray(probs, dtype=np.float64)
        if pts.ndim != 1 or pts.shape != pr.shape or pts.size == 0:
            raise ValueError("points and probs must be equal-length nonempty vectors")
        if np.unique(pts).size != pts.size:
            raise ValueError("support points must be distinct")
        if np.any(pr <= 0.0) or abs(float(pr.sum()) - 1.0) > 1e-9:
            raise ValueError("probs must be positive and sum to 1 within 1e-9")
        order = np.argsort(pts)
        self.points = pts[order]
        self.probs = pr[order]

    def sample(self, stream: RandomStream, size=None):
        idx = draw_categorical(stream, self.probs, size=size)
        return self.points[idx]

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(self.points, x, side="right")
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        return cum[idx]

    def integrate(self, f: FunctionSpec) -> float:
        return float(np.dot(self.probs, f(self.points)))

    def integrate_product(self, f: FunctionSpec, g: FunctionSpec) -> float:
        return float(np.dot(self.probs, f(self.points) * g(self.points)))

    def __repr__(self):
        return f"FiniteSupport(points={self.points.tolist()}, probs={self.probs.tolist()})"


BaseMeasure = Union[Uniform01, StdNormal, FiniteSupport]
Measure = Union[AtomicMeasure, Uniform01, StdNormal, FiniteSupport]


# ---------------------------------------------------------------------------
# exact piecewise-polynomial integration against the continuous bases


def _product_pieces(pieces_f, pieces_g):
    out = []
    for lo1, hi1, c1 in pieces_f:
        for lo2, hi2, c2 in pieces_g:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo < hi:
                out.append((lo, hi, tuple(np.convolve(c1, c2))))
    return out


def _uniform_piece(lo: float, hi: float, coeffs) -> float:
    lo, hi = max(lo, 0.0), min(hi, 1.0)
    if hi <= lo:
        return 0.0
    anti = np.asarray(coeffs, dtype=np.float64) / np.arange(1, len(coeffs) + 1)
    ev = np.polynomial.polynomial.polyval
    return float(hi * ev(hi, anti) - lo * ev(lo, anti))


def _phi(x: float) -> float:
    if math.isinf(x):
        return 0.0
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def _normal_piece(lo: float, hi: float, coeffs) -> float:
    # Moments I_k = int_lo^hi x^k phi(x) dx satisfy
    # I_k = (k-1) I_{k-2} + lo^{k-1} phi(lo) - hi^{k-1} phi(hi).
    phi_lo, phi_hi = _phi(lo), _phi(hi)
    cdf_lo = 0.0 if lo == -math.inf else float(ndtr(lo))
    cdf_hi = 1.0 if hi == math.inf else float(ndtr(hi))
    moments = [cdf_hi - cdf_lo]
    if len(coeffs) > 1:
        moments.append(phi_lo - phi_hi)
    for k in range(2, len(coeffs)):
        term_lo = 0.0 if math.isinf(lo) else lo ** (k - 1) * phi_lo
        term_hi = 0.0 if math.isinf(hi) else hi ** (k - 1) * phi_hi
        moments.append((k - 1) * moments[k - 2] + term_lo - term_hi)
    return float(sum(c * m for c, m in zip(coeffs, moments)))


# ---------------------------------------------------------------------------
# operations


def integrate(measure: Measure, f: FunctionSpec) -> float:
    """The linear functional measure(f), exact for every supported kind."""
    if isinstance(measure, AtomicMeasure):
        return float(np.dot(measure.weights, f(measure.locations)))
    return measure.integrate(f)


def integrate_product(measure: Measure, f: FunctionSpec, g: FunctionSpec) -> float:
    """measure(f*g), exact; the workhorse behind moment and covariance formulas."""
    if isinstance(measure, AtomicMeasure):
        return float(np.dot(measure.weights, f(measure.locations) * g(measure.locations)))
    return measure.integrate_product(f, g)


def variance_under(measure: Measure, f: FunctionSpec) -> float:
    """Var_measure(f) = measure(f^2) - measure(f)^2, clipped at 0."""
    v = integrate_product(measure, f, f) - integrate(measure, f) ** 2
    return max(v, 0.0)


@dataclass(frozen=True)
class CellPartition:
    """Cells (-inf, b1], (b1, b2], ..., (b_{m-1}, inf) from strictly increasing breakpoints.

    An empty breakpoint list is allowed and means the single cell (-inf, inf).
    """

    breakpoints: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        arr = np.asarray(bp, dtype=np.float64)
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("breakpoints must be finite")
        if arr.size > 1 and not np.all(np.diff(arr) > 0.0):
            raise ValueError("breakpoints must be strictly increasing")

    @property
    def n_cells(self) -> int:
        return len(self.breakpoints) + 1

    def cell_index(self, x):
        """Index of the cell containing each x, under the (a, b] convention."""
        return np.searchsorted(np.asarray(self.breakpoints), np.asarray(x), side="left")


def cell_probs(measure: Measure, partition: CellPartition) -> np.ndarray:
    """Vector of cell masses; sums to 1 within 1e-9 for every measure kind."""
    if isinstance(measure, AtomicMeasure):
        idx = partition.cell_index(measure.locations)
        return np.bincount(idx, weights=measure.weights, minlength=partition.n_cells)
    bp = np.asarray(partition.breakpoints, dtype=np.float64)
    cdf_vals = np.concatenate([[0.0], np.atleast_1d(measure.cdf(bp)), [1.0]])
    return np.diff(cdf_vals)


def seminorm(p, q) -> float:
    """Root-sum-of-squares distance between two cell-probability vectors."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    return float(np.sqrt(np.sum((p - q) ** 2)))


def empirical_measure(points) -> AtomicMeasure:
    """Equal weights 1/n on the given points, equal locations merged."""
    pts = np.atleast_1d(np.asarray(points, dtype=np.float64))
    if pts.size == 0:
        raise ValueError("points must be nonempty")
    loc, counts = np.unique(pts, return_counts=True)
    return AtomicMeasure(loc, counts / pts.size)


def mix(w: float, p: Measure, q: Measure, partition: CellPartition) -> np.ndarray:
    """Cell probabilities of the mixture w*p + (1-w)*q."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"mixture weight must lie in [0, 1], got {w!r}")
    return w * cell_probs(p, partition) + (1.0 - w) * cell_probs(q, partition)


# ---------------------------------------------------------------------------
# goodness-of-fit statistics


def ks_one_sample_normal(samples, mean: float, sd: float):
    """Kolmogorov-Smirnov distance to Normal(mean, sd^2), asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not (np.isfinite(sd) and sd > 0.0):
        raise ValueError(f"sd must be positive, got {sd!r}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    c = ndtr((x - mean) / sd)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - c)
    d_minus = np.max(c - (i - 1) / n)
    stat = float(max(d_plus, d_minus))
    return stat, float(kolmogorov(math.sqrt(n) * stat))


def ks_two_sample(a, b):
    """Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value."""
    x = np.sort(np.asarray(a, dtype=np.float64))
    y = np.sort(np.asarray(b, dtype=np.float64))
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be nonempty")
    both = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, both, side="right") / x.size
    cdf_y = np.searchsorted(y, both, side="right") / y.size
    stat = float(np.max(np.abs(cdf_x - cdf_y)))
    scale = math.sqrt(x.size * y.size / (x.size + y.size))
    return stat, float(kolmogorov(scale * stat))
