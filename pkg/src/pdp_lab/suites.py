"""The runnable experiments: three plain samplers and seven verification suites.

Each suite turns module operations into a flat list of report rows (one per
checked statistic, with its theoretical counterpart and tolerance) plus a
nested detail dict. Suites never pick tolerances to fit observed numbers;
tolerances come from standard errors and the thresholds in the config.

Truncation policy per cell is chosen by a bias ceiling and a cost floor:

- Ceiling: the truncation lump can shift a second moment by at most about
  E[tail^2] * Var_H <= eps^2 / 4 (the stopped tail creeps just under eps for
  large discounts, so eps^2 bounds E[tail^2]). Each suite converts half of its
  Monte Carlo tolerance into the loosest eps whose worst-case shift stays
  below it; looser would risk a biased verdict, tighter only costs time.
- Floor: the expected stick count per draw at that eps, times replicates,
  must fit the per-cell stick budget, and a single draw must stay under half
  the hard per-sample cap. A cell whose bias-safe eps is unaffordable is
  reported as blocked, with the arithmetic, and fails the suite rather than
  running with a biased or truncated-by-error configuration.

Every cell owns a disjoint seed range: cell c of experiment e draws from
stream indices [(1000 e + c) * 2^21, ...), replicate k at offset k + 1, so
reports are reproducible and worker-count invariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import kolmogi

from .asymptotics import (
    centered_replicates_dirichlet,
    centered_replicates_pd,
    consistency_curve,
    gaussian_limit,
    normality_test,
    prior_concentration_check,
)
from .engine import map_rows
from .measures import (
    CellPartition,
    FiniteSupport,
    Indicator,
    Polynomial,
    StdNormal,
    Uniform01,
    cell_probs,
    empirical_measure,
    integrate,
    ks_two_sample,
    seminorm,
)
from .posterior import bvm_replicates, concentration_statistic, posterior_mean, posterior_sample
from .py_sampler import (
    DEFAULT_TAIL_EPS,
    FixedK,
    PYParams,
    STICK_CAP,
    TailMass,
    auto_continuous_policy,
    compose_identity_sample,
    expected_stick_count,
    moment_product,
    pd_variance,
    stick_breaking_sample,
)
from .rng import SeedSpec, make_stream, substream
from .urn import summarize, urn_sequence

EXPERIMENTS = (
    "sample",
    "urn",
    "posterior",
    "verify-moments",
    "verify-identity",
    "verify-clt-pd",
    "verify-clt-dirichlet",
    "verify-bvm",
    "consistency",
    "concentration",
)
_EXPERIMENT_INDEX = {name: i for i, name in enumerate(EXPERIMENTS)}

# Seed-space layout: disjoint 2^21-wide ranges per cell, 1000 cells per experiment.
CELL_STRIDE = 1 << 21

CSV_COLUMNS = (
    "experiment",
    "alpha",
    "theta",
    "n",
    "M",
    "seed",
    "label",
    "statistic_name",
    "value",
    "theoretical_value",
    "tolerance",
    "pass",
)

DEFAULT_ALPHAS = (0.0, 0.25, 0.5, 0.75)
DEFAULT_THETAS = (0.5, 1.0, 5.0)
DEFAULT_KAPPAS = (0.5, 1.0, 2.0)
IDENTITY_ALPHAS = (0.25, 0.5, 0.75)
BVM_ALPHAS = (0.0, 0.5)

DEFAULT_FAMILY = (
    Indicator(0.0, 0.25),
    Indicator(0.0, 0.5),
    Indicator(0.0, 0.75),
    Polynomial((0.0, 0.0, 1.0), 0.0, 1.0),
)

DECILE_BREAKS = tuple(round(0.1 * i, 10) for i in range(1, 10))
ATOM_BREAKS = tuple(round(0.05 + 0.1 * i, 10) for i in range(0, 10))

# Expected sticks per cell a suite may spend before a cell is declared blocked.
CELL_STICK_BUDGETS = {
    "verify-moments": 2.0e8,
    "verify-identity": 3.0e8,  # split evenly across the two routes
    "verify-clt-pd": 7.0e8,
    "verify-clt-dirichlet": 3.0e8,
    "verify-bvm": 4.0e8,
}

# Bias ceiling: |Phi(x) - Phi(x / sqrt(1+r))| <= 0.121 r, so a variance shift r
# moves a KS statistic by at most 0.121 r; keep that under 30% of the critical D.
_KS_SHIFT_SLOPE = 0.121
_KS_SHIFT_SHARE = 0.3
# Lower bound used for the spread of P(f) P(g) when sizing the moment-suite
# bias allowance; the smallest spread on the default grid is about 0.05.
_MIN_PRODUCT_STD = 0.05


@dataclass
class SuiteResult:
    """One suite's outcome: flat report rows plus nested diagnostics."""

    name: str
    passed: bool
    rows: List[dict] = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "rows": self.rows,
            "detail": self.detail,
        }


def cell_root(master_seed: int, experiment: str, local_index: int) -> SeedSpec:
    """Root seed of cell local_index of the given experiment."""
    if experiment not in _EXPERIMENT_INDEX:
        raise ValueError(f"unknown experiment {experiment!r}")
    if not 0 <= local_index < 1000:
        raise ValueError("local_index must lie in [0, 1000)")
    ordinal = _EXPERIMENT_INDEX[experiment] * 1000 + local_index
    return SeedSpec(master_seed, ordinal * CELL_STRIDE)


def _row(
    experiment: str,
    statistic_name: str,
    value: float,
    *,
    alpha=None,
    theta=None,
    n=None,
    m=None,
    seed=None,
    label="",
    theoretical_value=None,
    tolerance=None,
    passed=None,
) -> dict:
    return {
        "experiment": experiment,
        "alpha": None if alpha is None else float(alpha),
        "theta": None if theta is None else float(theta),
        "n": None if n is None else int(n),
        "M": None if m is None else int(m),
        "seed": None if seed is None else int(seed),
        "label": str(label),
        "statistic_name": str(statistic_name),
        "value": float(value),
        "theoretical_value": None if theoretical_value is None else float(theoretical_value),
        "tolerance": None if tolerance is None else float(tolerance),
        "pass": None if passed is None else bool(passed),
    }


def _rows_pass(rows: List[dict]) -> bool:
    return all(r["pass"] is not False for r in rows)


def _grid(values, single, default) -> Tuple[float, ...]:
    if values is not None:
        return tuple(float(v) for v in values)
    if single is not None:
        return (float(single),)
    return tuple(default)


def _base_measure(tag: Optional[str], default: str = "uniform01"):
    tag = default if tag is None else tag
    if tag == "uniform01":
        return Uniform01()
    if tag == "stdnormal":
        return StdNormal()
    raise ValueError(f"base must be 'uniform01' or 'stdnormal', got {tag!r}")


def family_from_spec(spec_list) -> tuple:
    """Build a function family from config entries.

    Each entry is {"kind": "indicator", "a": .., "b": ..} or
    {"kind": "poly", "coeffs": [..], "lo": .., "hi": ..}.
    """
    fams = []
    for entry in spec_list:
        kind = entry.get("kind")
        if kind == "indicator":
            fams.append(Indicator(float(entry["a"]), float(entry["b"])))
        elif kind == "poly":
            fams.append(
                Polynomial(
                    tuple(float(c) for c in entry["coeffs"]),
                    float(entry["lo"]),
                    float(entry["hi"]),
                )
            )
        else:
            raise ValueError(f"unknown function kind {kind!r}")
    if not fams:
        raise ValueError("function family must be nonempty")
    return tuple(fams)


def _family(cfg) -> tuple:
    return family_from_spec(cfg.family) if cfg.family else DEFAULT_FAMILY


def _truth_measure(cfg):
    tag = cfg.truth
    if tag is None:
        return None
    if tag == "finite":
        if cfg.truth_points is None:
            raise ValueError("truth 'finite' needs truth_points")
        pts = tuple(float(p) for p in cfg.truth_points)
        probs = cfg.truth_probs
        if probs is None:
            probs = tuple(1.0 / len(pts) for _ in pts)
        return FiniteSupport(pts, tuple(float(p) for p in probs))
    return _base_measure(tag)


def _d_crit(p_min: float, n_eff: float) -> float:
    """KS statistic at which the asymptotic p-value equals p_min."""
    return float(kolmogi(p_min)) / math.sqrt(n_eff)


def _affordable(k_per_draw: float, m: int, budget: float) -> bool:
    return k_per_draw <= 0.5 * STICK_CAP and k_per_draw * m <= budget


def _k_compose(alpha: float, theta: float, ncomp: int, eps: float) -> float:
    one = TailMass(eps)
    return expected_stick_count(PYParams(alpha, theta), one) + ncomp * expected_stick_count(
        PYParams(alpha, alpha), one
    )


def _variance_tolerance(col: np.ndarray) -> float:
    """Four standard errors of the sample variance of col."""
    centered = col - col.mean()
    v = float(centered.dot(centered) / (col.size - 1))
    m4 = float(np.mean(centered**4))
    return 4.0 * math.sqrt(max(m4 - v * v, 0.0) / col.size)


def _blocked_detail(reason: str, **numbers) -> dict:
    d = {"blocked": reason}
    d.update({k: float(v) for k, v in numbers.items()})
    return d


# ---------------------------------------------------------------------------
# plain samplers


def _sample_trunc(cfg, params: PYParams):
    if cfg.fixed_k is not None:
        return FixedK(int(cfg.fixed_k))
    if cfg.eps is not None:
        return TailMass(float(cfg.eps))
    route, trunc = auto_continuous_policy(params.alpha, params.theta, 0)
    return trunc


def run_sample(cfg) -> SuiteResult:
    """One draw of the random measure; reports its invariants and atom table."""
    params = PYParams(
        0.5 if cfg.alpha is None else cfg.alpha, 1.0 if cfg.theta is None else cfg.theta
    )
    base = _base_measure(cfg.base)
    trunc = _sample_trunc(cfg, params)
    root = cell_root(cfg.master_seed, "sample", 1)
    meas = stick_breaking_sample(params, base, trunc, make_stream(root))
    total = float(meas.weights.sum())
    rows = [
        _row(
            "sample",
            "weights_sum",
            total,
            alpha=params.alpha,
            theta=params.theta,
            seed=root.stream_index,
            theoretical_value=1.0,
            tolerance=1e-9,
            passed=abs(total - 1.0) <= 1e-9,
        ),
        _row(
            "sample",
            "atom_count",
            float(meas.weights.size),
            alpha=params.alpha,
            theta=params.theta,
            seed=root.stream_index,
        ),
        _row(
            "sample",
            "max_weight",
            float(meas.weights.max()),
            alpha=params.alpha,
            theta=params.theta,
            seed=root.stream_index,
        ),
    ]
    order = np.argsort(meas.weights)[::-1][:200]
    detail = {
        "truncation": repr(trunc),
        "atom_count": int(meas.weights.size),
        "top_atoms": [
            [float(meas.locations[i]), float(meas.weights[i])] for i in order
        ],
    }
    return SuiteResult("sample", _rows_pass(rows), rows, detail)


def run_urn(cfg) -> SuiteResult:
    """One sequential sample from the prediction rule, plus optional replicate
    statistics of the block count."""
    params = PYParams(
        0.5 if cfg.alpha is None else cfg.alpha, 1.0 if cfg.theta is None else cfg.theta
    )
    base = _base_measure(cfg.base)
    n = 100 if cfg.n is None else int(cfg.n)
    root = cell_root(cfg.master_seed, "urn", 1)
    values, summary = urn_sequence(params, base, n, make_stream(root))
    counts_sum = float(summary.counts().sum())
    rows = [
        _row(
            "urn",
            "counts_sum",
            counts_sum,
            alpha=params.alpha,
            theta=params.theta,
            n=n,
            seed=root.stream_index,
            theoretical_value=float(n),
            tolerance=0.0,
            passed=counts_sum == n,
        ),
        _row(
            "urn",
            "n_blocks",
            float(summary.n_blocks),
            alpha=params.alpha,
            theta=params.theta,
            n=n,
            seed=root.stream_index,
        ),
        _row(
            "urn",
            "largest_block",
            float(summary.counts().max()),
            alpha=params.alpha,
            theta=params.theta,
            n=n,
            seed=root.stream_index,
        ),
    ]
    detail = {
        "values": values[: min(n, 1000)].tolist(),
        "blocks": [[y, e] for y, e in summary.blocks],
    }
    m = cfg.replicates
    if m is not None and m > 1:
        rep_root = cell_root(cfg.master_seed, "urn", 2)
        mat = map_rows(_urn_blocks_kernel, (params, base, n), rep_root, int(m), cfg.workers)
        blocks = mat[:, 0]
        rows.append(
            _row(
                "urn",
                "mean_blocks",
                float(blocks.mean()),
                alpha=params.alpha,
                theta=params.theta,
                n=n,
                m=int(m),
                seed=rep_root.stream_index,
            )
        )
        detail["mean_blocks_se"] = float(blocks.std(ddof=1) / math.sqrt(m))
    return SuiteResult("urn", _rows_pass(rows), rows, detail)


def run_posterior(cfg) -> SuiteResult:
    """One posterior draw given a fresh dataset; reports mixture invariants."""
    params = PYParams(
        0.5 if cfg.alpha is None else cfg.alpha, 1.0 if cfg.theta is None else cfg.theta
    )
    base = _base_measure(cfg.base)
    truth = _truth_measure(cfg) or base
    n = 50 if cfg.n is None else int(cfg.n)
    setup = cell_root(cfg.master_seed, "posterior", 0)
    data = np.atleast_1d(truth.sample(make_stream(setup), size=n))
    summary = summarize(data)
    route, trunc = auto_continuous_policy(params.alpha, params.theta, summary.n_blocks)
    root = cell_root(cfg.master_seed, "posterior", 1)
    draw = posterior_sample(summary, params, base, trunc, make_stream(root), route)
    total = float(draw.combined.weights.sum())
    rows = [
        _row(
            "posterior",
            "combined_weights_sum",
            total,
            alpha=params.alpha,
            theta=params.theta,
            n=n,
            seed=root.stream_index,
            theoretical_value=1.0,
            tolerance=1e-9,
            passed=abs(total - 1.0) <= 1e-9,
        ),
        _row(
            "posterior",
            "mixing_fraction_r",
            draw.r,
            alpha=params.alpha,
            theta=params.theta,
            n=n,
            seed=root.stream_index,
        ),
        _row(
            "posterior",
            "n_blocks",
            float(summary.n_blocks),
            alpha=params.alpha,
            theta=params.theta,
            n=n,
            seed=root.stream_index,
        ),
    ]
    partition = CellPartition(cfg.breakpoints or DECILE_BREAKS)
    detail = {
        "route": route,
        "truncation": repr(trunc),
        "posterior_mean_cells": posterior_mean(summary, params, base, partition).tolist(),
        "observed_r": draw.r,
        "atom_count": int(draw.combined.weights.size),
    }
    return SuiteResult("posterior", _rows_pass(rows), rows, detail)


def _urn_blocks_kernel(args: tuple, seed) -> np.ndarray:
    params, base, n = args
    _, summary = urn_sequence(params, base, n, make_stream(seed))
    return np.array([float(summary.n_blocks)])


# ---------------------------------------------------------------------------
# product-moment suite


def _family_kernel(args: tuple, seed) -> np.ndarray:
    params, base, trunc, fams = args
    meas = stick_breaking_sample(params, base, trunc, make_stream(seed))
    return np.array([integrate(meas, f) for f in fams])


def _compose_family_kernel(args: tuple, seed) -> np.ndarray:
    alpha, theta, ncomp, base, trunc, fams = args
    meas = compose_identity_sample(alpha, theta, ncomp, base, trunc, make_stream(seed))
    return np.array([integrate(meas, f) for f in fams])


def _moments_auto(alpha: float, theta: float, m_full: int, budget: float):
    """Loosest bias-safe eps at the largest affordable replicate count.

    The truncation shift of any product moment is below eps^2 / 4; the
    tolerance is 4 standard errors ~ 4 * std / sqrt(m) with std at least
    _MIN_PRODUCT_STD. Halving replicates widens the allowance by sqrt(2) and
    cuts the cost superlinearly, so a few halvings make heavy cells feasible.
    """
    m = int(m_full)
    while True:
        allow = 2.0 * _MIN_PRODUCT_STD / math.sqrt(m)
        eps = min(0.3, math.sqrt(allow / 0.25))
        k = expected_stick_count(PYParams(alpha, theta), TailMass(eps))
        if _affordable(k, m, budget) or m // 2 < 2000:
            return eps, m
        m //= 2


def run_verify_moments(cfg) -> SuiteResult:
    """Monte Carlo product moments against the closed form, all grid cells,
    all function pairs, at 4 standard errors."""
    base = _base_measure(cfg.base)
    fams = _family(cfg)
    alphas = _grid(cfg.alphas, cfg.alpha, DEFAULT_ALPHAS)
    thetas = _grid(cfg.thetas, cfg.theta, DEFAULT_THETAS)
    m_full = 20000 if cfg.replicates is None else int(cfg.replicates)
    budget = cfg.stick_budget or CELL_STICK_BUDGETS["verify-moments"]
    pinned = cfg.eps_policy == "pinned"
    pinned_eps = DEFAULT_TAIL_EPS if cfg.eps is None else float(cfg.eps)

    rows: List[dict] = []
    cells = []
    local = 1
    for alpha in alphas:
        for theta in thetas:
            root = cell_root(cfg.master_seed, "verify-moments", local)
            local += 1
            params = PYParams(alpha, theta)
            if pinned:
                eps, m_eff = pinned_eps, m_full
            else:
                eps, m_eff = _moments_auto(alpha, theta, m_full, budget)
            k_draw = expected_stick_count(params, TailMass(eps))
            cell_info = {
                "alpha": alpha,
                "theta": theta,
                "eps": eps,
                "m": m_eff,
                "expected_sticks_per_draw": k_draw,
                "seed": root.stream_index,
            }
            if not _affordable(k_draw, m_eff, budget):
                reason = (
                    f"cell (alpha={alpha:g}, theta={theta:g}) needs ~{k_draw:.3g} sticks per "
                    f"draw at eps={eps:g} ({k_draw * m_eff:.3g} for {m_eff} draws); the per-draw "
                    f"cap is {STICK_CAP:.0e}/2 and the cell budget is {budget:.3g}"
                )
                cell_info.update(_blocked_detail(reason, planned=k_draw * m_eff, budget=budget))
                cells.append(cell_info)
                rows.append(
                    _row(
                        "verify-moments",
                        "preflight",
                        k_draw * m_eff,
                        alpha=alpha,
                        theta=theta,
                        m=m_eff,
                        seed=root.stream_index,
                        label="cell",
                        theoretical_value=budget,
                        passed=False,
                    )
                )
                continue
            mat = map_rows(
                _family_kernel, (params, base, TailMass(eps), fams), root, m_eff, cfg.workers
            )
            for i in range(len(fams)):
                for j in range(i, len(fams)):
                    prod = mat[:, i] * mat[:, j]
                    mc = float(prod.mean())
                    se = float(prod.std(ddof=1) / math.sqrt(m_eff))
                    theo = moment_product(params, base, fams[i], fams[j])
                    rows.append(
                        _row(
                            "verify-moments",
                            "product_moment",
                            mc,
                            alpha=alpha,
                            theta=theta,
                            m=m_eff,
                            seed=root.stream_index,
                            label=f"{fams[i].label()}*{fams[j].label()}",
                            theoretical_value=theo,
                            tolerance=4.0 * se,
                            passed=abs(mc - theo) <= 4.0 * se,
                        )
                    )
            cells.append(cell_info)
    detail = {"eps_policy": "pinned" if pinned else "auto", "cells": cells}
    return SuiteResult("verify-moments", _rows_pass(rows), rows, detail)


# ---------------------------------------------------------------------------
# composition-identity suite


def run_verify_identity(cfg) -> SuiteResult:
    """Composition route vs direct route at raised strength: two-sample KS per
    function plus the closed-form variance at 4 standard errors."""
    base = _base_measure(cfg.base)
    fams = _family(cfg)
    alphas = _grid(cfg.alphas, cfg.alpha, IDENTITY_ALPHAS)
    theta = 1.0 if cfg.theta is None else float(cfg.theta)
    n = 10 if cfg.n is None else int(cfg.n)
    m = 10000 if cfg.replicates is None else int(cfg.replicates)
    budget_route = (cfg.stick_budget or CELL_STICK_BUDGETS["verify-identity"]) / 2.0
    pinned = cfg.eps_policy == "pinned"
    p_min = cfg.p_min
    d_crit = _d_crit(p_min, m / 2.0)  # two-sample with equal sizes m

    rows: List[dict] = []
    cells = []
    for idx, alpha in enumerate(alphas):
        root = cell_root(cfg.master_seed, "verify-identity", 1 + idx)
        theta_eff = theta + n * alpha
        # one pooled s.e. of the variance check, so truncation bias spends at
        # most a quarter of the 4-s.e. allowance and noise keeps the rest
        safe_rel = math.sqrt(2.0 / m)
        if pinned:
            eps_d = eps_c = DEFAULT_TAIL_EPS if cfg.eps is None else float(cfg.eps)
        else:
            eps_d = min(0.3, math.sqrt(safe_rel * (1.0 - alpha) / (theta_eff + 1.0)))
            eps_c = min(0.3, math.sqrt(safe_rel * (1.0 - alpha) / (1.0 + alpha)))
        k_d = expected_stick_count(PYParams(alpha, theta_eff), TailMass(eps_d))
        k_c = _k_compose(alpha, theta, n, eps_c)
        cell_info = {
            "alpha": alpha,
            "theta": theta,
            "n": n,
            "m": m,
            "eps_direct": eps_d,
            "eps_compose": eps_c,
            "sticks_direct": k_d,
            "sticks_compose": k_c,
            "seed": root.stream_index,
        }
        if not (_affordable(k_d, m, budget_route) and _affordable(k_c, m, budget_route)):
            reason = (
                f"cell alpha={alpha:g}: bias-safe eps pair ({eps_d:.3g} direct, {eps_c:.3g} "
                f"compose) needs ~{k_d * m:.3g} and ~{k_c * m:.3g} sticks per route for "
                f"M={m}, against a per-route budget of {budget_route:.3g} and a per-draw cap "
                f"of {STICK_CAP:.0e}/2; a looser eps would bias the variance check beyond "
                f"its safety allowance ({safe_rel:.3g} relative, one pooled s.e.)"
            )
            cell_info.update(
                _blocked_detail(reason, planned=max(k_d, k_c) * m, budget=budget_route)
            )
            cells.append(cell_info)
            rows.append(
                _row(
                    "verify-identity",
                    "preflight",
                    max(k_d, k_c) * m,
                    alpha=alpha,
                    theta=theta,
                    n=n,
                    m=m,
                    seed=root.stream_index,
                    label="cell",
                    theoretical_value=budget_route,
                    passed=False,
                )
            )
            continue
        direct = map_rows(
            _family_kernel,
            (PYParams(alpha, theta_eff), base, TailMass(eps_d), fams),
            root,
            m,
            cfg.workers,
        )
        compose_root = SeedSpec(root.master_seed, root.stream_index + m + 1)
        compose = map_rows(
            _compose_family_kernel,
            (alpha, theta, n, base, TailMass(eps_c), fams),
            compose_root,
            m,
            cfg.workers,
        )
        for i, f in enumerate(fams):
            stat, p = ks_two_sample(direct[:, i], compose[:, i])
            rows.append(
                _row(
                    "verify-identity",
                    "route_ks_statistic",
                    stat,
                    alpha=alpha,
                    theta=theta,
                    n=n,
                    m=m,
                    seed=root.stream_index,
                    label=f.label(),
                    theoretical_value=d_crit,
                    passed=p > p_min,
                )
            )
            rows.append(
                _row(
                    "verify-identity",
                    "route_ks_p_value",
                    p,
                    alpha=alpha,
                    theta=theta,
                    n=n,
                    m=m,
                    seed=root.stream_index,
                    label=f.label(),
                    theoretical_value=p_min,
                    passed=p > p_min,
                )
            )
            pooled = np.concatenate([direct[:, i], compose[:, i]])
            v_emp = float(pooled.var(ddof=1))
            target = pd_variance(PYParams(alpha, theta_eff), base, f)
            tol = _variance_tolerance(pooled)
            rows.append(
                _row(
                    "verify-identity",
                    "variance",
                    v_emp,
                    alpha=alpha,
                    theta=theta,
                    n=n,
                    m=2 * m,
                    seed=root.stream_index,
                    label=f.label(),
                    theoretical_value=target,
                    tolerance=tol,
                    passed=abs(v_emp - target) <= tol,
                )
            )
        cells.append(cell_info)
    detail = {"eps_policy": "pinned" if pinned else "auto", "cells": cells}
    return SuiteResult("verify-identity", _rows_pass(rows), rows, detail)


# ---------------------------------------------------------------------------
# central-limit suites


def _normality_rows(
    experiment: str,
    reps,
    limit,
    p_min: float,
    cov_tol: float,
    *,
    alpha=None,
    theta=None,
    n=None,
    seed=None,
) -> Tuple[List[dict], dict]:
    report = normality_test(reps, limit, p_min=p_min, cov_tol=cov_tol)
    d_crit = _d_crit(p_min, reps.m)
    rows = []
    for check in report.checks:
        common = dict(alpha=alpha, theta=theta, n=n, m=reps.m, seed=seed, label=check.label)
        rows.append(
            _row(
                experiment,
                "ks_statistic",
                check.ks_statistic,
                theoretical_value=d_crit,
                passed=check.p_value > p_min,
                **common,
            )
        )
        rows.append(
            _row(
                experiment,
                "ks_p_value",
                check.p_value,
                theoretical_value=p_min,
                passed=check.p_value > p_min,
                **common,
            )
        )
        var_ok = (
            check.relative_error <= cov_tol
            if not check.degenerate
            else check.relative_error == 0.0
        )
        rows.append(
            _row(
                experiment,
                "variance",
                check.empirical_variance,
                theoretical_value=check.theoretical_variance,
                tolerance=cov_tol * abs(check.theoretical_variance),
                passed=var_ok,
                **common,
            )
        )
    rows.append(
        _row(
            experiment,
            "covariance_error",
            report.covariance_max_relative_error,
            alpha=alpha,
            theta=theta,
            n=n,
            m=reps.m,
            seed=seed,
            label="cell",
            theoretical_value=0.0,
            tolerance=cov_tol,
            passed=report.covariance_max_relative_error < cov_tol,
        )
    )
    return rows, report.to_dict()


def _clt_safe_rel(p_min: float, cov_tol: float, m: int) -> float:
    """Largest variance shift the KS and covariance checks can absorb safely."""
    return min(cov_tol / 2.0, _KS_SHIFT_SHARE * _d_crit(p_min, m) / _KS_SHIFT_SLOPE)


def run_verify_clt_pd(cfg) -> SuiteResult:
    """Scaled centered process at raised strength against its Gaussian limit."""
    base = _base_measure(cfg.base)
    fams = _family(cfg)
    alphas = _grid(cfg.alphas, cfg.alpha, IDENTITY_ALPHAS)
    theta = 1.0 if cfg.theta is None else float(cfg.theta)
    n = 2000 if cfg.n is None else int(cfg.n)
    m = 5000 if cfg.replicates is None else int(cfg.replicates)
    route = cfg.route
    budget = cfg.stick_budget or CELL_STICK_BUDGETS["verify-clt-pd"]
    pinned = cfg.eps_policy == "pinned"

    rows: List[dict] = []
    cells = []
    reports = {}
    for idx, alpha in enumerate(alphas):
        root = cell_root(cfg.master_seed, "verify-clt-pd", 1 + idx)
        theta_eff = theta + n * alpha
        safe_rel = _clt_safe_rel(cfg.p_min, cfg.cov_tol, m)
        if pinned:
            eps_c = eps_d = DEFAULT_TAIL_EPS if cfg.eps is None else float(cfg.eps)
        else:
            eps_c = min(0.3, math.sqrt(safe_rel * (1.0 - alpha) / (1.0 + alpha)))
            eps_d = min(0.3, math.sqrt(safe_rel * (1.0 - alpha) / (theta_eff + 1.0)))
        k_c = _k_compose(alpha, theta, n, eps_c)
        k_d = expected_stick_count(PYParams(alpha, theta_eff), TailMass(eps_d))
        eps_used = eps_c if route == "compose" else eps_d
        k_used = k_c if route == "compose" else k_d
        cell_info = {
            "alpha": alpha,
            "theta": theta,
            "n": n,
            "m": m,
            "route": route,
            "eps": eps_used,
            "sticks_per_draw": k_used,
            "seed": root.stream_index,
        }
        if not _affordable(k_used, m, budget):
            reason = (
                f"cell alpha={alpha:g}: bias-safe eps is {eps_c:.3g} on the composition route "
                f"(~{k_c * m:.3g} sticks for M={m}) and {eps_d:.3g} on the direct route "
                f"(~{k_d:.3g} sticks per draw, cap {STICK_CAP:.0e}); budget {budget:.3g}; "
                f"looser eps would shift the limit variance beyond {safe_rel:.3g} relative "
                f"and could flip the KS/covariance verdicts"
            )
            cell_info.update(_blocked_detail(reason, planned=k_used * m, budget=budget))
            cells.append(cell_info)
            rows.append(
                _row(
                    "verify-clt-pd",
                    "preflight",
                    k_used * m,
                    alpha=alpha,
                    theta=theta,
                    n=n,
                    m=m,
                    seed=root.stream_index,
                    label="cell",
                    theoretical_value=budget,
                    passed=False,
                )
            )
            continue
        limit = gaussian_limit("pd_clt", alpha, base, fams)
        reps = centered_replicates_pd(
            alpha, theta, n, base, fams, m, TailMass(eps_used), make_stream(root), route, cfg.workers
        )
        cell_rows, report = _normality_rows(
            "verify-clt-pd",
            reps,
            limit,
            cfg.p_min,
            cfg.cov_tol,
            alpha=alpha,
            theta=theta,
            n=n,
            seed=root.stream_index,
        )
        rows.extend(cell_rows)
        reports[f"alpha={alpha:g}"] = report
        other = "direct" if route == "compose" else "compose"
        eps_o, k_o = (eps_d, k_d) if other == "direct" else (eps_c, k_c)
        if _affordable(k_o, m, budget):
            other_root = SeedSpec(root.master_seed, root.stream_index + m + 1)
            reps_o = centered_replicates_pd(
                alpha, theta, n, base, fams, m, TailMass(eps_o), make_stream(other_root), other, cfg.workers
            )
            for i, f in enumerate(fams):
                stat, p = ks_two_sample(reps.rows[:, i], reps_o.rows[:, i])
                rows.append(
                    _row(
                        "verify-clt-pd",
                        "route_ks_p_value",
                        p,
                        alpha=alpha,
                        theta=theta,
                        n=n,
                        m=m,
                        seed=root.stream_index,
                        label=f.label(),
                        theoretical_value=cfg.p_min,
                        passed=p > cfg.p_min,
                    )
                )
            cell_info["route_cross_check"] = {"route": other, "eps": eps_o}
        cells.append(cell_info)
    detail = {
        "eps_policy": "pinned" if pinned else "auto",
        "cells": cells,
        "normality": reports,
    }
    return SuiteResult("verify-clt-pd", _rows_pass(rows), rows, detail)


def run_verify_clt_dirichlet(cfg) -> SuiteResult:
    """Zero-discount limit at fixed total strength: per-strength normality and
    pairwise strength-invariance."""
    base = _base_measure(cfg.base)
    fams = _family(cfg)
    kappas = _grid(cfg.kappas, cfg.kappa, DEFAULT_KAPPAS)
    target = 2000 if cfg.n is None else int(cfg.n)
    m = 5000 if cfg.replicates is None else int(cfg.replicates)
    pinned = cfg.eps_policy == "pinned"
    safe_rel = _clt_safe_rel(cfg.p_min, cfg.cov_tol, m)

    limit = gaussian_limit("dirichlet_clt", 0.0, base, fams)
    rows: List[dict] = []
    cells = []
    reports = {}
    rep_sets = []
    for idx, kappa in enumerate(kappas):
        root = cell_root(cfg.master_seed, "verify-clt-dirichlet", 1 + idx)
        ncomp = max(1, int(round(target / kappa)))
        if pinned:
            eps = DEFAULT_TAIL_EPS if cfg.eps is None else float(cfg.eps)
        else:
            eps = min(0.3, math.sqrt(safe_rel / (kappa + 1.0)))
        reps = centered_replicates_dirichlet(
            kappa, ncomp, base, fams, m, TailMass(eps), make_stream(root), cfg.workers
        )
        rep_sets.append((kappa, reps))
        cell_rows, report = _normality_rows(
            "verify-clt-dirichlet",
            reps,
            limit,
            cfg.p_min,
            cfg.cov_tol,
            alpha=0.0,
            theta=kappa,
            n=ncomp,
            seed=root.stream_index,
        )
        rows.extend(cell_rows)
        reports[f"kappa={kappa:g}"] = report
        cells.append(
            {
                "kappa": kappa,
                "n_components": ncomp,
                "m": m,
                "eps": eps,
                "seed": root.stream_index,
            }
        )
    for a in range(len(rep_sets)):
        for b in range(a + 1, len(rep_sets)):
            ka, ra = rep_sets[a]
            kb, rb = rep_sets[b]
            for i, f in enumerate(fams):
                stat, p = ks_two_sample(ra.rows[:, i], rb.rows[:, i])
                rows.append(
                    _row(
                        "verify-clt-dirichlet",
                        "pair_ks_p_value",
                        p,
                        alpha=0.0,
                        theta=ka,
                        m=m,
                        label=f"{f.label()}|{ka:g}~{kb:g}",
                        theoretical_value=cfg.p_min,
                        passed=p > cfg.p_min,
                    )
                )
    detail = {
        "eps_policy": "pinned" if pinned else "auto",
        "cells": cells,
        "normality": reports,
    }
    return SuiteResult("verify-clt-dirichlet", _rows_pass(rows), rows, detail)


def run_verify_bvm(cfg) -> SuiteResult:
    """Scaled posterior spread around the predictive mean, one fixed dataset,
    against the posterior Gaussian limit with the realized data measure."""
    base = _base_measure(cfg.base)
    fams = _family(cfg)
    alphas = _grid(cfg.alphas, cfg.alpha, BVM_ALPHAS)
    theta = 1.0 if cfg.theta is None else float(cfg.theta)
    n = 2000 if cfg.n is None else int(cfg.n)
    m = 5000 if cfg.replicates is None else int(cfg.replicates)
    budget = cfg.stick_budget or CELL_STICK_BUDGETS["verify-bvm"]
    pinned = cfg.eps_policy == "pinned"

    setup = cell_root(cfg.master_seed, "verify-bvm", 0)
    data = np.atleast_1d(base.sample(make_stream(setup), size=n))
    p0 = empirical_measure(data)
    k_blocks = summarize(data).n_blocks

    rows: List[dict] = []
    cells = []
    reports = {}
    for idx, alpha in enumerate(alphas):
        root = cell_root(cfg.master_seed, "verify-bvm", 1 + idx)
        params = PYParams(alpha, theta)
        safe_rel = _clt_safe_rel(cfg.p_min, cfg.cov_tol, m)
        if alpha == 0.0:
            route = "sticks"
            eps = (DEFAULT_TAIL_EPS if cfg.eps is None else float(cfg.eps)) if pinned else 1e-6
            k_draw = expected_stick_count(PYParams(0.0, theta), TailMass(eps))
        else:
            route = "compose"
            if pinned:
                eps = DEFAULT_TAIL_EPS if cfg.eps is None else float(cfg.eps)
            else:
                eps = min(0.3, math.sqrt(safe_rel * (1.0 - alpha) / (1.0 + alpha)))
            k_draw = _k_compose(alpha, theta, k_blocks, eps)
        cell_info = {
            "alpha": alpha,
            "theta": theta,
            "n": n,
            "m": m,
            "route": route,
            "eps": eps,
            "sticks_per_draw": k_draw,
            "seed": root.stream_index,
        }
        if not _affordable(k_draw, m, budget):
            reason = (
                f"cell alpha={alpha:g}: route {route} at bias-safe eps={eps:.3g} needs "
                f"~{k_draw * m:.3g} sticks for M={m} (budget {budget:.3g}, per-draw cap "
                f"{STICK_CAP:.0e}/2)"
            )
            cell_info.update(_blocked_detail(reason, planned=k_draw * m, budget=budget))
            cells.append(cell_info)
            rows.append(
                _row(
                    "verify-bvm",
                    "preflight",
                    k_draw * m,
                    alpha=alpha,
                    theta=theta,
                    n=n,
                    m=m,
                    seed=root.stream_index,
                    label="cell",
                    theoretical_value=budget,
                    passed=False,
                )
            )
            continue
        limit = gaussian_limit("bvm", alpha, base, fams, p0=p0)
        reps = bvm_replicates(
            data, params, base, fams, m, TailMass(eps), make_stream(root), route, cfg.workers
        )
        cell_rows, report = _normality_rows(
            "verify-bvm",
            reps,
            limit,
            cfg.p_min,
            cfg.cov_tol,
            alpha=alpha,
            theta=theta,
            n=n,
            seed=root.stream_index,
        )
        rows.extend(cell_rows)
        reports[f"alpha={alpha:g}"] = report
        cells.append(cell_info)
    detail = {
        "eps_policy": "pinned" if pinned else "auto",
        "cells": cells,
        "normality": reports,
        "data_seed": setup.stream_index,
    }
    return SuiteResult("verify-bvm", _rows_pass(rows), rows, detail)


# ---------------------------------------------------------------------------
# consistency and concentration suites


def run_consistency(cfg) -> SuiteResult:
    """Posterior-mean limits under continuous and discrete truths, plus prior
    spread decay as the strength grows."""
    params = PYParams(
        0.5 if cfg.alpha is None else cfg.alpha, 1.0 if cfg.theta is None else cfg.theta
    )
    base = _base_measure(cfg.base, default="stdnormal")
    n_list = tuple(int(v) for v in (cfg.n_list or (100, 1000, 10000)))
    m_prior = 800 if cfg.replicates is None else int(cfg.replicates)
    rows: List[dict] = []
    detail: dict = {}

    truth_override = _truth_measure(cfg)
    scenarios = []
    if truth_override is not None:
        partition = CellPartition(
            cfg.breakpoints
            or (ATOM_BREAKS if truth_override.atomic else DECILE_BREAKS)
        )
        scenarios.append(("custom", truth_override, partition))
    else:
        scenarios.append(("continuous", Uniform01(), CellPartition(DECILE_BREAKS)))
        scenarios.append(
            (
                "discrete",
                FiniteSupport(tuple(DECILE_BREAKS), tuple(1.0 / 9.0 for _ in range(9))),
                CellPartition(ATOM_BREAKS),
            )
        )

    for s_idx, (tag, truth, partition) in enumerate(scenarios):
        root = cell_root(cfg.master_seed, "consistency", 1 + s_idx)
        curve = consistency_curve(params, base, truth, partition, n_list, make_stream(root))
        atomic_truth = truth.atomic
        stat = "distance_to_truth" if atomic_truth else "distance_to_mixture"
        for nn, dist in curve:
            rows.append(
                _row(
                    "consistency",
                    stat,
                    dist,
                    alpha=params.alpha,
                    theta=params.theta,
                    n=nn,
                    seed=root.stream_index,
                    label=tag,
                )
            )
        final_tol = 0.02 if atomic_truth else 0.05
        rows.append(
            _row(
                "consistency",
                f"{stat}_final",
                curve[-1][1],
                alpha=params.alpha,
                theta=params.theta,
                n=curve[-1][0],
                seed=root.stream_index,
                label=tag,
                theoretical_value=0.0,
                tolerance=final_tol,
                passed=curve[-1][1] <= final_tol,
            )
        )
        dists = [d for _, d in curve]
        decreasing = all(b < a for a, b in zip(dists, dists[1:]))
        rows.append(
            _row(
                "consistency",
                f"{stat}_decreasing",
                1.0 if decreasing else 0.0,
                alpha=params.alpha,
                theta=params.theta,
                seed=root.stream_index,
                label=tag,
                theoretical_value=1.0,
                tolerance=0.0,
                passed=decreasing,
            )
        )
        detail[tag] = {"curve": [[nn, d] for nn, d in curve]}
        if not atomic_truth and params.alpha > 0.0:
            floor_curve = consistency_curve(
                params, base, truth, partition, n_list, make_stream(root), target="truth"
            )
            gap_limit = params.alpha * seminorm(
                cell_probs(base, partition), cell_probs(truth, partition)
            )
            rows.append(
                _row(
                    "consistency",
                    "truth_distance_floor",
                    floor_curve[-1][1],
                    alpha=params.alpha,
                    theta=params.theta,
                    n=floor_curve[-1][0],
                    seed=root.stream_index,
                    label=tag,
                    theoretical_value=0.1,
                    passed=floor_curve[-1][1] > 0.1,
                )
            )
            detail[tag]["floor_curve"] = [[nn, d] for nn, d in floor_curve]
            detail[tag]["floor_limit"] = gap_limit

    prior_root = cell_root(cfg.master_seed, "consistency", 1 + len(scenarios))
    prior_partition = CellPartition(cfg.breakpoints or DECILE_BREAKS)
    if params.alpha > 0.0:
        v_list = tuple(k * params.alpha for k in (10, 100, 1000))
    else:
        v_list = (0.0,)
    points = prior_concentration_check(
        params.alpha,
        params.theta,
        v_list,
        base,
        prior_partition,
        m_prior,
        make_stream(prior_root),
        cfg.workers,
    )
    for pt in points:
        rows.append(
            _row(
                "consistency",
                "prior_spread",
                pt.estimate,
                alpha=params.alpha,
                theta=params.theta,
                m=m_prior,
                seed=prior_root.stream_index,
                label=f"strength={pt.theta_eff:g}",
                theoretical_value=pt.bound,
                tolerance=3.0 * pt.std_error,
                passed=pt.estimate <= pt.bound + 3.0 * pt.std_error,
            )
        )
    if len(points) > 1:
        ests = [pt.estimate for pt in points]
        dec = all(b < a for a, b in zip(ests, ests[1:]))
        rows.append(
            _row(
                "consistency",
                "prior_spread_decreasing",
                1.0 if dec else 0.0,
                alpha=params.alpha,
                theta=params.theta,
                m=m_prior,
                seed=prior_root.stream_index,
                theoretical_value=1.0,
                tolerance=0.0,
                passed=dec,
            )
        )
    detail["prior"] = {
        "points": [[pt.theta_eff, pt.estimate, pt.bound, pt.std_error] for pt in points]
    }
    return SuiteResult("consistency", _rows_pass(rows), rows, detail)


def run_concentration(cfg) -> SuiteResult:
    """Posterior spread around the predictive mean against the closed-form
    bound, decreasing in the sample size, over the parameter grid."""
    base = _base_measure(cfg.base)
    alphas = _grid(cfg.alphas, cfg.alpha, DEFAULT_ALPHAS)
    thetas = _grid(cfg.thetas, cfg.theta, DEFAULT_THETAS)
    n_list = tuple(int(v) for v in (cfg.n_list or (10, 100, 1000)))
    m = 2000 if cfg.replicates is None else int(cfg.replicates)
    partition = CellPartition(cfg.breakpoints or DECILE_BREAKS)

    setup = cell_root(cfg.master_seed, "concentration", 0)
    datasets = [
        np.atleast_1d(base.sample(substream(setup, j), size=nn)) for j, nn in enumerate(n_list)
    ]
    summaries = [summarize(d) for d in datasets]

    rows: List[dict] = []
    cells = []
    local = 1
    for alpha in alphas:
        for theta in thetas:
            root = cell_root(cfg.master_seed, "concentration", local)
            local += 1
            params = PYParams(alpha, theta)
            ests = []
            for j, nn in enumerate(n_list):
                stream = make_stream(
                    SeedSpec(root.master_seed, root.stream_index + j * (m + 2))
                )
                est, se = concentration_statistic(
                    summaries[j], params, base, partition, m, stream, cfg.workers
                )
                bound = 1.0 / (theta + nn + 1.0)
                ests.append(est)
                rows.append(
                    _row(
                        "concentration",
                        "posterior_spread",
                        est,
                        alpha=alpha,
                        theta=theta,
                        n=nn,
                        m=m,
                        seed=root.stream_index,
                        label=f"n={nn}",
                        theoretical_value=bound,
                        tolerance=3.0 * se,
                        passed=est <= bound + 3.0 * se,
                    )
                )
            dec = all(b < a for a, b in zip(ests, ests[1:]))
            rows.append(
                _row(
                    "concentration",
                    "posterior_spread_decreasing",
                    1.0 if dec else 0.0,
                    alpha=alpha,
                    theta=theta,
                    m=m,
                    seed=root.stream_index,
                    theoretical_value=1.0,
                    tolerance=0.0,
                    passed=dec,
                )
            )
            cells.append(
                {"alpha": alpha, "theta": theta, "estimates": ests, "seed": root.stream_index}
            )
    detail = {"n_list": list(n_list), "cells": cells}
    return SuiteResult("concentration", _rows_pass(rows), rows, detail)


RUNNERS = {
    "sample": run_sample,
    "urn": run_urn,
    "posterior": run_posterior,
    "verify-moments": run_verify_moments,
    "verify-identity": run_verify_identity,
    "verify-clt-pd": run_verify_clt_pd,
    "verify-clt-dirichlet": run_verify_clt_dirichlet,
    "verify-bvm": run_verify_bvm,
    "consistency": run_consistency,
    "concentration": run_concentration,
}
