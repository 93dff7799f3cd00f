"""Posterior mixture draws, posterior means, spread statistics, and the
centered posterior replicates."""
import math

import numpy as np
import pytest

from pdp_lab.measures import CellPartition, Indicator, Uniform01, integrate, ks_two_sample
from pdp_lab.posterior import (
    bvm_replicates,
    concentration_statistic,
    posterior_mean,
    posterior_mean_function,
    posterior_sample,
)
from pdp_lab.py_sampler import PYParams, TailMass
from pdp_lab.rng import SeedSpec, make_stream
from pdp_lab.urn import EMPTY_SUMMARY, summarize

F_HALF = Indicator(0.0, 0.5)
THREE_POINTS = summarize(np.array([0.3, 0.3, 0.7]))


def test_posterior_sample_structure():
    draw = posterior_sample(
        THREE_POINTS,
        PYParams(0.5, 1.0),
        Uniform01(),
        TailMass(1e-4),
        make_stream(SeedSpec(1, 0)),
    )
    assert 0.0 < draw.r < 1.0
    assert draw.dn.weights.size == THREE_POINTS.n_blocks
    assert draw.dn.weights.sum() == pytest.approx(1.0)
    assert draw.combined.weights.sum() == pytest.approx(1.0, abs=1e-9)
    assert draw.continuous_part.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_posterior_sample_needs_data():
    with pytest.raises(ValueError):
        posterior_sample(
            EMPTY_SUMMARY,
            PYParams(0.5, 1.0),
            Uniform01(),
            TailMass(1e-4),
            make_stream(SeedSpec(1, 0)),
        )


def test_posterior_sample_reproducible():
    args = (THREE_POINTS, PYParams(0.5, 1.0), Uniform01(), TailMass(1e-5))
    a = posterior_sample(*args, make_stream(SeedSpec(9, 4)))
    b = posterior_sample(*args, make_stream(SeedSpec(9, 4)))
    assert a.r == b.r
    np.testing.assert_array_equal(a.combined.weights, b.combined.weights)
    np.testing.assert_array_equal(a.combined.locations, b.combined.locations)


def test_mixing_fraction_moments():
    # counts (2,1), alpha 0.5, theta 1: r ~ beta(2, 2), so E r = 1/2 and
    # E r^2 = 1/4 + 1/20 = 0.3
    params = PYParams(0.5, 1.0)
    m = 4000
    rs = np.empty(m)
    for k in range(m):
        draw = posterior_sample(
            THREE_POINTS, params, Uniform01(), TailMass(0.01), make_stream(SeedSpec(200, k))
        )
        rs[k] = draw.r
    assert abs(rs.mean() - 0.5) < 4.0 * rs.std(ddof=1) / math.sqrt(m)
    sq = rs**2
    assert abs(sq.mean() - 0.3) < 4.0 * sq.std(ddof=1) / math.sqrt(m)


def test_posterior_routes_agree_in_law():
    params = PYParams(0.5, 1.0)
    data = summarize(Uniform01().sample(make_stream(SeedSpec(300, 0)), size=10))
    m = 2000
    via_sticks = np.empty(m)
    via_compose = np.empty(m)
    for k in range(m):
        a = posterior_sample(
            data, params, Uniform01(), TailMass(0.02), make_stream(SeedSpec(301, k)), "sticks"
        )
        via_sticks[k] = integrate(a.combined, F_HALF)
        b = posterior_sample(
            data, params, Uniform01(), TailMass(0.02), make_stream(SeedSpec(302, k)), "compose"
        )
        via_compose[k] = integrate(b.combined, F_HALF)
    stat, p = ks_two_sample(via_sticks, via_compose)
    assert p > 0.001


def test_posterior_mean_closed_form():
    # fresh mass 1/2 spread as the base, plus blocks at 0.3 (3/8) and 0.7 (1/8)
    cells = posterior_mean(
        THREE_POINTS, PYParams(0.5, 1.0), Uniform01(), CellPartition((0.5,))
    )
    np.testing.assert_allclose(cells, [0.625, 0.375])


def test_posterior_mean_function_matches_cells():
    val = posterior_mean_function(THREE_POINTS, PYParams(0.5, 1.0), Uniform01(), F_HALF)
    assert val == pytest.approx(0.625)


def test_posterior_mean_is_monte_carlo_center():
    params = PYParams(0.5, 1.0)
    target = posterior_mean_function(THREE_POINTS, params, Uniform01(), F_HALF)
    m = 4000
    vals = np.empty(m)
    for k in range(m):
        draw = posterior_sample(
            THREE_POINTS, params, Uniform01(), TailMass(0.01), make_stream(SeedSpec(400, k))
        )
        vals[k] = integrate(draw.combined, F_HALF)
    se = vals.std(ddof=1) / math.sqrt(m)
    assert abs(vals.mean() - target) < 4.0 * se


def test_concentration_statistic_respects_bound():
    params = PYParams(0.3, 1.0)
    data = summarize(Uniform01().sample(make_stream(SeedSpec(500, 0)), size=20))
    part = CellPartition(tuple(0.1 * i for i in range(1, 10)))
    est, se = concentration_statistic(
        data, params, Uniform01(), part, 500, make_stream(SeedSpec(501, 0))
    )
    bound = 1.0 / (1.0 + 20.0 + 1.0)
    assert est > 0.0
    assert est <= bound + 4.0 * se


def test_concentration_statistic_requires_replicates():
    with pytest.raises(ValueError):
        concentration_statistic(
            THREE_POINTS,
            PYParams(0.3, 1.0),
            Uniform01(),
            CellPartition((0.5,)),
            50,
            make_stream(SeedSpec(0, 0)),
        )


def test_bvm_replicates_centered_and_reproducible():
    params = PYParams(0.5, 1.0)
    data = Uniform01().sample(make_stream(SeedSpec(600, 0)), size=100)
    fams = (F_HALF, Indicator(0.0, 0.25))
    reps = bvm_replicates(
        data, params, Uniform01(), fams, 800, TailMass(0.05), make_stream(SeedSpec(601, 0)), "compose"
    )
    assert reps.rows.shape == (800, 2)
    again = bvm_replicates(
        data, params, Uniform01(), fams, 800, TailMass(0.05), make_stream(SeedSpec(601, 0)), "compose"
    )
    np.testing.assert_array_equal(reps.rows, again.rows)
    # centered by construction: mean within 4 s.e. of zero
    for j in range(2):
        col = reps.rows[:, j]
        assert abs(col.mean()) < 4.0 * col.std(ddof=1) / math.sqrt(col.size)
