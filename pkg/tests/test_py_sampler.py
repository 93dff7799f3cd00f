"""Stick-breaking sampler, closed-form moments, truncation policies, and the
two structural sampling identities."""
import math

import numpy as np
import pytest

from pdp_lab.errors import ResourceLimitError
from pdp_lab.measures import Indicator, Polynomial, Uniform01, integrate, ks_two_sample
from pdp_lab.py_sampler import (
    DEFAULT_TAIL_EPS,
    FixedK,
    PYParams,
    STICK_CAP,
    TailMass,
    auto_continuous_policy,
    compose_identity_sample,
    dirichlet_decomposition_sample,
    expected_stick_count,
    moment_product,
    pd_variance,
    stick_breaking_sample,
)
from pdp_lab.rng import SeedSpec, draw_beta, make_stream

F_HALF = Indicator(0.0, 0.5)
F_QUARTER = Indicator(0.0, 0.25)
F_SQUARE = Polynomial((0.0, 0.0, 1.0), 0.0, 1.0)


def four_se_of_variance(x):
    c = x - x.mean()
    v = c.dot(c) / (x.size - 1)
    m4 = np.mean(c**4)
    return 4.0 * math.sqrt(max(m4 - v * v, 0.0) / x.size)


def test_params_validation():
    PYParams(0.0, 0.5)
    PYParams(0.5, -0.25)
    with pytest.raises(ValueError):
        PYParams(1.0, 1.0)
    with pytest.raises(ValueError):
        PYParams(-0.1, 1.0)
    with pytest.raises(ValueError):
        PYParams(0.5, -0.5)


def test_truncation_validation():
    TailMass(1e-8)
    FixedK(3)
    with pytest.raises(ValueError):
        TailMass(0.0)
    with pytest.raises(ValueError):
        TailMass(1.0)
    with pytest.raises(ValueError):
        FixedK(0)


def test_sample_weights_sum_to_one():
    meas = stick_breaking_sample(
        PYParams(0.5, 1.0), Uniform01(), TailMass(1e-6), make_stream(SeedSpec(1, 0))
    )
    assert meas.weights.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(meas.weights > 0.0)


def test_sample_is_reproducible():
    a = stick_breaking_sample(
        PYParams(0.25, 2.0), Uniform01(), TailMass(1e-5), make_stream(SeedSpec(42, 7))
    )
    b = stick_breaking_sample(
        PYParams(0.25, 2.0), Uniform01(), TailMass(1e-5), make_stream(SeedSpec(42, 7))
    )
    np.testing.assert_array_equal(a.locations, b.locations)
    np.testing.assert_array_equal(a.weights, b.weights)


def test_fixed_k_truncation_atom_count():
    meas = stick_breaking_sample(
        PYParams(0.5, 1.0), Uniform01(), FixedK(10), make_stream(SeedSpec(0, 0))
    )
    # ten sticks plus the lumped tail
    assert meas.weights.size == 11


def test_tail_mass_leaves_small_residual():
    eps = 1e-4
    meas = stick_breaking_sample(
        PYParams(0.5, 1.0), Uniform01(), TailMass(eps), make_stream(SeedSpec(8, 0))
    )
    # the smallest atom is the stopped tail, below eps by construction
    assert meas.weights.min() < eps


def test_first_stick_law():
    # the first stick is beta(1 - alpha, theta + alpha) by definition
    alpha, theta = 0.3, 0.7
    m = 4000
    first = np.empty(m)
    for k in range(m):
        meas = stick_breaking_sample(
            PYParams(alpha, theta), Uniform01(), FixedK(1), make_stream(SeedSpec(900, k))
        )
        first[k] = meas.weights[0]
    ref = draw_beta(make_stream(SeedSpec(901, 0)), 1.0 - alpha, theta + alpha, size=m)
    stat, p = ks_two_sample(first, ref)
    assert p > 0.001


def test_mean_is_base_measure():
    params = PYParams(0.5, 0.5)
    m = 3000
    vals = np.empty(m)
    for k in range(m):
        meas = stick_breaking_sample(
            params, Uniform01(), TailMass(0.01), make_stream(SeedSpec(77, k))
        )
        vals[k] = integrate(meas, F_HALF)
    se = vals.std(ddof=1) / math.sqrt(m)
    assert abs(vals.mean() - 0.5) < 4.0 * se


def test_moment_product_closed_forms():
    u = Uniform01()
    # ((theta+alpha) H(f)^2 + (1-alpha) H(f^2)) / (theta+1) at (0.5, 0.5): 1/3
    assert moment_product(PYParams(0.5, 0.5), u, F_HALF, F_HALF) == pytest.approx(1.0 / 3.0)
    # disjoint indicators at (0, 1): H(f) H(g) (theta+alpha)/(theta+1) = 1/16,
    # matching the aggregated-Dirichlet moment theta^2 h_A h_B / (theta (theta+1))
    assert moment_product(
        PYParams(0.0, 1.0), u, F_QUARTER, Indicator(0.25, 0.75)
    ) == pytest.approx(1.0 / 16.0)


def test_pd_variance_closed_forms():
    u = Uniform01()
    # (1-alpha)/(theta+1) Var_H(f): 0.5/3 * 1/4 and 0.75/2 * 1/4
    assert pd_variance(PYParams(0.5, 2.0), u, F_HALF) == pytest.approx(1.0 / 24.0)
    assert pd_variance(PYParams(0.25, 1.0), u, F_HALF) == pytest.approx(3.0 / 32.0)
    # polynomial: Var_H(x^2) = 4/45
    assert pd_variance(PYParams(0.0, 1.0), u, F_SQUARE) == pytest.approx(2.0 / 45.0)


def test_sampler_matches_second_moment():
    params = PYParams(0.5, 0.5)
    m = 4000
    vals = np.empty(m)
    for k in range(m):
        meas = stick_breaking_sample(
            params, Uniform01(), TailMass(0.05), make_stream(SeedSpec(500, k))
        )
        vals[k] = integrate(meas, F_HALF)
    sq = vals**2
    se = sq.std(ddof=1) / math.sqrt(m)
    assert abs(sq.mean() - 1.0 / 3.0) < 4.0 * se


def test_expected_stick_count_formulas():
    assert expected_stick_count(PYParams(0.5, 1.0), FixedK(25)) == 25.0
    # zero discount: theta * ln(1/eps)
    assert expected_stick_count(PYParams(0.0, 2.0), TailMass(1e-4)) == pytest.approx(
        2.0 * math.log(1e4)
    )
    # positive discount: ((theta+alpha)/alpha) * eps^(-alpha/(1-alpha))
    assert expected_stick_count(PYParams(0.5, 1.0), TailMass(1e-4)) == pytest.approx(3.0 * 1e4)
    assert expected_stick_count(PYParams(0.25, 1.0), TailMass(1e-3)) == pytest.approx(
        5.0 * 10.0
    )


def test_auto_policy_zero_discount_uses_sticks():
    route, trunc = auto_continuous_policy(0.0, 5.0, 12)
    assert route == "sticks"
    assert trunc == TailMass(DEFAULT_TAIL_EPS)


def test_auto_policy_cheap_discount_keeps_tight_tail():
    route, trunc = auto_continuous_policy(0.25, 1.0, 0)
    assert route == "sticks"
    assert trunc == TailMass(DEFAULT_TAIL_EPS)


def test_auto_policy_composition_when_blocks_exist():
    route, trunc = auto_continuous_policy(0.5, 1.0, 5)
    assert route == "compose"
    assert 0.0 < trunc.eps <= 0.3


def test_auto_policy_ladder_without_composition():
    route, trunc = auto_continuous_policy(0.5, 1.0, 0)
    assert route == "sticks"
    assert trunc == TailMass(1e-5)


def test_auto_policy_raises_when_nothing_affordable():
    with pytest.raises(ResourceLimitError):
        auto_continuous_policy(0.9, 1.0, 0)


def test_stick_cap_guards_runaway_draw():
    # at discount 0.9 the expected stop count dwarfs the per-sample cap
    with pytest.raises(ResourceLimitError):
        stick_breaking_sample(
            PYParams(0.9, 1.0), Uniform01(), TailMass(1e-4), make_stream(SeedSpec(13, 0))
        )


def test_compose_identity_validation():
    u = Uniform01()
    stream = make_stream(SeedSpec(0, 0))
    with pytest.raises(ValueError):
        compose_identity_sample(0.0, 1.0, 3, u, TailMass(0.1), stream)
    with pytest.raises(ValueError):
        compose_identity_sample(0.5, 0.0, 3, u, TailMass(0.1), stream)
    with pytest.raises(ValueError):
        compose_identity_sample(0.5, 1.0, 0, u, TailMass(0.1), stream)


def test_compose_identity_weights_sum_to_one():
    meas = compose_identity_sample(
        0.5, 1.0, 10, Uniform01(), TailMass(0.05), make_stream(SeedSpec(21, 0))
    )
    assert meas.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_compose_identity_matches_direct_route():
    # same law as one draw at raised strength theta + n * alpha
    alpha, theta, n = 0.5, 1.0, 4
    m = 3000
    via_compose = np.empty(m)
    via_direct = np.empty(m)
    for k in range(m):
        c = compose_identity_sample(
            alpha, theta, n, Uniform01(), TailMass(0.02), make_stream(SeedSpec(600, k))
        )
        via_compose[k] = integrate(c, F_HALF)
        d = stick_breaking_sample(
            PYParams(alpha, theta + n * alpha),
            Uniform01(),
            TailMass(0.02),
            make_stream(SeedSpec(601, k)),
        )
        via_direct[k] = integrate(d, F_HALF)
    stat, p = ks_two_sample(via_compose, via_direct)
    assert p > 0.001
    # closed-form variance at the raised strength: 0.5/4 * 1/4 = 1/32
    pooled = np.concatenate([via_compose, via_direct])
    assert abs(pooled.var(ddof=1) - 1.0 / 32.0) < four_se_of_variance(pooled)


def test_dirichlet_decomposition_weights_and_variance():
    m = 3000
    vals = np.empty(m)
    for k in range(m):
        meas = dirichlet_decomposition_sample(
            1.0, 5, Uniform01(), TailMass(1e-4), make_stream(SeedSpec(700, k))
        )
        vals[k] = integrate(meas, F_HALF)
    # total strength 5: Var = Var_H / 6 = 1/24
    assert abs(vals.var(ddof=1) - 1.0 / 24.0) < four_se_of_variance(vals)


def test_dirichlet_decomposition_single_component_is_plain_draw():
    # n = 1 reduces to one zero-discount draw at the component strength
    m = 2500
    a = np.empty(m)
    b = np.empty(m)
    for k in range(m):
        d1 = dirichlet_decomposition_sample(
            2.0, 1, Uniform01(), TailMass(1e-5), make_stream(SeedSpec(800, k))
        )
        a[k] = integrate(d1, F_HALF)
        d2 = stick_breaking_sample(
            PYParams(0.0, 2.0), Uniform01(), TailMass(1e-5), make_stream(SeedSpec(801, k))
        )
        b[k] = integrate(d2, F_HALF)
    stat, p = ks_two_sample(a, b)
    assert p > 0.001


def test_moment_product_symmetry():
    u = Uniform01()
    params = PYParams(0.3, 2.0)
    f, g = F_QUARTER, F_SQUARE
    assert moment_product(params, u, f, g) == pytest.approx(moment_product(params, u, g, f))
