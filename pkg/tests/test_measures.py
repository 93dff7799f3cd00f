"""Base measures, function specs, atomic measures, partitions, and the KS
helpers, checked against closed forms."""
import math

import numpy as np
import pytest

from pdp_lab.measures import (
    AtomicMeasure,
    CellPartition,
    Constant,
    FiniteSupport,
    Indicator,
    Polynomial,
    StdNormal,
    Uniform01,
    cell_probs,
    empirical_measure,
    function_label,
    integrate,
    integrate_product,
    ks_one_sample_normal,
    ks_two_sample,
    mix,
    seminorm,
    variance_under,
)
from pdp_lab.rng import SeedSpec, make_stream


def test_indicator_on_uniform():
    f = Indicator(0.2, 0.7)
    u = Uniform01()
    assert integrate(u, f) == pytest.approx(0.5)
    assert integrate_product(u, f, f) == pytest.approx(0.5)
    assert variance_under(u, f) == pytest.approx(0.25)


def test_polynomial_on_uniform_exact():
    # integral of x^2 on (0,1] is 1/3; variance is 1/5 - 1/9 = 4/45
    f = Polynomial((0.0, 0.0, 1.0), 0.0, 1.0)
    u = Uniform01()
    assert integrate(u, f) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert variance_under(u, f) == pytest.approx(4.0 / 45.0, abs=1e-12)


def test_polynomial_restricted_window():
    # x on (0, 0.5]: integral 1/8 under the uniform
    f = Polynomial((0.0, 1.0), 0.0, 0.5)
    assert integrate(Uniform01(), f) == pytest.approx(0.125, abs=1e-12)


def test_constant_function():
    c = Constant(2.5)
    assert integrate(Uniform01(), c) == pytest.approx(2.5)
    assert variance_under(Uniform01(), c) == pytest.approx(0.0, abs=1e-12)


def test_function_labels_are_stable():
    assert function_label(Indicator(0.0, 0.25)) == "ind(0,0.25]"
    assert "poly" in function_label(Polynomial((0.0, 1.0), 0.0, 1.0))


def test_stdnormal_indicator_uses_gaussian_cdf():
    f = Indicator(0.0, 1.0)
    # Phi(1) - Phi(0)
    expected = 0.5 * math.erf(1.0 / math.sqrt(2.0))
    assert integrate(StdNormal(), f) == pytest.approx(expected, abs=1e-12)


def test_finite_support_integrals_and_cdf():
    fs = FiniteSupport((0.1, 0.5, 0.9), (0.2, 0.3, 0.5))
    assert integrate(fs, Indicator(0.0, 0.5)) == pytest.approx(0.5)
    assert fs.cdf(0.5) == pytest.approx(0.5)
    assert fs.cdf(0.05) == pytest.approx(0.0)
    assert fs.cdf(1.0) == pytest.approx(1.0)


def test_finite_support_validation():
    with pytest.raises(ValueError):
        FiniteSupport((0.1, 0.1), (0.5, 0.5))
    with pytest.raises(ValueError):
        FiniteSupport((0.1, 0.2), (0.7, 0.2))


def test_atomic_measure_checks_weights():
    AtomicMeasure(np.array([0.5]), np.array([1.0]))
    with pytest.raises(ValueError):
        AtomicMeasure(np.array([0.5, 0.6]), np.array([0.7, 0.2]))
    with pytest.raises(ValueError):
        AtomicMeasure(np.array([0.5, 0.6]), np.array([1.2, -0.2]))


def test_atomic_measure_integrates_by_dot_product():
    meas = AtomicMeasure(np.array([0.1, 0.6]), np.array([0.25, 0.75]))
    f = Indicator(0.0, 0.5)
    assert integrate(meas, f) == pytest.approx(0.25)
    assert integrate_product(meas, f, Indicator(0.5, 1.0)) == pytest.approx(0.0)
    assert variance_under(meas, f) == pytest.approx(0.25 * 0.75)


def test_atomic_measure_merged_combines_duplicates():
    meas = AtomicMeasure(np.array([0.3, 0.3, 0.7]), np.array([0.2, 0.3, 0.5]))
    merged = meas.merged()
    assert merged.locations.tolist() == [0.3, 0.7]
    np.testing.assert_allclose(merged.weights, [0.5, 0.5])


def test_empirical_measure_equal_weights():
    emp = empirical_measure(np.array([0.3, 0.1, 0.3, 0.9]))
    assert emp.locations.tolist() == [0.1, 0.3, 0.9]
    np.testing.assert_allclose(emp.weights, [0.25, 0.5, 0.25])


def test_cell_partition_indexing():
    part = CellPartition((0.25, 0.5))
    assert part.n_cells == 3
    assert part.cell_index(np.array([0.1, 0.25, 0.3, 0.9])).tolist() == [0, 0, 1, 2]


def test_cell_partition_empty_is_single_cell():
    part = CellPartition(())
    assert part.n_cells == 1
    probs = cell_probs(Uniform01(), part)
    np.testing.assert_allclose(probs, [1.0])


def test_cell_probs_uniform_deciles():
    part = CellPartition(tuple(0.1 * i for i in range(1, 10)))
    probs = cell_probs(Uniform01(), part)
    np.testing.assert_allclose(probs, np.full(10, 0.1), atol=1e-12)


def test_cell_probs_atomic_bincount():
    meas = AtomicMeasure(np.array([0.1, 0.6, 0.7]), np.array([0.5, 0.25, 0.25]))
    probs = cell_probs(meas, CellPartition((0.5,)))
    np.testing.assert_allclose(probs, [0.5, 0.5])


def test_seminorm_root_sum_of_squares():
    assert seminorm(np.array([1.0, 0.0]), np.array([0.5, 0.5])) == pytest.approx(
        math.sqrt(0.5)
    )
    with pytest.raises(ValueError):
        seminorm(np.array([1.0]), np.array([0.5, 0.5]))


def test_mix_blends_cell_probabilities():
    part = CellPartition((0.5,))
    delta = AtomicMeasure(np.array([0.25]), np.array([1.0]))
    out = mix(0.5, Uniform01(), delta, part)
    np.testing.assert_allclose(out, [0.75, 0.25])


def test_sampling_respects_seed_and_distribution():
    u = Uniform01().sample(make_stream(SeedSpec(11, 0)), size=50_000)
    again = Uniform01().sample(make_stream(SeedSpec(11, 0)), size=50_000)
    np.testing.assert_array_equal(u, again)
    assert abs(u.mean() - 0.5) < 0.01
    z = StdNormal().sample(make_stream(SeedSpec(11, 1)), size=50_000)
    assert abs(z.mean()) < 0.02 and abs(z.var() - 1.0) < 0.03


def test_ks_one_sample_normal_on_true_normals():
    z = StdNormal().sample(make_stream(SeedSpec(2, 0)), size=5000)
    stat, p = ks_one_sample_normal(z, 0.0, 1.0)
    assert 0.0 < stat < 0.05
    assert p > 0.01


def test_ks_one_sample_degenerate_data_fails_hard():
    stat, p = ks_one_sample_normal(np.zeros(1000), 0.0, 1.0)
    # the empirical CDF jumps from 0 to 1 at zero, half a unit from Phi
    assert stat == pytest.approx(0.5, abs=1e-12)
    assert p < 1e-6


def test_ks_two_sample_same_law_passes():
    a = Uniform01().sample(make_stream(SeedSpec(3, 0)), size=4000)
    b = Uniform01().sample(make_stream(SeedSpec(3, 1)), size=4000)
    stat, p = ks_two_sample(a, b)
    assert p > 0.01


def test_ks_two_sample_detects_shift():
    a = StdNormal().sample(make_stream(SeedSpec(4, 0)), size=4000)
    b = StdNormal().sample(make_stream(SeedSpec(4, 1)), size=4000) + 0.5
    stat, p = ks_two_sample(a, b)
    assert p < 1e-6
