"""Sequential prediction rule: weights, summaries, block counts, and the
exchangeability of small patterns, checked against exact rationals."""
import math
from fractions import Fraction

import numpy as np
import pytest

from pdp_lab.measures import FiniteSupport, Uniform01
from pdp_lab.py_sampler import PYParams
from pdp_lab.rng import SeedSpec, make_stream
from pdp_lab.urn import (
    EMPTY_SUMMARY,
    PartitionSummary,
    ftilde,
    predictive_weights,
    summarize,
    urn_draw,
    urn_sequence,
)


def test_summarize_first_appearance_order():
    s = summarize(np.array([0.7, 0.3, 0.7, 0.1, 0.3, 0.7]))
    assert s.n == 6
    assert s.blocks == ((0.7, 3), (0.3, 2), (0.1, 1))
    assert s.n_blocks == 3
    np.testing.assert_array_equal(s.counts(), [3, 2, 1])


def test_partition_summary_validation():
    PartitionSummary(3, ((0.5, 2), (0.7, 1)))
    with pytest.raises(ValueError):
        PartitionSummary(3, ((0.5, 2), (0.7, 2)))
    with pytest.raises(ValueError):
        PartitionSummary(2, ((0.5, 2), (0.5, 1)))
    with pytest.raises(ValueError):
        PartitionSummary(1, ((0.5, 0),))


def test_empty_summary():
    assert EMPTY_SUMMARY.n == 0
    assert EMPTY_SUMMARY.n_blocks == 0


def test_predictive_weights_fresh_start():
    new_w, block_w = predictive_weights(EMPTY_SUMMARY, PYParams(0.5, 1.0))
    assert new_w == pytest.approx(1.0)
    assert block_w.size == 0


def test_predictive_weights_closed_form():
    # counts (2, 1) at (0.5, 1): fresh (theta + 2*0.5)/(theta + 3) = 1/2,
    # blocks ((2 - 0.5)/4, (1 - 0.5)/4) = (0.375, 0.125)
    s = summarize(np.array([0.3, 0.3, 0.7]))
    new_w, block_w = predictive_weights(s, PYParams(0.5, 1.0))
    assert new_w == pytest.approx(0.5)
    np.testing.assert_allclose(block_w, [0.375, 0.125])
    assert new_w + block_w.sum() == pytest.approx(1.0)


def test_ftilde_normalized_block_masses():
    s = summarize(np.array([0.3, 0.3, 0.7]))
    ft = ftilde(s, 0.5)
    np.testing.assert_allclose(ft.weights, [0.75, 0.25])
    np.testing.assert_array_equal(ft.locations, [0.3, 0.7])


def test_urn_draw_updates_summary():
    stream = make_stream(SeedSpec(100, 0))
    value, s1 = urn_draw(EMPTY_SUMMARY, PYParams(0.5, 1.0), Uniform01(), stream)
    assert s1.n == 1 and s1.n_blocks == 1
    assert s1.blocks[0][0] == value
    value2, s2 = urn_draw(s1, PYParams(0.5, 1.0), Uniform01(), stream)
    assert s2.n == 2
    assert s2.n_blocks in (1, 2)


def test_urn_draw_rejects_atomic_base():
    with pytest.raises(ValueError):
        urn_draw(
            EMPTY_SUMMARY,
            PYParams(0.5, 1.0),
            FiniteSupport((0.1, 0.2), (0.5, 0.5)),
            make_stream(SeedSpec(0, 0)),
        )


def test_urn_sequence_matches_repeated_draws():
    params = PYParams(0.3, 2.0)
    values, summary = urn_sequence(params, Uniform01(), 25, make_stream(SeedSpec(55, 3)))
    stream = make_stream(SeedSpec(55, 3))
    s = EMPTY_SUMMARY
    singles = []
    for _ in range(25):
        v, s = urn_draw(s, params, Uniform01(), stream)
        singles.append(v)
    np.testing.assert_array_equal(values, np.array(singles))
    assert summary == s


def test_urn_sequence_summary_consistency():
    values, summary = urn_sequence(
        PYParams(0.5, 1.0), Uniform01(), 200, make_stream(SeedSpec(7, 0))
    )
    assert values.size == 200
    assert summary.n == 200
    assert summary.counts().sum() == 200
    assert set(summary.locations().tolist()) == set(np.unique(values).tolist())


def _pattern_probability(pattern, alpha, theta):
    """Exact probability that the first draws realize the given block pattern,
    e.g. (0, 0, 1) means third draw opens a second block."""
    prob = Fraction(1)
    counts = []
    for i, label in enumerate(pattern):
        denom = Fraction(theta) + i
        if label == len(counts):
            prob *= (Fraction(theta) + len(counts) * Fraction(alpha)) / denom
            counts.append(1)
        else:
            prob *= (counts[label] - Fraction(alpha)) / denom
            counts[label] += 1
    return prob


def test_pattern_probabilities_are_exchangeable():
    # 112 and 121 must be equally likely; exact rational arithmetic
    alpha, theta = Fraction(1, 2), Fraction(1)
    p_112 = _pattern_probability((0, 0, 1), alpha, theta)
    p_121 = _pattern_probability((0, 1, 0), alpha, theta)
    assert p_112 == p_121
    # and both equal (1-alpha)(theta+alpha) / ((theta+1)(theta+2))
    expected = (1 - alpha) * (theta + alpha) / ((theta + 1) * (theta + 2))
    assert p_112 == expected


def test_simulated_two_block_pattern_frequency():
    # frequency of {first two equal, third new} vs the exact rational above
    params = PYParams(0.5, 1.0)
    expected = float(
        _pattern_probability((0, 0, 1), Fraction(1, 2), Fraction(1))
    )
    m = 20000
    hits = 0
    for k in range(m):
        values, summary = urn_sequence(params, Uniform01(), 3, make_stream(SeedSpec(311, k)))
        if values[0] == values[1] != values[2]:
            hits += 1
    freq = hits / m
    se = math.sqrt(expected * (1.0 - expected) / m)
    assert abs(freq - expected) < 4.0 * se


def exact_mean_blocks(alpha, theta, n):
    """E[number of blocks] by the one-step recursion on the block-count law."""
    probs = {0: 1.0}
    for i in range(n):
        nxt = {}
        for k, p in probs.items():
            p_new = (theta + k * alpha) / (theta + i)
            nxt[k + 1] = nxt.get(k + 1, 0.0) + p * p_new
            if k > 0:
                nxt[k] = nxt.get(k, 0.0) + p * (1.0 - p_new)
        probs = nxt
    return sum(k * p for k, p in probs.items())


def test_mean_block_count_zero_discount_is_harmonic():
    # at zero discount the mean block count is sum theta/(theta+i)
    theta, n = 1.0, 100
    harmonic = sum(theta / (theta + i) for i in range(n))
    assert exact_mean_blocks(0.0, theta, n) == pytest.approx(harmonic, abs=1e-9)


def test_simulated_mean_blocks_matches_recursion():
    params = PYParams(0.5, 1.0)
    n, m = 40, 3000
    counts = np.empty(m)
    for k in range(m):
        _, summary = urn_sequence(params, Uniform01(), n, make_stream(SeedSpec(412, k)))
        counts[k] = summary.n_blocks
    expected = exact_mean_blocks(0.5, 1.0, n)
    se = counts.std(ddof=1) / math.sqrt(m)
    assert abs(counts.mean() - expected) < 4.0 * se
