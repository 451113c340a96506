import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ican.dependence import (DegenerateSampleError, PairwiseHsic, gamma_null_params,
                             gram_matrix, hsic_biased, hsic_pvalue, median_bandwidth)


def test_median_bandwidth_three_points():
    # squared distances {1, 1, 4}: median 1, so 2 sigma^2 = 1
    assert median_bandwidth([0.0, 1.0, 2.0]) == pytest.approx(np.sqrt(0.5), abs=1e-15)


@pytest.mark.parametrize("c", [0.3, -2.0, 17.0])
def test_median_bandwidth_single_pair(c):
    assert median_bandwidth([0.0, c]) == pytest.approx(abs(c) / np.sqrt(2), rel=1e-14)


def test_median_bandwidth_even_count_averages_central_pair():
    # four points give six squared distances {1, 4, 9, 1, 4, 1} -> sorted 1,1,1,4,4,9
    assert median_bandwidth([0.0, 1.0, 2.0, 3.0]) == pytest.approx(np.sqrt(2.5 / 2))


def test_degenerate_sample_rejected():
    with pytest.raises(DegenerateSampleError, match="degenerate sample"):
        median_bandwidth([0.0, 0.0, 0.0])
    with pytest.raises(DegenerateSampleError):
        hsic_biased(np.ones(8), np.arange(8.0))


def test_gram_matrix_invariants():
    x = np.random.default_rng(0).normal(size=30)
    K, sigma = gram_matrix(x)
    assert sigma == pytest.approx(median_bandwidth(x))
    np.testing.assert_array_equal(K, K.T)
    np.testing.assert_allclose(np.diag(K), 1.0)
    assert np.all((K > 0) & (K <= 1))


def test_hsic_self_dependence_positive():
    x = np.random.default_rng(1).normal(size=8)
    assert hsic_biased(x, x) > 0


def test_hsic_length_mismatch_and_small_n():
    with pytest.raises(ValueError):
        hsic_biased(np.arange(5.0), np.arange(6.0))
    with pytest.raises(ValueError):
        hsic_biased(np.arange(3.0), np.arange(3.0))


samples = arrays(np.float64, 12, elements=st.floats(-50, 50, allow_nan=False)).filter(
    lambda a: np.unique(np.round(a, 6)).size > 6)


@settings(max_examples=60, deadline=None)
@given(samples, samples)
def test_hsic_symmetric(x, y):
    assert hsic_biased(x, y) == hsic_biased(y, x)


@settings(max_examples=60, deadline=None)
@given(samples, samples, st.randoms(use_true_random=False))
def test_hsic_joint_permutation_invariant(x, y, rnd):
    idx = list(range(x.size))
    rnd.shuffle(idx)
    assert hsic_biased(x[idx], y[idx]) == pytest.approx(hsic_biased(x, y), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(samples, samples, st.floats(-100, 100))
def test_hsic_shift_invariant_for_fixed_bandwidth(x, y, c):
    sx, sy = median_bandwidth(x), median_bandwidth(y)
    assert hsic_biased(x + c, y, sx, sy) == pytest.approx(hsic_biased(x, y, sx, sy), abs=1e-10)


def test_pairwise_fast_path_matches_reference():
    rng = np.random.default_rng(3)
    for n in (7, 50, 201):
        a, b, c = rng.normal(size=(3, n))
        ref = hsic_biased(a, b) + hsic_biased(a, c) + hsic_biased(b, c)
        assert PairwiseHsic(n).triple(a, b, c) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_strong_dependence_tiny_pvalue():
    rng = np.random.default_rng(4)
    x = rng.normal(size=100)
    rep = hsic_pvalue(x, x + 1e-3 * rng.normal(size=100))
    assert rep.p_gamma < 1e-3


def test_gamma_needs_six_points():
    with pytest.raises(ValueError, match="perm"):
        hsic_pvalue(np.arange(5.0), np.arange(5.0) ** 2)
    rep = hsic_pvalue(np.arange(5.0), np.arange(5.0) ** 2, method="perm", permutations=50)
    assert 0 < rep.p_perm <= 1


def test_permutation_pvalue_reproducible_and_bounded():
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=(2, 40))
    a = hsic_pvalue(x, y, method="perm", permutations=200, seed=9)
    b = hsic_pvalue(x, y, method="perm", permutations=200, seed=9)
    assert a.p_perm == b.p_perm
    assert 1 / 201 <= a.p_perm <= 1


def test_gamma_null_moments_track_permutation_null():
    rng = np.random.default_rng(6)
    x, y = rng.normal(size=100), rng.uniform(size=100)
    K, _ = gram_matrix(x)
    L, _ = gram_matrix(y)
    shape, scale = gamma_null_params(K, L)
    perm = []
    for _ in range(3000):
        p = rng.permutation(100)
        perm.append(100 * hsic_biased(x, y[p]))
    assert shape * scale == pytest.approx(np.mean(perm), rel=0.05)
    assert shape * scale**2 == pytest.approx(np.var(perm), rel=0.15)


def test_report_pvalue_prefers_permutation():
    rng = np.random.default_rng(8)
    x, y = rng.normal(size=(2, 30))
    rep = hsic_pvalue(x, y, method="perm", permutations=99)
    assert rep.pvalue == rep.p_perm
    assert hsic_pvalue(x, y).pvalue == hsic_pvalue(x, y).p_gamma
