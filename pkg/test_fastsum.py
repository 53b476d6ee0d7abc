#!/usr/bin/env python3
"""Tests for the exact sweep against the quadratic oracle"""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from errors import InputError
from fastsum import WeightedSample, bin_sample, fk_sum, naive_ksum
from kernel_core import PolyExpKernel, default_kernel


def random_kernel(rng, order):
    beta = rng.uniform(0.0, 1.0, order + 1)
    beta[0] += 0.1
    return PolyExpKernel(tuple(beta))


def assert_close_to_oracle(fast, naive, scale, tol=1e-8):
    assert np.max(np.abs(fast - naive)) <= tol * max(np.max(scale), 1e-300)


@pytest.mark.parametrize("instance", range(100))
def test_matches_naive_oracle(instance):
    rng = np.random.default_rng(instance)
    n = int(rng.integers(1, 2001))
    m = int(rng.integers(1, 501))
    kernel = random_kernel(rng, instance % 5)
    x = rng.normal(0.0, 3.0, n)
    w = rng.normal(size=n)
    e = rng.uniform(-12.0, 12.0, m)
    h = float(rng.uniform(0.05, 5.0))

    fast = fk_sum(WeightedSample.create(x, w), h, kernel, x_eval=e, mode="both")
    naive = naive_ksum(WeightedSample.create(x, w), h, kernel, x_eval=e, mode="both")
    # error measured against the sum of absolute contributions; |beta| + |gamma| bounds |K| and |K'|
    bound = PolyExpKernel(tuple(abs(b) + abs(g) for b, g in zip(kernel.coefficients, kernel.gammas)))
    scale = naive_ksum(WeightedSample.create(x, np.abs(w)), h, bound, x_eval=e).ksum
    assert_close_to_oracle(fast.ksum, naive.ksum, scale)
    assert_close_to_oracle(fast.dksum, naive.dksum, scale)


@pytest.mark.parametrize("seed", range(10))
def test_sums_at_sample_points_with_ties(seed):
    rng = np.random.default_rng(seed)
    x = np.round(rng.normal(0.0, 2.0, 500), 1)
    w = rng.uniform(0.5, 2.0, 500)
    kernel = random_kernel(rng, seed % 4)
    sample = WeightedSample.create(x, w)
    fast = fk_sum(sample, 0.7, kernel, mode="both")
    naive = naive_ksum(sample, 0.7, kernel, mode="both")
    scale = np.max(np.abs(naive.ksum)) + np.max(np.abs(naive.dksum))
    assert np.max(np.abs(fast.ksum - naive.ksum)) <= 1e-9 * scale
    assert np.max(np.abs(fast.dksum - naive.dksum)) <= 1e-9 * scale


def test_results_follow_caller_order():
    x = np.array([3.0, -1.0, 2.0, 0.0])
    sums = fk_sum(x, 1.0, x_eval=[2.0, -1.0]).ksum
    naive = naive_ksum(x, 1.0, x_eval=[2.0, -1.0]).ksum
    np.testing.assert_allclose(sums, naive, rtol=1e-12)
    assert sums[0] != sums[1]
    at_points = fk_sum(x, 1.0).ksum
    np.testing.assert_allclose(at_points, naive_ksum(x, 1.0).ksum, rtol=1e-12)


def test_modes():
    x = np.linspace(0, 1, 20)
    assert fk_sum(x, 0.3, mode="sum").dksum is None
    assert fk_sum(x, 0.3, mode="dsum").ksum is None
    both = fk_sum(x, 0.3, mode="both")
    assert both.ksum is not None and both.dksum is not None


def test_single_point_sample():
    sums = fk_sum([1.5], 0.5, x_eval=[1.5, 2.5], mode="both")
    k = default_kernel()
    assert sums.ksum[0] == pytest.approx(k.beta0)
    assert sums.dksum[0] == 0.0
    assert sums.ksum[1] == pytest.approx(0.25 * 3.0 * np.exp(-2.0))


@given(st.floats(-1e3, 1e3), st.integers(0, 10_000))
def test_shift_invariance(c, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=200)
    e = rng.normal(size=50)
    a = fk_sum(x, 0.4, x_eval=e, mode="both")
    b = fk_sum(x + c, 0.4, x_eval=e + c, mode="both")
    np.testing.assert_allclose(b.ksum, a.ksum, rtol=1e-10, atol=1e-10 * np.max(a.ksum))
    np.testing.assert_allclose(b.dksum, a.dksum, rtol=1e-10, atol=1e-10 * np.max(np.abs(a.dksum)))


@given(st.floats(0.01, 100.0), st.integers(0, 10_000))
def test_scale_invariance(s, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=200)
    e = rng.normal(size=50)
    a = fk_sum(x, 0.4, x_eval=e).ksum
    b = fk_sum(s * x, 0.4 * s, x_eval=s * e).ksum
    np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-12 * np.max(a))


@given(st.integers(0, 10_000))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=300)
    w = rng.normal(size=300)
    perm = rng.permutation(300)
    e = rng.normal(size=40)
    a = fk_sum(WeightedSample.create(x, w), 0.3, x_eval=e).ksum
    b = fk_sum(WeightedSample.create(x[perm], w[perm]), 0.3, x_eval=e).ksum
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12 * np.sum(np.abs(w)))


def test_with_weights_reuses_sorting(rng):
    x = rng.normal(size=400)
    w = rng.normal(size=400)
    base = WeightedSample.create(x)
    np.testing.assert_array_equal(base.with_weights(w).original_weights(), w)
    np.testing.assert_allclose(
        fk_sum(base.with_weights(w), 0.5).ksum,
        fk_sum(WeightedSample.create(x, w), 0.5).ksum,
        rtol=1e-12,
    )
    np.testing.assert_array_equal(base.original_values(), x)


def test_bin_sample_preserves_weight_and_mean(rng):
    x = rng.normal(size=1000)
    w = rng.uniform(0.0, 2.0, 1000)
    binned = bin_sample(WeightedSample.create(x, w), 64)
    assert binned.n == 64
    assert binned.weights.sum() == pytest.approx(w.sum(), rel=1e-12)
    assert binned.values @ binned.weights == pytest.approx(x @ w, rel=1e-10, abs=1e-10)


def test_bin_sample_degenerate():
    binned = bin_sample([2.0, 2.0, 2.0], 10)
    assert binned.n == 1
    assert binned.weights[0] == 3.0


def test_binned_sum_approximates_exact(rng):
    x = rng.normal(size=20_000)
    e = np.linspace(-3, 3, 101)
    exact = fk_sum(x, 0.3, x_eval=e).ksum
    approx = fk_sum(x, 0.3, x_eval=e, nbin=2000).ksum
    assert np.max(np.abs(approx - exact)) / np.max(exact) < 1e-3


@pytest.mark.parametrize("h", [0.0, -1.0, np.inf, np.nan])
def test_rejects_bad_bandwidth(h):
    with pytest.raises(InputError):
        fk_sum([0.0, 1.0], h)


def test_rejects_bad_inputs():
    with pytest.raises(InputError):
        fk_sum([0.0, np.nan], 1.0)
    with pytest.raises(InputError):
        fk_sum([], 1.0)
    with pytest.raises(InputError):
        fk_sum([0.0, 1.0], 1.0, mode="integral")
    with pytest.raises(InputError):
        fk_sum([0.0, 1.0], 1.0, x_eval=[np.inf])
    with pytest.raises(InputError):
        WeightedSample.create([0.0, 1.0], [1.0])
    with pytest.raises(InputError):
        bin_sample([0.0, 1.0], 1)
