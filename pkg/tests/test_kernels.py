import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import inverse_z_mean, kernel_from_hermite_moments, kernel_monte_carlo
from phasemoments.kernels import (
    classical_slope,
    kernel_classical,
    kernel_even,
    kernel_odd,
    kernel_values,
)
from phasemoments.kernels.evaluate import SERIES_SWITCH, even_bracket

# Values rebuilt from the integral equation alone (Hermite-moment series, 400 digits)
K1_AT_HALF = 0.15473671991650
K2_HALF_MINUS_ZERO = 0.12629092538974


def test_k1_matches_hermite_moment_reconstruction():
    assert kernel_odd(0, 0.5) == pytest.approx(K1_AT_HALF, abs=1e-10)


def test_k2_difference_matches_hermite_moment_reconstruction():
    v = kernel_even(1, np.array([0.5, 0.0]))
    assert v[0] - v[1] == pytest.approx(K2_HALF_MINUS_ZERO, abs=1e-10)


def test_frozen_reconstruction_values_reproduce_from_oracle():
    assert kernel_from_hermite_moments(1, 0.5, n_terms=30) == pytest.approx(K1_AT_HALF, abs=1e-10)
    assert kernel_from_hermite_moments(2, 0.5, n_terms=30) == pytest.approx(K2_HALF_MINUS_ZERO, abs=1e-10)


def test_inverse_z_mean_k3():
    # -2 sum_n sqrt(6 / ((n+1)(n+2)(n+3))), summed directly to n = 10^6 plus the n^-3/2 tail
    n = np.arange(0, 1_000_000, dtype=float)
    head = np.sum(np.sqrt(6.0 / ((n + 1) * (n + 2) * (n + 3))))
    tail = 2.0 * math.sqrt(6.0) / math.sqrt(1_000_000 + 1.5)
    assert inverse_z_mean(3) == pytest.approx(-2.0 * (head + tail), rel=1e-9)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_one_dimensional_reduction_against_monte_carlo(k):
    xs = (0.3, 1.2, 2.5)
    for i, x in enumerate(xs):
        est, err = kernel_monte_carlo(k, x, 100_000, seed=1000 * k + i)
        assert abs(est - kernel_values(k, x)) < 4 * err


@pytest.mark.parametrize("m", range(0, 5))
def test_odd_kernels_are_odd(m):
    x = np.array([0.3, 1.7, 4.2])
    np.testing.assert_allclose(kernel_odd(m, -x), -kernel_odd(m, x), rtol=0, atol=1e-15)
    assert kernel_odd(m, 0.0) == 0.0


@pytest.mark.parametrize("m", range(1, 5))
def test_even_kernels_are_even(m):
    x = np.array([0.3, 1.7, 4.2])
    np.testing.assert_allclose(kernel_even(m, -x), kernel_even(m, x), rtol=0, atol=1e-15)


def test_classical_limits_far_out():
    x = np.array([9.0, 11.0])
    np.testing.assert_allclose(kernel_odd(0, x), 0.25, atol=1e-4)
    np.testing.assert_allclose(kernel_odd(1, x), -0.75, atol=1e-4)
    np.testing.assert_allclose(kernel_odd(2, x), 1.25, atol=1e-4)
    k2 = kernel_even(1, x)
    assert (k2[1] - k2[0]) / math.log(11 / 9) == pytest.approx(1 / math.pi, rel=1e-3)


def test_classical_slope_signs():
    assert [classical_slope(k) * math.pi for k in (2, 4, 6, 8)] == [1, -2, 3, -4]


def test_kernel_classical_forms():
    assert kernel_classical(5, -3.0) == pytest.approx(-1.25)
    assert kernel_classical(4, math.e, constant=0.5) == pytest.approx(-2 / math.pi + 0.5)
    with pytest.raises(ValueError):
        kernel_classical(2, 0.0)
    with pytest.raises(ValueError):
        kernel_classical(0, 1.0)


def test_argument_validation():
    with pytest.raises(ValueError):
        kernel_values(10, 1.0)
    with pytest.raises(ValueError):
        kernel_values(0, 1.0)
    with pytest.raises(ValueError):
        kernel_values(2, np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        kernel_even(0, 1.0)
    with pytest.raises(ValueError):
        kernel_odd(5, 1.0)


def test_negative_order_uses_same_kernel():
    assert kernel_values(-3, 1.1) == kernel_values(3, 1.1)


@pytest.mark.parametrize("m", range(1, 5))
def test_even_bracket_series_joins_direct_form(m):
    # evaluate just inside and just outside the series region
    x2 = np.array([0.0, 1.0, 9.0, 36.0])
    zs = np.array([-0.5 * SERIES_SWITCH * (1 - 1e-9), -0.5 * SERIES_SWITCH * (1 + 1e-9)])
    inside, outside = even_bracket(m, zs, x2)
    np.testing.assert_allclose(inside, outside, rtol=1e-7, atol=1e-9 * np.max(np.abs(outside)))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.floats(1e-7, 4e-4), st.floats(0, 50))
def test_even_bracket_series_matches_high_precision(m, zabs, x2):
    import mpmath as mp

    z = -zabs
    got = even_bracket(m, np.array([z]), np.array([x2]))[0, 0]
    with mp.workdps(60):
        zz, xx = mp.mpf(z), mp.mpf(x2)
        ref = mp.hyp1f1(m + 1, 0.5, xx * zz / (1 + zz)) / (zz ** m * (1 + zz) ** (m + 1)) - zz ** -m
    assert got == pytest.approx(float(ref), rel=1e-10, abs=1e-12)
