import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import kstest

from oracles import two_gamma_density
from phasemoments.kernels import mixing_density, weight_mass


@pytest.mark.parametrize("k", range(1, 9))
def test_weight_mass_is_product_of_gaussian_integrals(k):
    expected = math.prod(math.sqrt(math.pi / j) for j in range(1, k + 1))
    assert weight_mass(k) == pytest.approx(expected, rel=1e-14)
    assert weight_mass(k) == pytest.approx(math.pi ** (k / 2) / math.sqrt(math.factorial(k)), rel=1e-14)


def test_k1_is_a_half_gamma():
    s = np.linspace(0.01, 30, 300)
    dens = mixing_density(1)
    np.testing.assert_allclose(dens.pdf(s), np.exp(-s) / np.sqrt(np.pi * s), rtol=1e-12)


def test_k2_matches_closed_form_convolution():
    s = np.linspace(0, 40, 401)
    np.testing.assert_allclose(mixing_density(2).pdf(s), two_gamma_density(s), rtol=1e-10, atol=1e-300)


def test_k2_against_sampled_sum_of_gammas():
    rng = np.random.default_rng(12345)
    t = rng.standard_normal((1_000_000, 2)) * np.sqrt(1.0 / (2.0 * np.arange(1, 3)))
    stat = kstest((t * t).sum(axis=1), mixing_density(2).cdf).statistic
    assert stat < 0.01


@pytest.mark.parametrize("k", range(1, 13))
def test_unit_mass_and_mean(k):
    dens = mixing_density(k)
    assert dens.mass == pytest.approx(1.0, abs=1e-8)
    assert dens.cdf(dens.s_max) == pytest.approx(1.0, abs=1e-10)
    # E[S] = sum_j 1/(2j)
    mean = quad(lambda s: s * dens.pdf(s), 0, dens.s_max, limit=200, points=[0.1, 1, 5])[0]
    assert mean == pytest.approx(sum(0.5 / j for j in range(1, k + 1)), rel=1e-7)


def test_small_s_limits():
    assert math.isinf(mixing_density(1).pdf(0.0))
    assert mixing_density(2).pdf(0.0) == pytest.approx(math.sqrt(2.0) * 1.0, rel=1e-12)
    assert mixing_density(3).pdf(0.0) == 0.0


def test_tabulated_values_follow_pdf():
    dens = mixing_density(4)
    np.testing.assert_allclose(dens.f_values, dens.pdf(dens.s_grid), rtol=1e-14)


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        mixing_density(0)
    with pytest.raises(ValueError):
        mixing_density(13)
    with pytest.raises(ValueError):
        mixing_density(3, np.linspace(0.1, 48, 10))
    with pytest.raises(ValueError):
        mixing_density(3, np.linspace(0, 5, 10))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.floats(0, 48), st.floats(0, 48))
def test_cdf_monotone_and_pdf_nonnegative(k, a, b):
    dens = mixing_density(k)
    lo, hi = sorted((a, b))
    assert dens.cdf(lo) <= dens.cdf(hi) + 1e-15
    assert dens.pdf(hi) >= 0


@pytest.mark.parametrize("k", range(1, 13))
def test_small_s_power_law(k):
    # f(s) ~ s^(k/2 - 1) near the origin
    s = np.logspace(-8, -6, 20)
    slope = np.polyfit(np.log(s), np.log(mixing_density(k).pdf(s)), 1)[0]
    assert slope == pytest.approx(k / 2 - 1, abs=0.05 * max(abs(k / 2 - 1), 1))
