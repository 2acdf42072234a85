import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twoband_ft.entropy import (entropy_deficit, entropy_derivative, entropy_exact,
                                entropy_production, entropy_quadratic, mean_production)

mpmath.mp.dps = 40


def _mp_entropy(a, n_dim):
    a = mpmath.mpf(a)
    half = (1 + a) * mpmath.log(1 + a) / 2 if a > -1 else 0
    half += (1 - a) * mpmath.log(1 - a) / 2 if a < 1 else 0
    return n_dim * (mpmath.log(n_dim) - half)


@pytest.mark.parametrize("n_dim", [2, 400, 6000])
def test_equilibrium_maximum(n_dim):
    assert entropy_exact(0.0, n_dim) == pytest.approx(n_dim * math.log(n_dim), rel=1e-15)
    assert entropy_deficit(0.0, n_dim) == 0.0


def test_single_band_limit():
    assert entropy_exact(1.0, 6000) == pytest.approx(6000 * math.log(3000), rel=1e-14)
    assert entropy_exact(-1.0, 6000) == pytest.approx(6000 * math.log(3000), rel=1e-14)


@pytest.mark.parametrize("a", [0.01, 0.1, 0.2, 0.5, 0.9, 0.999])
def test_against_high_precision(a):
    assert entropy_exact(a, 6000) == pytest.approx(float(_mp_entropy(a, 6000)), rel=1e-14)
    deficit = 6000 * mpmath.log(6000) - _mp_entropy(a, 6000)
    assert entropy_deficit(a, 6000) == pytest.approx(float(deficit), rel=1e-12)


def test_small_deviation_at_a_tenth():
    per_level = math.log(6000) - entropy_exact(0.1, 6000) / 6000
    assert per_level == pytest.approx(0.0050084, abs=1e-7)
    # the quadratic term Na^2/2 = 30 carries all but ~0.17 % of the deficit
    gap = entropy_deficit(0.1, 6000) - 30.0
    assert gap == pytest.approx(6000 * 0.1**4 / 12 * (1 + 0.4 * 0.01), rel=1e-3)


def test_quadratic_form():
    assert entropy_quadratic(0.0, 6000) == 6000 * math.log(6000)
    assert entropy_quadratic(0.2, 6000) == pytest.approx(6000 * math.log(6000) - 120, rel=1e-15)


@pytest.mark.parametrize("a", [0.05, 0.1, 0.15])
def test_quartic_remainder_bound(a):
    # exact - quadratic = N a^4/12 (1 + 2a^2/5 + ...), within 1 % of N a^4/12 for |a| <= 0.15
    diff = entropy_quadratic(a, 2000) - entropy_exact(a, 2000)
    assert 0 < diff <= 1.01 * 2000 * a**4 / 12


@pytest.mark.parametrize("a", [0.05, 0.1, 0.2, 0.3])
def test_quartic_remainder_series(a):
    ratio = (entropy_deficit(a, 2000) - 1000 * a**2) / (2000 * a**4 / 12)
    oracle = (2000 * mpmath.log(2000) - _mp_entropy(a, 2000) - 1000 * mpmath.mpf(a) ** 2) \
        / (2000 * mpmath.mpf(a) ** 4 / 12)
    assert ratio == pytest.approx(float(oracle), rel=1e-6)
    assert ratio == pytest.approx(1 + 0.4 * a**2 + 3 * a**4 / 14, rel=1e-4)


@pytest.mark.parametrize("a", [0.05, 0.1, 0.3])
def test_derivative_matches_finite_differences(a):
    n_dim = 2000
    h = 1e-5
    fd = (entropy_exact(a + h, n_dim) - entropy_exact(a - h, n_dim)) / (2 * h)
    assert entropy_derivative(a, n_dim) == pytest.approx(fd, rel=1e-6)
    exact = mpmath.diff(lambda x: _mp_entropy(x, n_dim), a)
    assert entropy_derivative(a, n_dim) == pytest.approx(float(exact), rel=1e-12)


@given(a=st.floats(-1, 1), n_dim=st.integers(2, 10**6))
def test_symmetry_and_bounds(a, n_dim):
    s = entropy_exact(a, n_dim)
    assert s == entropy_exact(-a, n_dim)
    assert s <= n_dim * math.log(n_dim) * (1 + 1e-15)
    assert entropy_deficit(a, n_dim) >= 0


@given(a=st.floats(1e-6, 0.999), b=st.floats(1e-6, 0.999))
def test_strictly_decreasing_in_magnitude(a, b):
    if abs(a - b) < 1e-9:
        return
    lo, hi = sorted((a, b))
    assert entropy_deficit(hi, 1000) > entropy_deficit(lo, 1000)


@pytest.mark.parametrize("a", [1.0 + 1e-6, -2.0, float("nan")])
def test_domain_error(a):
    with pytest.raises(ValueError):
        entropy_exact(a, 100)


def test_array_input_keeps_shape():
    a = np.linspace(-0.5, 0.5, 12).reshape(3, 4)
    assert entropy_exact(a, 100).shape == (3, 4)
    assert isinstance(entropy_exact(0.3, 100), float)


def test_production_basics():
    assert entropy_production(5.0, 5.0, 2.0) == 0.0
    assert entropy_production(7.0, 5.0, 4.0) == 0.5
    for tau in (0.0, -1.0):
        with pytest.raises(ValueError):
            entropy_production(1.0, 0.0, tau)


def test_production_of_exponential_decay():
    rate, n_dim, a0, tau = 1e-3, 2000, 0.4, 1e-3
    for t in (0.0, 300.0, 900.0):
        a1, a2 = a0 * math.exp(-rate * t), a0 * math.exp(-rate * (t + tau))
        sigma = entropy_production(entropy_quadratic(a2, n_dim), entropy_quadratic(a1, n_dim), tau)
        assert sigma == pytest.approx(rate * n_dim * a0**2 * math.exp(-2 * rate * t), rel=1e-5)


def test_mean_production():
    assert mean_production(0.0, 1e-3, 100) == 0.0
    assert mean_production(0.2, 8.49e-4, 6000) == pytest.approx(0.2038, abs=1e-4)
    # raw width at the operating point with tau = 70
    assert math.sqrt(2 * mean_production(0.2, 8.49e-4, 6000) / 70) == pytest.approx(0.0763, abs=1e-4)
    for a in (0.05, 0.2, 0.7):
        via_entropy = 2 * 1e-3 * (6000 * math.log(6000) - entropy_quadratic(a, 6000))
        assert mean_production(a, 1e-3, 6000) == pytest.approx(via_entropy, rel=1e-9)
