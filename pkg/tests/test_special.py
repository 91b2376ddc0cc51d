"""
Test cases for Special Functions and Quadrature Module

This module contains pytest test cases to validate the Gamma function, the
confluent hypergeometric function and the quadrature rules.
"""

import math

import numpy as np
import pytest
from scipy import special as sp

from src.harmonic_analysis.exceptions import (
    DunklError,
    GammaOverflow,
    NotConverged,
    PoleAtB,
    QuadratureNotConverged,
)
from src.harmonic_analysis.special import (
    adaptive_quad,
    composite_quad,
    gamma_fn,
    gauss_legendre,
    hyp1f1,
    hyp1f1_small,
    normalized_bessel_j,
    semi_infinite_quad,
)


@pytest.fixture
def gamma_sweep():
    """Seeded arguments on (0, 20) for the functional equation."""
    return np.random.default_rng(7).uniform(0.05, 20.0, size=25)


class TestGammaFn:
    """Test cases for gamma_fn function."""

    def test_known_values(self):
        """Test Gamma at 1, 1/2 and 3/2."""
        assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-13)
        assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
        assert gamma_fn(1.5) == pytest.approx(0.8862269254527580, rel=1e-12)

    def test_functional_equation(self, gamma_sweep):
        """Test Gamma(x + 1) = x Gamma(x) on a random sweep."""
        for x in gamma_sweep:
            assert gamma_fn(x + 1.0) == pytest.approx(x * gamma_fn(x), rel=1e-12)

    def test_matches_scipy(self, gamma_sweep):
        """Test agreement with scipy.special.gamma."""
        for x in gamma_sweep:
            assert gamma_fn(x) == pytest.approx(sp.gamma(x), rel=1e-12)

    def test_overflow(self):
        """Test that arguments above 170 raise GammaOverflow."""
        with pytest.raises(GammaOverflow):
            gamma_fn(171.5)
        with pytest.raises(OverflowError):
            gamma_fn(200.0)

    def test_nonpositive_argument(self):
        """Test that x <= 0 is rejected."""
        with pytest.raises(ValueError):
            gamma_fn(0.0)


class TestHyp1f1:
    """Test cases for hyp1f1 function."""

    def test_zero_argument(self):
        """Test 1F1(a, b, 0) = 1."""
        assert hyp1f1(0.7, 2.3, 0.0) == pytest.approx(1.0)

    def test_kummer_branch(self):
        """Test 1F1(1, 3, -2) = (1 + e^-2) / 2."""
        assert hyp1f1(1.0, 3.0, -2.0) == pytest.approx((1.0 + math.exp(-2.0)) / 2.0, rel=1e-10)

    def test_identity_case(self):
        """Test 1F1(b, b, z) = e^z for real and complex z."""
        assert hyp1f1(1.5, 1.5, 3.0) == pytest.approx(math.exp(3.0), rel=1e-10)
        value = hyp1f1(1.5, 1.5, 1.0 + 2.0j)
        assert isinstance(value, complex)
        assert abs(value - np.exp(1.0 + 2.0j)) < 1e-10 * abs(np.exp(1.0 + 2.0j))

    def test_matches_scipy(self):
        """Test agreement with scipy.special.hyp1f1 on real arguments."""
        for a, b, z in [(1.0, 3.0, 4.0), (0.5, 2.0, -7.5), (2.0, 5.0, 12.0)]:
            assert hyp1f1(a, b, z) == pytest.approx(sp.hyp1f1(a, b, z), rel=1e-10)

    def test_kummer_ode_residual(self):
        """Test z F'' + (b - z) F' - a F = 0 by central differences."""
        a, b, step = 0.8, 2.6, 1e-3
        for z in (0.5, 2.0, -3.0):
            f0 = hyp1f1(a, b, z)
            fp = hyp1f1(a, b, z + step)
            fm = hyp1f1(a, b, z - step)
            first = (fp - fm) / (2 * step)
            second = (fp - 2 * f0 + fm) / step ** 2
            assert abs(z * second + (b - z) * first - a * f0) < 1e-5

    def test_pole(self):
        """Test that nonpositive integer b raises PoleAtB."""
        with pytest.raises(PoleAtB):
            hyp1f1(1.0, -2.0, 1.0)
        with pytest.raises(PoleAtB):
            hyp1f1_small(1.0, 0.0, np.array([0.5]))

    def test_large_imaginary_argument(self):
        """Test 1F1(a, 2a, iy) for 10 <= |y| <= 50 against the modified Bessel identity."""
        for a in (0.75, 1.5, 2.0):
            for z in (10j, 20j, 35j, 50j, -30j):
                expected = (math.gamma(a + 0.5) * np.exp(z / 2.0) * (z / 4.0) ** (0.5 - a)
                            * sp.iv(a - 0.5, z / 2.0))
                value = hyp1f1(a, 2.0 * a, z)
                assert abs(value - expected) < 1e-9 * abs(expected)

    def test_large_argument_matches_series_regime(self):
        """Test the integral branch against scipy on real arguments and the series at |z| = 8."""
        assert hyp1f1(1.0, 3.0, 30.0) == pytest.approx(sp.hyp1f1(1.0, 3.0, 30.0), rel=1e-10)
        assert hyp1f1(0.5, 2.5, -20.0) == pytest.approx(sp.hyp1f1(0.5, 2.5, -20.0), rel=1e-10)
        inside = hyp1f1(1.5, 4.0, 7.999j)
        outside = hyp1f1(1.5, 4.0, 8.0j)
        assert abs(inside - outside) < 1e-2 * abs(outside)

    def test_argument_cap(self):
        """Test that |z| > 50 raises NotConverged."""
        with pytest.raises(NotConverged):
            hyp1f1(1.0, 2.0, 60.0)

    def test_vectorized_series(self):
        """Test hyp1f1_small against the scalar series."""
        z = np.linspace(-1.0, 1.0, 9)
        expected = [hyp1f1(1.0, 3.0, float(v)) for v in z]
        assert np.allclose(hyp1f1_small(1.0, 3.0, z), expected, rtol=1e-12)


class TestGaussLegendre:
    """Test cases for gauss_legendre function."""

    def test_exact_for_degree(self):
        """Test that the n-point rule integrates x^(2n-2) and x^(2n-1) exactly."""
        rule = gauss_legendre(6)
        assert rule.integrate(lambda x: x ** 10) == pytest.approx(2.0 / 11.0, abs=1e-12)
        assert abs(rule.integrate(lambda x: x ** 11)) < 1e-12

    def test_scaled_rule(self):
        """Test the rule mapped onto [0, 2]."""
        rule = gauss_legendre(5, 0.0, 2.0)
        assert np.all(rule.weights > 0)
        assert rule.integrate(lambda x: x ** 3) == pytest.approx(4.0, rel=1e-12)

    def test_invalid_order(self):
        """Test that n < 1 is rejected."""
        with pytest.raises(ValueError):
            gauss_legendre(0)


class TestQuadrature:
    """Test cases for composite, adaptive and semi-infinite quadrature."""

    def test_composite_vector_integrand(self):
        """Test composite_quad with an array-valued integrand."""
        value = composite_quad(lambda x: np.stack([x, x ** 2], axis=-1), [0.0, 0.5, 1.0])
        assert np.allclose(value, [0.5, 1.0 / 3.0])

    def test_adaptive_breakpoint(self):
        """Test adaptive_quad on |x|^0.5 with a breakpoint at the kink."""
        value = adaptive_quad(lambda x: np.abs(x) ** 0.5, -1.0, 1.0, tol=1e-7, rtol=1e-7, breakpoints=[0.0])
        assert value == pytest.approx(4.0 / 3.0, rel=1e-5)

    def test_adaptive_not_converged(self):
        """Test that a too small level cap raises with the estimate attached."""
        with pytest.raises(QuadratureNotConverged) as info:
            adaptive_quad(lambda x: np.sin(200.0 * x), 0.0, 10.0, tol=1e-14, rtol=0.0, order=4, max_level=1)
        assert info.value.estimate is not None
        assert isinstance(info.value, DunklError)

    def test_exponential_endpoint_singularity(self):
        """Test int e^-u u^(-1/2) du = sqrt(pi)."""
        value = semi_infinite_quad(lambda u: np.exp(-u) / np.sqrt(u), decay="exponential", tol=1e-10)
        assert value == pytest.approx(math.sqrt(math.pi), rel=1e-8)

    def test_exponential_moment(self):
        """Test int s e^-2s ds = 1/4."""
        value = semi_infinite_quad(lambda s: s * np.exp(-2.0 * s), decay="exponential", tol=1e-12)
        assert value == pytest.approx(0.25, rel=1e-10)

    def test_gaussian_normalization_constant(self):
        """Test 2 int e^(-x^2/2) 2x^2 dx = 2^2.5 Gamma(1.5)."""
        value = 2.0 * semi_infinite_quad(lambda x: 2.0 * x * x * np.exp(-x * x / 2.0), decay="gaussian", tol=1e-12)
        assert value == pytest.approx(2.0 ** 2.5 * gamma_fn(1.5), rel=1e-9)
        assert value == pytest.approx(5.0133, abs=1e-4)

    def test_power_decay(self):
        """Test int (1 + u)^-2 du = 1."""
        value = semi_infinite_quad(lambda u: (1.0 + u) ** -2.0, decay="power", tol=1e-10)
        assert value == pytest.approx(1.0, rel=1e-8)

    def test_unknown_decay(self):
        """Test that an unknown decay type is rejected."""
        with pytest.raises(ValueError):
            semi_infinite_quad(lambda u: np.exp(-u), decay="linear")


class TestNormalizedBessel:
    """Test cases for normalized_bessel_j function."""

    def test_value_at_zero(self):
        """Test j_nu(0) = 1."""
        assert normalized_bessel_j(0.5, np.array([0.0]))[0] == pytest.approx(1.0)

    def test_half_order_is_sinc(self):
        """Test j_{1/2}(z) = sin(z) / z."""
        z = np.linspace(0.5, 10.0, 7)
        assert np.allclose(normalized_bessel_j(0.5, z), np.sin(z) / z, rtol=1e-12)

    def test_minus_half_order_is_cosine(self):
        """Test j_{-1/2}(z) = cos(z)."""
        z = np.linspace(0.0, 6.0, 13)
        assert np.allclose(normalized_bessel_j(-0.5, z), np.cos(z), atol=1e-12)
