"""
Test cases for Dunkl Operators Module

This module contains pytest test cases to validate the exact polynomial
Dunkl operators and their finite-difference counterparts on weighted grids.
"""

import numpy as np
import pytest

from src.harmonic_analysis.algebra import WeightedGrid, build_root_system
from src.harmonic_analysis.exceptions import DimensionMismatch, GridTooSmall
from src.harmonic_analysis.operators import (
    GridFunction,
    Polynomial,
    TimeGridFunction,
    dunkl_apply_grid,
    dunkl_apply_poly,
    laplacian_grid,
    laplacian_poly,
    operator_L_grid,
    time_derivative,
)


@pytest.fixture
def rank1():
    """Rank one system with k = 1."""
    return build_root_system("rank1", 1.0)


@pytest.fixture
def b2():
    """B2 with two multiplicity classes."""
    return build_root_system("b2", [0.5, 1.5])


class TestPolynomialOperators:
    """Test cases for dunkl_apply_poly and laplacian_poly functions."""

    def test_rank1_monomials(self, rank1):
        """Test T x^n = (n + k(1 - (-1)^n)) x^(n-1) for k = 1."""
        for n in range(1, 6):
            result = dunkl_apply_poly(rank1, [1.0], Polynomial.monomial([n]))
            factor = n + (2.0 if n % 2 == 1 else 0.0)
            assert result.is_close(Polynomial.monomial([n - 1], factor))

    def test_constant_is_annihilated(self, b2):
        """Test T_xi 1 = 0."""
        assert dunkl_apply_poly(b2, [0.3, 0.7], Polynomial.constant(2)).is_zero(1e-12)

    def test_operators_commute(self, b2):
        """Test T_1 T_2 p = T_2 T_1 p on a B2 polynomial."""
        p = Polynomial.monomial([2, 3]) + Polynomial.monomial([1, 1], 2.0) + Polynomial.monomial([4, 0], -0.5)
        e1, e2 = [1.0, 0.0], [0.0, 1.0]
        left = dunkl_apply_poly(b2, e1, dunkl_apply_poly(b2, e2, p))
        right = dunkl_apply_poly(b2, e2, dunkl_apply_poly(b2, e1, p))
        assert left.is_close(right, tol=1e-9)

    def test_laplacian_of_norm_squared(self, rank1, b2):
        """Test Laplacian |x|^2 = 2 times the homogeneous dimension, on both paths."""
        for rs in (rank1, b2):
            expected = Polynomial.constant(rs.dimension, 2.0 * rs.homogeneous_dimension)
            for path in ("iterated", "explicit"):
                assert laplacian_poly(rs, Polynomial.norm_squared(rs.dimension), path).is_close(expected)

    def test_laplacian_paths_agree(self, b2):
        """Test that the iterated and explicit Laplacians coincide on a quartic."""
        p = Polynomial.monomial([3, 1]) + Polynomial.monomial([0, 4], 2.0) + Polynomial.monomial([2, 2], -1.0)
        iterated = laplacian_poly(b2, p, "iterated")
        explicit = laplacian_poly(b2, p, "explicit")
        assert iterated.is_close(explicit, tol=1e-9)

    def test_unknown_path(self, rank1):
        """Test that an unknown Laplacian path is rejected."""
        with pytest.raises(ValueError):
            laplacian_poly(rank1, Polynomial.monomial([2]), "spectral")

    def test_dimension_mismatch(self, rank1):
        """Test that a polynomial of the wrong dimension is rejected."""
        with pytest.raises(DimensionMismatch):
            dunkl_apply_poly(rank1, [1.0], Polynomial.monomial([1, 1]))

    def test_divide_linear(self):
        """Test exact division by a linear form and the remainder of a non-multiple."""
        alpha = np.array([1.0, -1.0])
        product = Polynomial.linear_form(alpha) * (Polynomial.monomial([1, 0]) + Polynomial.monomial([0, 2]))
        quotient, remainder = product.divide_linear(alpha)
        assert remainder < 1e-12
        assert quotient.is_close(Polynomial.monomial([1, 0]) + Polynomial.monomial([0, 2]))
        _, remainder = Polynomial.monomial([0, 2]).divide_linear(alpha)
        assert remainder > 0.5


class TestGridOperators:
    """Test cases for dunkl_apply_grid and laplacian_grid functions."""

    def test_dunkl_of_gaussian(self, rank1):
        """Test T e^(-x^2/2) = -x e^(-x^2/2) for an even function."""
        grid = WeightedGrid.build(rank1, 8.0, 201)
        f = GridFunction.from_callable(grid, lambda p: np.exp(-0.5 * p[:, 0] ** 2))
        result = dunkl_apply_grid(rank1, [1.0], f)
        x = grid.axis
        assert np.max(np.abs(result.values - (-x * np.exp(-0.5 * x ** 2)))[result.valid]) < 1e-3

    def test_dunkl_of_odd_function(self, rank1):
        """Test T(x e^(-x^2/2)) = (1 - x^2 + 2k) e^(-x^2/2), including the origin."""
        grid = WeightedGrid.build(rank1, 8.0, 201)
        f = GridFunction.from_callable(grid, lambda p: p[:, 0] * np.exp(-0.5 * p[:, 0] ** 2))
        result = dunkl_apply_grid(rank1, [1.0], f)
        x = grid.axis
        expected = (3.0 - x ** 2) * np.exp(-0.5 * x ** 2)
        assert np.max(np.abs(result.values - expected)[result.valid]) < 1e-3
        assert result.values[100] == pytest.approx(3.0, abs=1e-3)

    def test_laplacian_of_gaussian(self, rank1):
        """Test Laplacian e^(-|x|^2/2) = (|x|^2 - N) e^(-|x|^2/2)."""
        grid = WeightedGrid.build(rank1, 8.0, 321)
        f = GridFunction.from_callable(grid, lambda p: np.exp(-0.5 * p[:, 0] ** 2))
        result = laplacian_grid(rank1, f)
        x = grid.axis
        expected = (x ** 2 - rank1.homogeneous_dimension) * np.exp(-0.5 * x ** 2)
        assert np.max(np.abs(result.values - expected)[result.valid]) < 1e-3

    def test_laplacian_matches_polynomial(self):
        """Test that the grid Laplacian reproduces the exact one on a low-degree polynomial."""
        rs = build_root_system("z2^N", [0.5, 1.0])
        grid = WeightedGrid.build(rs, 2.0, 17)
        p = Polynomial.monomial([2, 2]) + Polynomial.monomial([3, 1]) + Polynomial.monomial([0, 1], 3.0)
        f = GridFunction(grid, p.evaluate(grid.points))
        result = laplacian_grid(rs, f)
        exact = laplacian_poly(rs, p).evaluate(grid.points).reshape(grid.shape)
        assert np.allclose(result.values[result.valid], exact[result.valid], atol=1e-7)

    def test_boundary_band_invalid(self, rank1):
        """Test that the central4 stencil invalidates two points at each end."""
        grid = WeightedGrid.build(rank1, 4.0, 41)
        result = dunkl_apply_grid(rank1, [1.0], GridFunction.from_callable(grid, lambda p: p[:, 0]))
        assert not result.valid[:2].any() and not result.valid[-2:].any()
        assert result.valid[2:-2].all()

    def test_unknown_scheme(self, rank1):
        """Test that an unknown scheme is rejected."""
        grid = WeightedGrid.build(rank1, 4.0, 41)
        with pytest.raises(ValueError):
            laplacian_grid(rank1, GridFunction.from_callable(grid, lambda p: p[:, 0]), scheme="upwind")

    def test_norms(self, rank1):
        """Test l1, l2 and inner product of grid samples."""
        grid = WeightedGrid.build(rank1, 10.0, 401)
        f = GridFunction.from_callable(grid, lambda p: np.exp(-0.25 * p[:, 0] ** 2))
        assert f.l2_norm() ** 2 == pytest.approx(float(np.real(f.inner(f))))
        assert f.l1_norm() == pytest.approx(float(f.integral()))
        assert (f * 2.0).l1_norm() == pytest.approx(2.0 * f.l1_norm())


class TestTimeOperators:
    """Test cases for time_derivative and operator_L_grid functions."""

    def test_operator_L_on_polynomial(self, rank1):
        """Test L(t^2 + x^2) = 2 + 2N."""
        grid = WeightedGrid.build(rank1, 2.0, 9)
        times = np.linspace(0.0, 1.0, 11)
        u = TimeGridFunction(grid, times, np.add.outer(times ** 2, grid.axis ** 2))
        result = operator_L_grid(rank1, u)
        assert np.allclose(result.values[result.valid], 2.0 + 2.0 * rank1.homogeneous_dimension)
        assert not result.valid[0].any()

    def test_time_derivative(self, rank1):
        """Test d/dt of t^3 on a uniform axis."""
        grid = WeightedGrid.build(rank1, 2.0, 9)
        times = np.linspace(0.0, 1.0, 21)
        u = TimeGridFunction(grid, times, np.multiply.outer(times ** 3, np.ones(9)))
        result = time_derivative(u)
        expected = np.multiply.outer(3.0 * times ** 2, np.ones(9))
        assert np.allclose(result.values[result.valid], expected[result.valid])

    def test_short_time_axis(self, rank1):
        """Test that a time axis shorter than the stencil raises GridTooSmall."""
        grid = WeightedGrid.build(rank1, 2.0, 9)
        times = np.linspace(0.0, 1.0, 3)
        u = TimeGridFunction(grid, times, np.zeros((3, 9)))
        with pytest.raises(GridTooSmall):
            operator_L_grid(rank1, u)

    def test_nonuniform_time_axis(self, rank1):
        """Test that time stencils reject a nonuniform axis."""
        grid = WeightedGrid.build(rank1, 2.0, 9)
        times = np.array([0.0, 0.1, 0.3, 0.6, 1.0, 1.5])
        u = TimeGridFunction(grid, times, np.zeros((6, 9)))
        with pytest.raises(ValueError):
            time_derivative(u)
