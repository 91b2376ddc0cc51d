"""
Test cases for Semigroups Module

This module contains pytest test cases to validate the time ladder, the heat
and Poisson kernels and semigroups, the Q_t generators and the kernel bound
sweeps.
"""

import math

import numpy as np
import pytest

from src.harmonic_analysis.algebra import WeightedGrid, build_root_system, weight
from src.harmonic_analysis.exceptions import LadderTooShort
from src.harmonic_analysis.operators import GridFunction
from src.harmonic_analysis.special import adaptive_quad
from src.harmonic_analysis.semigroups import (
    HeatEvaluator,
    PoissonEvaluator,
    TimeLadder,
    heat_apply,
    heat_bound_report,
    heat_kernel,
    phl_check,
    poisson_apply,
    poisson_bound_report,
    poisson_kernel,
    poisson_mass_outside,
    poisson_profile,
    qt_apply,
    qt_energy,
)
from src.harmonic_analysis.transform import DunklTransformer


@pytest.fixture
def rank1():
    """Rank one system with k = 1."""
    return build_root_system("rank1", 1.0)


@pytest.fixture
def euclidean():
    """Rank one system with k = 0."""
    return build_root_system("rank1", 0.0)


@pytest.fixture
def gaussian_setup(rank1):
    """Gaussian samples and a transformer on [-10, 10] with 160 points."""
    grid = WeightedGrid.build(rank1, 10.0, 160)
    f = GridFunction.from_callable(grid, lambda p: np.exp(-0.5 * p[:, 0] ** 2))
    return f, DunklTransformer.build(rank1, grid)


class TestTimeLadder:
    """Test cases for TimeLadder class."""

    def test_geometric_weights(self):
        """Test that dt/t weights sum to log(t_max / t_min)."""
        ladder = TimeLadder.geometric(1e-2, 10.0, 16)
        assert len(ladder) == 16
        assert ladder.dt_weights.sum() == pytest.approx(math.log(1e3))

    def test_refined(self):
        """Test that refinement inserts geometric midpoints."""
        ladder = TimeLadder.geometric(1.0, 4.0, 3).refined()
        assert np.allclose(ladder.times, [1.0, math.sqrt(2.0), 2.0, math.sqrt(8.0), 4.0])

    def test_too_short(self):
        """Test that a single time is rejected."""
        with pytest.raises(LadderTooShort):
            TimeLadder.geometric(1.0, 2.0, 1)

    def test_not_increasing(self):
        """Test that unordered times are rejected."""
        with pytest.raises(ValueError):
            TimeLadder(np.array([1.0, 0.5, 2.0]))


class TestHeatKernel:
    """Test cases for the heat kernel and semigroup."""

    def test_euclidean_reduction(self, euclidean):
        """Test h_t = (4 pi t)^(-1/2) e^(-|x-y|^2/4t) for k = 0."""
        heat = HeatEvaluator.build(euclidean)
        for t, x, y in [(0.1, 0.3, -0.2), (1.0, 1.5, 2.0), (2.0, -3.0, 1.0)]:
            expected = (4 * math.pi * t) ** -0.5 * math.exp(-(x - y) ** 2 / (4 * t))
            assert heat_kernel(euclidean, t, [x], [y], heat) == pytest.approx(expected, rel=1e-10)

    def test_symmetry_and_positivity(self, rank1):
        """Test h_t(x, y) = h_t(y, x) > 0."""
        heat = HeatEvaluator.build(rank1)
        for t, x, y in [(0.2, 0.5, -1.2), (1.0, -2.0, 3.0), (5.0, 0.0, 1.0)]:
            value = heat_kernel(rank1, t, [x], [y], heat)
            assert value > 0
            assert value == pytest.approx(heat_kernel(rank1, t, [y], [x], heat), rel=1e-12)

    def test_normalization(self, rank1):
        """Test int h_t(x, y) dw(y) = 1 by quadrature."""
        heat = HeatEvaluator.build(rank1)
        x = np.array([0.7])
        total = adaptive_quad(lambda y: heat.kernel(0.5, x, y[:, None]) * weight(rank1, y[:, None]),
                              -14.0, 14.0, tol=1e-11, breakpoints=[0.0])
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_nonpositive_time(self, rank1):
        """Test that t <= 0 is rejected."""
        with pytest.raises(ValueError):
            heat_kernel(rank1, 0.0, [0.0], [1.0])

    def test_routes_agree_with_closed_form(self, rank1, gaussian_setup):
        """Test H_t e^(-x^2/2) = (1+2t)^(-N/2) e^(-x^2/(2(1+2t))) on both routes."""
        f, tr = gaussian_setup
        t = 0.5
        x = f.grid.axis
        big_n = rank1.homogeneous_dimension
        expected = (1 + 2 * t) ** (-big_n / 2) * np.exp(-x ** 2 / (2 * (1 + 2 * t)))
        spectral = heat_apply(rank1, t, f, route="spectral", transformer=tr)
        kernel = heat_apply(rank1, t, f, route="kernel")
        assert np.max(np.abs(spectral.values - expected)) < 1e-6
        assert np.max(np.abs(kernel.values - expected)) < 1e-6

    def test_semigroup_law(self, rank1, gaussian_setup):
        """Test H_s H_t f = H_(s+t) f on the spectral route."""
        f, tr = gaussian_setup
        twice = heat_apply(rank1, 0.3, heat_apply(rank1, 0.2, f, route="spectral", transformer=tr),
                           route="spectral", transformer=tr)
        once = heat_apply(rank1, 0.5, f, route="spectral", transformer=tr)
        assert np.max(np.abs(twice.values - once.values)) < 1e-8

    def test_unknown_route(self, rank1, gaussian_setup):
        """Test that an unknown route is rejected."""
        f, _ = gaussian_setup
        with pytest.raises(ValueError):
            heat_apply(rank1, 1.0, f, route="fft")


class TestPoissonKernel:
    """Test cases for the Poisson kernel and semigroup."""

    def test_euclidean_cauchy(self, euclidean):
        """Test p_t(x, y) = t / (pi (t^2 + |x-y|^2)) for k = 0."""
        poisson = PoissonEvaluator.build(euclidean)
        for t, x, y in [(1.0, 0.3, -0.5), (0.2, 1.0, 1.1), (3.0, -2.0, 2.0)]:
            expected = t / (math.pi * (t * t + (x - y) ** 2))
            assert poisson_kernel(euclidean, t, [x], [y], poisson) == pytest.approx(expected, rel=1e-6)

    def test_subordination_matches_profile(self, rank1):
        """Test the subordinated kernel at y = 0 against the closed radial profile."""
        poisson = PoissonEvaluator.build(rank1)
        for t, r in [(0.7, 1.3), (0.1, 0.05), (2.0, 4.0)]:
            value = poisson_kernel(rank1, t, [r], [0.0], poisson)
            assert value == pytest.approx(float(poisson_profile(rank1, t, r)), rel=1e-6)

    def test_normalization_and_mass(self, rank1):
        """Test total mass one and small mass outside B(0, 4) at t = 1e-2."""
        assert abs(poisson_mass_outside(rank1, 1.0, 2.0 ** 22)) < 1e-5
        outside = poisson_mass_outside(rank1, 1e-2, 4.0)
        assert 0.0 < outside < 1e-2

    def test_mass_needs_grid_off_origin(self, rank1):
        """Test that an off-origin center needs a grid."""
        with pytest.raises(ValueError):
            poisson_mass_outside(rank1, 1.0, 1.0, x=[1.0])

    def test_spectral_route(self, rank1, gaussian_setup):
        """Test that P_t smooths the Gaussian and rejects unknown routes."""
        f, tr = gaussian_setup
        result = poisson_apply(rank1, 0.5, f, transformer=tr)
        centre = np.abs(f.grid.axis) < 1.0
        assert result.values.max() < f.values.max()
        assert np.all(result.values[centre] > 0)
        with pytest.raises(ValueError):
            poisson_apply(rank1, 0.5, f, route="fft")


class TestLittlewoodPaley:
    """Test cases for qt_apply, qt_energy and phl_check functions."""

    def test_energy_identity(self, rank1, gaussian_setup):
        """Test int |Q_t f|^2 dt/t = |f|^2 / 4."""
        f, tr = gaussian_setup
        energy, reference = qt_energy(rank1, f, tr)
        assert abs(energy - reference) / reference < 1e-4

    def test_routes_agree(self, rank1, gaussian_setup):
        """Test the multiplier route against -t d/dt P_t f."""
        f, tr = gaussian_setup
        spectral = qt_apply(rank1, 0.8, f, transformer=tr)
        derivative = qt_apply(rank1, 0.8, f, route="d_dt", transformer=tr)
        assert np.max(np.abs(spectral.values - derivative.values)) < 1e-5

    def test_maximal_comparison(self, rank1, gaussian_setup):
        """Test that the maximal comparison constants are finite and positive."""
        f, tr = gaussian_setup
        result = phl_check(rank1, f, TimeLadder.geometric(1e-2, 4.0, 8), tr)
        assert result["points"] > 0
        assert 0.0 < result["poisson_constant"] < np.inf
        assert 0.0 < result["heat_constant"] < np.inf


class TestBoundReports:
    """Test cases for heat_bound_report and poisson_bound_report functions."""

    def test_heat_report(self, rank1):
        """Test the heat sweep quantities and finiteness."""
        sweep = [(0.5, [0.2], [0.4]), (1.0, [1.0], [-2.0]), (2.0, [-0.5], [1.5])]
        table, summary = heat_bound_report(rank1, sweep)
        for name in ("h", "h_lower", "dt_h", "holder", "dunkl_x", "mixed", "near_diagonal"):
            assert name in summary
            assert summary[name]["all_finite"]
        assert summary["h_lower"]["min_ratio"] > 0
        assert {"t", "x0", "y0", "quantity", "value", "envelope", "ratio"} <= set(table.columns)

    def test_poisson_report(self, rank1):
        """Test the Poisson sweep quantities and finiteness."""
        sweep = [(0.5, [0.3], [0.8]), (1.0, [-1.0], [2.0])]
        table, summary = poisson_bound_report(rank1, sweep)
        assert set(summary) == {"p_upper", "p_lower", "dunkl_y", "dt_p"}
        assert all(entry["all_finite"] for entry in summary.values())
        assert summary["p_lower"]["min_ratio"] > 0
        assert len(table) == 8
