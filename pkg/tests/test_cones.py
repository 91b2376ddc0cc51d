"""
Test cases for Discrete Cones Module

This module contains pytest test cases to validate ball footprints, ball
averages, aperture suprema and the cone functional.
"""

import math

import numpy as np
import pytest

from src.harmonic_analysis.algebra import WeightedGrid, ball_volume, build_root_system
from src.harmonic_analysis.cones import (
    aperture_max,
    ball_average,
    ball_sum,
    ball_volumes,
    cone_functional,
    cone_sup,
    disk_footprint,
    hardy_littlewood_sup,
    weighted_sup,
)
from src.harmonic_analysis.operators import TimeGridFunction
from src.harmonic_analysis.semigroups import TimeLadder


@pytest.fixture
def grid():
    """Rank one grid with k = 1 on [-4, 4], spacing 0.1."""
    return WeightedGrid.build(build_root_system("rank1", 1.0), 4.0, 81)


class TestFootprints:
    """Test cases for disk_footprint and ball_sum functions."""

    def test_strict_boundary(self, grid):
        """Test that points at distance exactly r are excluded only in strict mode."""
        radius = 2.0 * grid.spacing
        assert disk_footprint(grid, radius, strict=True).sum() == 3
        assert disk_footprint(grid, radius, strict=False).sum() == 5

    def test_centre_always_included(self, grid):
        """Test that a radius below the spacing keeps the centre."""
        footprint = disk_footprint(grid, 0.1 * grid.spacing)
        assert footprint.shape == (1,) and footprint.all()

    def test_ball_sum_counts(self, grid):
        """Test that summing ones counts the footprint away from the edges."""
        sums = ball_sum(grid, np.ones(grid.shape), 2.5 * grid.spacing)
        assert sums[40] == pytest.approx(5.0)
        assert sums[0] == pytest.approx(3.0)


class TestBallAverages:
    """Test cases for ball_volumes, ball_average and hardy_littlewood_sup functions."""

    def test_volumes_match_exact(self, grid):
        """Test the discrete ball volume against the exact weighted volume at a radius between nodes."""
        # B(1, 1.05) holds the nodes 0, 0.1, ..., 2.0, a midpoint sum for [-0.05, 2.05]
        volumes = ball_volumes(grid, 1.05, strict=False)
        exact = ball_volume(grid.rs, [1.0], 1.05)
        assert volumes[50] == pytest.approx(exact, rel=2e-3)

    def test_volumes_count_closed_balls(self, grid):
        """Test that a radius on a node counts both boundary nodes with full weight."""
        volumes = ball_volumes(grid, 1.0, strict=False)
        nodes = np.abs(grid.axis - 1.0) <= 1.0 + 1e-9
        assert volumes[50] == pytest.approx(float(np.sum(grid.quad_weights[nodes])))
        assert volumes[50] > ball_volume(grid.rs, [1.0], 1.0)

    def test_average_of_constant(self, grid):
        """Test that averaging a constant returns the constant."""
        averages = ball_average(grid, np.full(grid.shape, 3.0), 0.5)
        assert np.allclose(averages, 3.0)

    def test_maximal_dominates(self, grid):
        """Test M f >= |f| and M f > 0 away from a compactly supported f."""
        values = np.where(np.abs(grid.axis - 1.0) < 0.3, -2.0, 0.0)
        maximal = hardy_littlewood_sup(grid, values)
        assert np.all(maximal >= np.abs(values) - 1e-12)
        assert maximal[10] > 0


class TestConeSuprema:
    """Test cases for aperture_max, cone_sup and weighted_sup functions."""

    def test_aperture_max_spreads_spike(self, grid):
        """Test that a spike spreads over the open aperture."""
        values = np.zeros(grid.shape)
        values[40] = 1.0
        spread = aperture_max(grid, values, 2.5 * grid.spacing)
        assert spread[38:43].tolist() == [1.0] * 5
        assert spread[37] == 0.0 and spread[43] == 0.0

    def test_cone_sup_uses_slice_radii(self, grid):
        """Test that each slice uses its own radius."""
        values = np.zeros((2,) + grid.shape)
        values[0, 40] = 2.0
        values[1, 40] = 1.0
        u = TimeGridFunction(grid, np.array([0.1, 1.0]), values)
        result = cone_sup(u, [0.5 * grid.spacing, 10.5 * grid.spacing])
        assert result.values[40] == 2.0
        assert result.values[45] == 1.0
        assert result.values[55] == 0.0

    def test_weighted_sup_of_spike(self, grid):
        """Test sup_y |u(t, y)| (t / (t + |x - y|))^lam for a single spike."""
        values = np.zeros((1,) + grid.shape)
        values[0, 40] = 1.0
        u = TimeGridFunction(grid, np.array([1.0]), values)
        result = weighted_sup(u, lam=1.0, chunk=16)
        expected = 1.0 / (1.0 + np.abs(grid.axis))
        assert np.allclose(result.values, expected)


class TestConeFunctional:
    """Test cases for cone_functional function."""

    def test_constant_slices(self, grid):
        """Test A u = c sqrt(log(t_max / t_min)) for u = c."""
        ladder = TimeLadder.geometric(0.1, 1.0, 9)
        values = np.full((len(ladder),) + grid.shape, 2.0)
        u = TimeGridFunction(grid, ladder.times, values)
        result = cone_functional(u, ladder.dt_weights)
        assert np.allclose(result.values, 2.0 * math.sqrt(math.log(10.0)))
