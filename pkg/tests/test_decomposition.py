"""
Test cases for Calderon Reproducing Formula and Atomic Decomposition Module

This module contains pytest test cases to validate the reproducing pair,
the ladder reconstruction, the segment identity, Whitney coverings and the
atomic decomposition of a mean-zero function.
"""

import math

import numpy as np
import pytest

from src.harmonic_analysis.algebra import WeightedGrid, ball_volume, build_root_system
from src.harmonic_analysis.decomposition import (
    CalderonPair,
    atomic_decompose,
    calderon_check,
    default_power,
    distance_to_complement,
    heat_generator,
    orbit_ball_volume,
    phi_profile,
    segment_identity,
    smoothstep,
    whitney_covering,
)
from src.harmonic_analysis.exceptions import UnsupportedRootSystem
from src.harmonic_analysis.operators import GridFunction
from src.harmonic_analysis.semigroups import TimeLadder
from src.harmonic_analysis.transform import DunklTransformer


@pytest.fixture(scope="module")
def rank1():
    """Rank one system with k = 1."""
    return build_root_system("rank1", 1.0)


@pytest.fixture(scope="module")
def pair(rank1):
    """Reproducing pair with power 1."""
    return CalderonPair.build(rank1, power=1)


@pytest.fixture(scope="module")
def gaussian_difference(rank1):
    """Mean-zero Gaussian difference on [-8, 8] with 256 points, and its transformer."""
    grid = WeightedGrid.build(rank1, 8.0, 256)
    r2 = grid.axis ** 2
    narrow, wide = np.exp(-r2), np.exp(-0.5 * r2)
    w = grid.quad_weights
    values = narrow / np.sum(narrow * w) - wide / np.sum(wide * w)
    return GridFunction(grid, values), DunklTransformer.build(rank1, grid)


@pytest.fixture(scope="module")
def wide_gaussian_difference(rank1):
    """The same Gaussian difference on [-32, 32] with 512 points, room for tents up to t = 8."""
    grid = WeightedGrid.build(rank1, 32.0, 512)
    r2 = grid.axis ** 2
    narrow, wide = np.exp(-r2), np.exp(-0.5 * r2)
    w = grid.quad_weights
    values = narrow / np.sum(narrow * w) - wide / np.sum(wide * w)
    return GridFunction(grid, values), DunklTransformer.build(rank1, grid)


class TestProfiles:
    """Test cases for smoothstep, phi_profile, heat_generator and default_power functions."""

    def test_smoothstep(self):
        """Test the end values, the midpoint and monotonicity."""
        x = np.linspace(-0.5, 1.5, 41)
        values = smoothstep(x)
        assert values[0] == 0.0 and values[-1] == pytest.approx(1.0)
        assert float(smoothstep(np.array(0.5))) == pytest.approx(0.5)
        assert np.all(np.diff(values) >= -1e-12)

    def test_phi_profile(self):
        """Test Phi = 1 on [0, 1/8] and 0 beyond 1/4."""
        values = phi_profile(np.array([0.0, 0.1, 0.125, 0.25, 0.3]))
        assert np.allclose(values, [1.0, 1.0, 1.0, 0.0, 0.0])

    def test_heat_generator(self):
        """Test s^2 e^(-s^2) with s = t rho."""
        assert float(heat_generator(2.0, np.array(0.0))) == 0.0
        assert float(heat_generator(2.0, np.array(0.5))) == pytest.approx(math.exp(-1.0))

    def test_default_power(self, rank1):
        """Test 2 kappa with kappa the smallest integer above N/2."""
        assert default_power(rank1) == 4
        assert default_power(build_root_system("rank1", 0.0)) == 2


class TestCalderonPair:
    """Test cases for CalderonPair class."""

    def test_eta_endpoints(self, pair):
        """Test eta(0) = 1 and eta = 0 past its range."""
        assert float(pair.eta(np.array(0.0))) == pytest.approx(1.0, rel=1e-10)
        assert float(pair.eta(np.array(9.0))) == 0.0
        assert float(pair.psi_hat(np.array(0.0))) == 0.0

    def test_constants(self, pair):
        """Test that both reproducing constants are positive and finite."""
        described = pair.describe()
        assert described["power"] == 1
        assert 0.0 < described["constant"] < np.inf
        assert 0.0 < described["phi_constant"] < np.inf

    def test_phi_symbol_reproduces(self, pair):
        """Test that c' int Psi_t Phi_t dt/t has symbol 1 at fixed frequencies."""
        ladder = TimeLadder.geometric(1e-4, 1e3, 1000)
        rho = np.array([0.5, 1.0, 3.0])
        symbol = sum(w * pair.psi_multiplier(t, rho) * pair.phi_multiplier(t, rho)
                     for t, w in zip(ladder.times, ladder.dt_weights))
        assert np.allclose(pair.phi_constant() * symbol, 1.0, rtol=1e-3)

    def test_invalid_power(self, rank1):
        """Test that a nonpositive power is rejected."""
        with pytest.raises(ValueError):
            CalderonPair.build(rank1, power=0)


class TestReproducingFormula:
    """Test cases for calderon_check and segment_identity functions."""

    @pytest.mark.parametrize("generator", ["heat", "phi"])
    def test_reconstruction(self, rank1, pair, gaussian_difference, generator):
        """Test that the ladder quadrature reproduces f."""
        f, tr = gaussian_difference
        result = calderon_check(rank1, f, pair, transformer=tr, generator=generator)
        assert result["rel_l2"] < 1e-3
        assert result["generator"] == generator

    def test_unknown_generator(self, rank1, pair, gaussian_difference):
        """Test that an unknown generator is rejected."""
        f, tr = gaussian_difference
        with pytest.raises(ValueError):
            calderon_check(rank1, f, pair, transformer=tr, generator="poisson")

    def test_segment_identity(self, rank1, pair, gaussian_difference):
        """Test c int_a^b Psi_t * G(t) dt/t = Xi_a f - Xi_b f."""
        f, tr = gaussian_difference
        result = segment_identity(rank1, f, 0.1, 1.0, pair, tr)
        assert result["rel_l2"] < 1e-4
        assert result["right_norm"] > 0

    def test_segment_bounds(self, rank1, pair, gaussian_difference):
        """Test that a >= b is rejected."""
        f, tr = gaussian_difference
        with pytest.raises(ValueError):
            segment_identity(rank1, f, 1.0, 0.5, pair, tr)


class TestWhitneyCovering:
    """Test cases for distance_to_complement, whitney_covering and orbit_ball_volume functions."""

    def test_distance_to_complement(self, rank1):
        """Test the distance from the middle of an index interval."""
        grid = WeightedGrid.build(rank1, 4.0, 81)
        mask = np.zeros(grid.shape, dtype=bool)
        mask[40:61] = True
        dist = distance_to_complement(grid, mask)
        assert dist[50] == pytest.approx(11 * grid.spacing)
        assert np.all(dist[~mask] == 0.0)

    def test_rank1_covering(self, rank1):
        """Test that the balls B(x, r/2) cover the set and the balls B(x, r/10) are disjoint."""
        grid = WeightedGrid.build(rank1, 4.0, 401)
        mask = np.abs(grid.axis) < 2.0
        r_min = 0.05
        balls = whitney_covering(grid, mask, r_min)
        centers = np.array([b.center[0] for b in balls])
        radii = np.array([b.radius for b in balls])
        assert radii[0] == pytest.approx(2.0, abs=2 * grid.spacing)
        for y in grid.axis[(grid.axis >= 0) & (grid.axis < 2.0 - 4 * r_min)]:
            assert np.any(np.abs(y - centers) < radii / 2.0)
        for i in range(len(balls)):
            for j in range(i + 1, len(balls)):
                assert abs(centers[i] - centers[j]) >= (radii[i] + radii[j]) / 10.0

    def test_product_covering(self):
        """Test the greedy covering on Z2^2: chamber centres and nonincreasing radii."""
        rs = build_root_system("z2^N", [0.5, 0.5])
        grid = WeightedGrid.build(rs, 3.0, 41)
        mask = (np.sum(grid.points ** 2, axis=1) < 4.0).reshape(grid.shape)
        balls = whitney_covering(grid, mask, 0.2)
        assert balls
        assert all(min(b.center) >= -1e-12 for b in balls)
        radii = [b.radius for b in balls]
        assert radii == sorted(radii, reverse=True)

    def test_orbit_ball_volume(self, rank1):
        """Test that the orbit of a ball away from the mirror doubles its volume."""
        grid = WeightedGrid.build(rank1, 4.0, 801)
        volume = orbit_ball_volume(rank1, grid, [1.0], 0.5)
        assert volume == pytest.approx(2.0 * ball_volume(rank1, [1.0], 0.5), rel=2e-2)
        tiny = orbit_ball_volume(rank1, grid, [1.005], 1e-4)
        assert tiny == pytest.approx(ball_volume(rank1, [1.005], 1e-4))


class TestAtomicDecompose:
    """Test cases for atomic_decompose function."""

    def test_decomposition(self, rank1, pair, gaussian_difference):
        """Test reconstruction, atom validity and a finite coefficient constant."""
        f, tr = gaussian_difference
        result = atomic_decompose(rank1, f, M=1, transformer=tr, pair=pair)
        report = result.report
        assert report["atoms"] > 0
        assert report["rel_l2_resolved"] < 0.05
        assert report["all_atoms_valid"]
        assert np.isfinite(report["lambda_constant"])
        records = result.to_records()
        assert len(records) == report["atoms"]
        assert all(record["q"] == "inf" for record in records)
        assert result.atom_frame().shape[1] == report["atoms"] + 1

    def test_full_reconstruction(self, rank1, pair, wide_gaussian_difference):
        """Test that the atoms rebuild f itself once the ladder climbs to tall tents."""
        f, tr = wide_gaussian_difference
        report = atomic_decompose(rank1, f, M=1, transformer=tr, pair=pair).report
        assert report["t_cap"] > 2.0
        assert report["tail_fraction"] < 0.03
        assert report["rel_l2_full"] < 0.05

    def test_zero_function(self, rank1, pair, gaussian_difference):
        """Test that f = 0 has an empty decomposition."""
        f, tr = gaussian_difference
        result = atomic_decompose(rank1, f * 0.0, M=1, transformer=tr, pair=pair)
        assert result.report["atoms"] == 0
        assert result.atom_frame().empty

    def test_power_mismatch(self, rank1, pair, gaussian_difference):
        """Test that the pair power must equal M."""
        f, tr = gaussian_difference
        with pytest.raises(ValueError):
            atomic_decompose(rank1, f, M=2, transformer=tr, pair=pair)

    def test_unsupported_root_system(self, gaussian_difference):
        """Test that non-product root systems are refused."""
        f, _ = gaussian_difference
        with pytest.raises(UnsupportedRootSystem):
            atomic_decompose(build_root_system("dihedral:3", 0.5), f)
