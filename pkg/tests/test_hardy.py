"""
Test cases for Hardy Space Module

This module contains pytest test cases to validate the maximal functions,
Riesz transforms, square function, conjugate harmonic systems, the
subharmonicity test, nontangential comparisons and the H^1 norm table.
"""

import math

import numpy as np
import pandas as pd
import pytest
from scipy.special import dawsn

from src.harmonic_analysis.algebra import WeightedGrid, build_root_system
from src.harmonic_analysis.atoms import random_atom
from src.harmonic_analysis.hardy import (
    NORM_COLUMNS,
    NormReport,
    atom_operator_bounds,
    barrier_function,
    classical_reference,
    conjugate_system,
    cr_residual,
    default_suite,
    equivalence_constant,
    h1_norm_table,
    hardy_sup_norm,
    maximal_heat,
    nab_report,
    q_sweep,
    ratio_stability,
    riesz_multiplier,
    riesz_transform,
    square_function,
    subharmonicity_test,
)
from src.harmonic_analysis.operators import GridFunction, operator_L_grid
from src.harmonic_analysis.semigroups import TimeLadder, poisson_ladder
from src.harmonic_analysis.transform import DunklTransformer


@pytest.fixture
def rank1():
    """Rank one system with k = 1."""
    return build_root_system("rank1", 1.0)


@pytest.fixture
def setup(rank1):
    """Grid on [-10, 10] with 160 points and its transformer."""
    grid = WeightedGrid.build(rank1, 10.0, 160)
    return grid, DunklTransformer.build(rank1, grid)


@pytest.fixture
def conjugate(rank1, setup):
    """Conjugate system of e^(-|x|^2) on a uniform ladder with the grid step."""
    grid, tr = setup
    h = grid.spacing
    ladder = TimeLadder.uniform(0.25, 0.25 + 8 * h, 9)
    f = GridFunction.from_callable(grid, lambda p: np.exp(-np.sum(p ** 2, axis=-1)))
    return conjugate_system(rank1, f, ladder, tr)


def _odd_gaussian(grid):
    return GridFunction.from_callable(grid, lambda p: p[:, 0] * np.exp(-0.5 * p[:, 0] ** 2))


class TestRieszTransform:
    """Test cases for riesz_multiplier and riesz_transform functions."""

    def test_multiplier(self):
        """Test -i xi/|xi| with zero at the origin."""
        values = riesz_multiplier(0)(np.array([[0.0], [2.0], [-0.5]]))
        assert np.allclose(values, [0.0, -1j, 1j])

    def test_hilbert_transform_for_k0(self):
        """Test that k = 0 reproduces the Hilbert transform of e^(-x^2) near the origin."""
        rs = build_root_system("rank1", 0.0)
        grid = WeightedGrid.build(rs, 8.0, 256)
        f = GridFunction.from_callable(grid, lambda p: np.exp(-p[:, 0] ** 2))
        result = riesz_transform(rs, f, 0)
        x = grid.axis
        window = np.abs(x) <= 1.0
        oracle = 2.0 / math.sqrt(math.pi) * dawsn(x)
        assert np.max(np.abs(result.values - oracle)[window]) / np.max(np.abs(oracle[window])) < 2e-2

    def test_routes_agree(self, rank1, setup):
        """Test the heat-integral route against the multiplier route."""
        grid, tr = setup
        f = _odd_gaussian(grid)
        multiplier = riesz_transform(rank1, f, 0, transformer=tr)
        integral, tails = riesz_transform(rank1, f, 0, route="integral", transformer=tr, with_tails=True)
        window = integral.valid & (np.abs(grid.axis) <= 3.0)
        scale = np.max(np.abs(multiplier.values[window]))
        assert np.max(np.abs(integral.values - multiplier.values)[window]) / scale < 5e-2
        assert set(tails) == {"lower_tail", "upper_tail", "norm"}

    def test_unknown_route(self, rank1, setup):
        """Test that an unknown route is rejected."""
        grid, tr = setup
        with pytest.raises(ValueError):
            riesz_transform(rank1, _odd_gaussian(grid), 0, route="kernel", transformer=tr)


class TestMaximalAndSquareFunctions:
    """Test cases for maximal_heat and square_function functions."""

    def test_heat_maximal_dominates(self, rank1, setup):
        """Test M_H f >= |f| up to the smallest ladder time."""
        grid, tr = setup
        f = _odd_gaussian(grid)
        maximal = maximal_heat(rank1, f, TimeLadder.geometric(1e-3, 4.0, 12), tr)
        assert np.all(maximal.values >= np.abs(f.values) - 1e-2)

    def test_square_function(self, rank1, setup):
        """Test that S f is finite, nonnegative and not identically zero."""
        grid, tr = setup
        result = square_function(rank1, _odd_gaussian(grid), TimeLadder.geometric(1e-2, 4.0, 10), tr)
        assert np.all(np.isfinite(result.values)) and np.all(result.values >= 0)
        assert result.l1_norm() > 0


class TestConjugateSystem:
    """Test cases for conjugate_system, cr_residual and subharmonicity_test functions."""

    def test_residuals_small(self, conjugate):
        """Test that the Cauchy-Riemann residuals are small relative to the solution."""
        report = cr_residual(conjugate)
        assert report["max_residual"] < 0.2 * report["scale"]
        assert report["harmonic_max"] < 0.2 * report["scale"]

    def test_subharmonic_at_q1(self, conjugate):
        """Test that L|F| stays above the numerical floor and |u_sigma| = |u o sigma|."""
        result = subharmonicity_test(conjugate, 1.0)
        assert result["passed"]
        assert result["points"] > 0
        assert result["u_sigma_defect"] < 1e-10

    def test_invalid_q(self, conjugate):
        """Test that q outside (0, 1] is rejected."""
        for q in (0.0, 1.5):
            with pytest.raises(ValueError):
                subharmonicity_test(conjugate, q)

    def test_q_sweep(self, conjugate):
        """Test one row per q."""
        table, _ = q_sweep(conjugate, (0.5, 1.0))
        assert list(table["q"]) == [0.5, 1.0]

    def test_hardy_sup_norm(self, conjugate):
        """Test that the sup over the ladder is positive and finite."""
        assert 0.0 < hardy_sup_norm(conjugate) < np.inf


class TestBarrierAndNontangential:
    """Test cases for barrier_function and nab_report functions."""

    def test_barrier_is_harmonic(self, rank1):
        """Test L V = 0 for the barrier."""
        grid = WeightedGrid.build(rank1, 4.0, 81)
        V = barrier_function(rank1, grid, np.linspace(0.0, 1.0, 11), [1.0], eps=1.0, bound=1.0)
        residual = operator_L_grid(rank1, V)
        assert np.max(np.abs(residual.values[residual.valid])) < 1e-3

    def test_barrier_unit_vector(self, rank1):
        """Test that a non-unit direction is rejected."""
        grid = WeightedGrid.build(rank1, 4.0, 81)
        with pytest.raises(ValueError):
            barrier_function(rank1, grid, [0.0, 0.5], [2.0], eps=1.0, bound=1.0)

    def test_nab_report(self, rank1, setup):
        """Test u*_a <= (1+a)^lambda u** pointwise and finite aperture constants."""
        grid, tr = setup
        f = GridFunction.from_callable(grid, lambda p: np.exp(-0.5 * p[:, 0] ** 2))
        u = poisson_ladder(rank1, f, TimeLadder.geometric(0.1, 4.0, 8).times, tr)
        report = nab_report(rank1, u)
        assert report["lambda"] == pytest.approx(rank1.homogeneous_dimension + 1.0)
        assert report["pointwise_excess"] <= 1e-12
        assert np.isfinite(report["aperture_constant"])
        assert report["sandwich_lower"] > 0


class TestNormTable:
    """Test cases for default_suite, h1_norm_table and related helpers."""

    @pytest.fixture
    def suite_setup(self, rank1):
        """Default suite on [-8, 8] with 128 points."""
        grid = WeightedGrid.build(rank1, 8.0, 128)
        return grid, default_suite(rank1, grid, seed=0)

    def test_suite_is_mean_zero(self, rank1):
        """Test that every suite member has vanishing integral on a fine grid."""
        suite = default_suite(rank1, WeightedGrid.build(rank1, 6.0, 512), seed=0)
        assert len(suite) == 6
        for f in suite.values():
            assert abs(float(np.real(f.integral()))) < 1e-3 * f.l1_norm()

    def test_norm_table(self, rank1, suite_setup):
        """Test the table layout and a finite equivalence constant."""
        _, suite = suite_setup
        table, summary = h1_norm_table(rank1, suite, TimeLadder.geometric(1e-2, 4.0, 8))
        assert len(table) == 6
        assert set(NORM_COLUMNS) <= set(table.columns)
        assert 1.0 <= summary["equivalence_constant"] < np.inf
        assert ratio_stability(table, table) == 0.0

    def test_pairwise_ratios(self):
        """Test that C* compares every pair of H^1 norms and ignores the L^1 norm."""
        report = NormReport("synthetic", l1=100.0, heat_maximal=1.0, poisson_maximal=4.0, square=1.0,
                            riesz=1.0, hardy_sup=2.0)
        ratios = report.ratios()
        assert len(ratios) == 10
        assert ratios["poisson_maximal/square"] == pytest.approx(4.0)
        assert ratios["poisson_maximal/hardy_sup"] == pytest.approx(2.0)
        assert not any(column.startswith("l1") or column.endswith("/l1") for column in ratios)
        table = pd.DataFrame([{**report.__dict__, **ratios}])
        assert equivalence_constant(table) == pytest.approx(4.0)

    def test_constant_compares_norms_on_both_sides_of_heat_maximal(self):
        """Test that norms at half and twice the heat maximal norm give C* = 4, not 2."""
        report = NormReport("spread", 1.0, 1.0, 0.5, 1.0, 1.0, 2.0)
        table = pd.DataFrame([{**report.__dict__, **report.ratios()}])
        assert equivalence_constant(table) == pytest.approx(4.0)

    def test_empty_suite(self, rank1):
        """Test that an empty suite gives an empty table."""
        table, summary = h1_norm_table(rank1, {})
        assert table.empty
        assert math.isnan(summary["equivalence_constant"])

    def test_classical_reference(self, rank1):
        """Test the classical route for k = 0 and its refusal otherwise."""
        rs = build_root_system("rank1", 0.0)
        grid = WeightedGrid.build(rs, 8.0, 128)
        reference = classical_reference(_odd_gaussian(grid), TimeLadder.geometric(1e-2, 4.0, 8))
        assert reference["riesz"] >= reference["l1"] > 0
        with pytest.raises(ValueError):
            classical_reference(_odd_gaussian(WeightedGrid.build(rank1, 8.0, 128)))

    def test_atom_operator_bounds(self, rank1, setup):
        """Test that the operator norms of one atom are finite and positive."""
        grid = WeightedGrid.build(rank1, 8.0, 256)
        cand = random_atom(rank1, grid, seed=2)
        bounds = atom_operator_bounds(rank1, cand, TimeLadder.geometric(1e-2, 4.0, 8))
        for key in ("riesz_l1", "heat_maximal_l1", "square_tent_l1", "atom_l1"):
            assert 0.0 < bounds[key] < np.inf
        assert bounds["heat_maximal_near_l1"] <= bounds["heat_maximal_l1"] + 1e-12
