"""
Atoms and Tent Spaces Module

This module validates (1,q,M)-atoms, generates seeded random atoms, and
provides tent-space functions on the ladder: the cone functional norms,
T^1_2 / N-atom validation and the operator

    pi_Psi F = int Psi_t * F(t, .) dt/t.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import RootSystem, Vector, WeightedGrid, ball_volume
from .cones import cone_functional
from .exceptions import GridTooCoarse
from .operators import GridFunction, TimeGridFunction, laplacian_grid
from .semigroups import TimeLadder
from .transform import DunklTransformer

DEFAULT_SLACK = 1.05
MIN_POINTS_PER_RADIUS = 16
BUMP_MARGIN = 0.9
TENT_APERTURE = 4.0
DEFAULT_CENTER_RANGE = (-2.0, 2.0)
DEFAULT_RADIUS_RANGE = (0.5, 1.5)


def smooth_bump(s: np.ndarray) -> np.ndarray:
    """C-infinity bump exp(1 - 1/(1 - s^2)) on |s| < 1, equal to 1 at 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def lq_norm(f: GridFunction, q: float) -> float:
    """L^q(dw) norm on the grid; q = inf gives the max norm."""
    if math.isinf(q):
        return f.max_abs()
    return float(np.sum(np.abs(np.where(f.valid, f.values, 0.0)) ** q * f.grid.quad_weights) ** (1.0 / q))


@dataclass
class AtomCandidate:
    """
    A candidate (1,q,M)-atom a = Delta^M b, localized to the orbit of B(center, radius).

    `levels[l]` holds Delta^l b for l = 0..M; they are computed by grid
    stencils unless supplied (spectrally exact) by the caller.
    """

    b: GridFunction
    center: np.ndarray
    radius: float
    q: float
    M: int
    levels: List[GridFunction] = field(default_factory=list, repr=False)
    scheme: str = "central4"

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if not self.levels:
            self.levels = [self.b]
            for _ in range(self.M):
                self.levels.append(laplacian_grid(self.b.grid.rs, self.levels[-1], self.scheme))

    @property
    def a(self) -> GridFunction:
        return self.levels[self.M]

    @property
    def grid(self) -> WeightedGrid:
        return self.b.grid


def validate_atom(rs: RootSystem, cand: AtomCandidate, slack: float = DEFAULT_SLACK, strict: bool = True,
                  leakage_tol: float = 1e-3, support_tol: float = 1e-10) -> Tuple[bool, Dict[str, object]]:
    """
    Check the three (1,q,M)-atom conditions with multiplicative slack.

    Conditions: a = Delta^M b; supp Delta^l b inside the orbit of the ball
    for l = 0..M; |(r^2 Delta)^l b|_q <= r^{2M} w(B)^{1/q - 1}.

    Args:
        rs (RootSystem): Root system
        cand (AtomCandidate): Candidate
        slack (float): Multiplicative slack on the size condition
        strict (bool): Support must vanish outside the orbit up to `support_tol`
            relative to the max; otherwise up to `leakage_tol` relative L^1 mass
        leakage_tol (float): Allowed relative L^1 leakage when not strict
        support_tol (float): Relative pointwise threshold when strict

    Returns:
        Tuple[bool, Dict[str, object]]: Verdict and the report (per-level
            norms, leakage masses, failures)

    Raises:
        GridTooCoarse: If the grid has fewer than 16 points across the radius
    """
    grid = cand.grid
    if cand.radius / grid.spacing < MIN_POINTS_PER_RADIUS:
        raise GridTooCoarse(f"Radius {cand.radius} spans {cand.radius / grid.spacing:.1f} grid steps; "
                            f"need {MIN_POINTS_PER_RADIUS}")
    r = cand.radius
    volume = ball_volume(rs, cand.center, r)
    bound = r ** (2 * cand.M) * volume ** ((0.0 if math.isinf(cand.q) else 1.0 / cand.q) - 1.0)
    outside = grid.orbit_distances_from(cand.center) > r * (1.0 + 1e-12)
    failures: List[str] = []
    norms, leakage = [], []
    for level, values in enumerate(cand.levels):
        scaled = values * (r ** (2 * level))
        norm = lq_norm(scaled, cand.q)
        norms.append(norm)
        magnitude = np.abs(np.where(values.valid, values.values, 0.0))
        total = float(np.sum(magnitude * grid.quad_weights))
        leak = float(np.sum(np.where(outside, magnitude, 0.0) * grid.quad_weights))
        leakage.append(leak / total if total > 0 else 0.0)
        if norm > slack * bound:
            failures.append(f"size at level {level}: {norm:.4g} > {slack} * {bound:.4g}")
        if strict:
            peak = float(magnitude.max()) if magnitude.size else 0.0
            if peak > 0 and float(np.max(np.where(outside, magnitude, 0.0))) > support_tol * peak:
                failures.append(f"support at level {level}: leakage mass {leak:.3g}")
        elif leakage[-1] > leakage_tol:
            failures.append(f"support at level {level}: relative leakage {leakage[-1]:.3g} > {leakage_tol}")
    report = {
        "center": cand.center.tolist(),
        "radius": r,
        "q": cand.q,
        "M": cand.M,
        "ball_volume": volume,
        "bound": bound,
        "level_norms": norms,
        "leakage": leakage,
        "atom_constant": max(norms) / bound if bound > 0 else float("inf"),
        "failures": failures,
    }
    return len(failures) == 0, report


def random_atom(rs: RootSystem, grid: WeightedGrid, q: float = 2.0, M: int = 1, seed: int = 0,
                center_range: Tuple[float, float] = DEFAULT_CENTER_RANGE,
                radius_range: Tuple[float, float] = DEFAULT_RADIUS_RANGE,
                margin: float = BUMP_MARGIN) -> AtomCandidate:
    """
    Deterministic random atom: b = r^{2M} beta bump((x - y0) / (0.9 r)), with beta set so
    every level satisfies the size condition at `margin` of the bound.

    Args:
        rs (RootSystem): Root system
        grid (WeightedGrid): Grid to sample on
        q (float): Atom exponent
        M (int): Number of Laplacians
        seed (int): Seed for numpy's default_rng
        center_range (Tuple[float, float]): Range of each center coordinate
        radius_range (Tuple[float, float]): Range of the radius
        margin (float): Fraction of the size bound to saturate

    Returns:
        AtomCandidate: The atom candidate
    """
    rng = np.random.default_rng(seed)
    center = rng.uniform(center_range[0], center_range[1], size=rs.dimension)
    radius = float(rng.uniform(radius_range[0], radius_range[1]))
    # stencils reach 2 points per Laplacian; keep Delta^M b inside the ball
    support = min(BUMP_MARGIN * radius, radius - (2 * M + 0.5) * grid.spacing)
    base = GridFunction(grid, smooth_bump(grid.distances_from(center) / support))
    unit = AtomCandidate(base, center, radius, q, M)
    volume = ball_volume(rs, center, radius)
    bound = radius ** (2 * M) * volume ** ((0.0 if math.isinf(q) else 1.0 / q) - 1.0)
    peak = max(lq_norm(level * (radius ** (2 * i)), q) for i, level in enumerate(unit.levels))
    beta = margin * bound / peak
    levels = [level * beta for level in unit.levels]
    logging.debug(f"Random atom seed={seed}: center={center.round(4).tolist()}, r={radius:.4f}")
    return AtomCandidate(levels[0], center, radius, q, M, levels=levels)


def atom_integral(cand: AtomCandidate) -> float:
    """int a dw on the grid."""
    return float(np.real(cand.a.integral()))


class TentGridFunction(TimeGridFunction):
    """F(t, x) sampled on a ladder; integrals in t use dt/t."""

    @property
    def dt_weights(self) -> np.ndarray:
        return TimeLadder(self.times).dt_weights

    def flat_energy(self) -> float:
        """int int |F|^2 dw dt/t."""
        magnitude = np.abs(np.where(self.valid, self.values, 0.0)) ** 2
        per_slice = np.sum(magnitude * self.grid.quad_weights, axis=tuple(range(1, magnitude.ndim)))
        return float(np.sum(self.dt_weights * per_slice))


def tent_norms(F: TimeGridFunction, p: int = 1, aperture: float = 1.0) -> float:
    """
    |F|_{T^p_2} = |A F|_{L^p(dw)} with the discrete cone functional A F.

    Args:
        F (TimeGridFunction): Samples on a ladder
        p (int): 1 or 2
        aperture (float): Cone aperture

    Returns:
        float: The tent-space norm
    """
    if p not in (1, 2):
        raise ValueError(f"Tent norms are provided for p in (1, 2), got {p}")
    area = cone_functional(F, TimeLadder(F.times).dt_weights, aperture)
    return lq_norm(area, float(p))


def tent_comparability(F: TimeGridFunction, aperture: float = 1.0) -> Dict[str, float]:
    """|F|_{T^2_2}^2 against the flat energy int int |F|^2 dw dt/t."""
    tent = tent_norms(F, 2, aperture) ** 2
    flat = TentGridFunction(F.grid, F.times, F.values, F.valid).flat_energy()
    return {"tent_energy": tent, "flat_energy": flat, "ratio": tent / flat if flat > 0 else float("nan")}


def tent_region(grid: WeightedGrid, times: Sequence[float], center: Vector, radius: float,
                aperture: float = TENT_APERTURE) -> np.ndarray:
    """Mask of the discrete tent over B: dist(y, B^c) >= aperture * t, shape (n_t,) + grid.shape."""
    gap = radius - grid.distances_from(center)
    return np.stack([gap >= aperture * t for t in times])


def validate_tent_atom(A: TimeGridFunction, rs: RootSystem, center: Vector, radius: float, mode: str = "T12",
                       slack: float = DEFAULT_SLACK,
                       support_tol: float = 1e-12) -> Tuple[bool, Dict[str, object]]:
    """
    Check a T^1_2-atom (mode 'T12': int int |A|^2 dw dt/t <= w(B)^{-1}) or an
    N-atom (mode 'N': |A|_inf <= w(B)^{-1}); in both modes supp A lies in the tent over B.

    Raises:
        GridTooCoarse: If the ladder does not reach below radius / 4 or the
            ball spans fewer than 4 grid steps
    """
    if mode not in ("T12", "N"):
        raise ValueError(f"Unknown tent atom mode: {mode}")
    grid = A.grid
    if radius / grid.spacing < 4 or A.times[0] > radius / TENT_APERTURE:
        raise GridTooCoarse(f"Ladder and grid do not resolve the tent over a ball of radius {radius}")
    center = np.asarray(center, dtype=float)
    volume = ball_volume(rs, center, radius)
    inside = tent_region(grid, A.times, center, radius)
    magnitude = np.abs(np.where(A.valid, A.values, 0.0))
    failures = []
    peak = float(magnitude.max()) if magnitude.size else 0.0
    outside_peak = float(np.max(np.where(inside, 0.0, magnitude))) if magnitude.size else 0.0
    if peak > 0 and outside_peak > support_tol * peak:
        failures.append(f"support: |A| = {outside_peak:.3g} outside the tent")
    if mode == "T12":
        measured = TentGridFunction(grid, A.times, A.values, A.valid).flat_energy()
    else:
        measured = peak
    bound = 1.0 / volume
    if measured > slack * bound:
        failures.append(f"size ({mode}): {measured:.4g} > {slack} * {bound:.4g}")
    report = {"mode": mode, "measured": measured, "bound": bound, "ball_volume": volume, "failures": failures}
    return len(failures) == 0, report


def tent_indicator_atom(rs: RootSystem, grid: WeightedGrid, times: Sequence[float], center: Vector,
                        radius: float, mode: str = "T12", amplitude: float = 1.0) -> TentGridFunction:
    """Indicator of the tent over B(center, radius/2) scaled to saturate the size bound, times `amplitude`."""
    center = np.asarray(center, dtype=float)
    region = tent_region(grid, times, center, radius / 2.0).astype(float)
    volume = ball_volume(rs, center, radius)
    unit = TentGridFunction(grid, np.asarray(times, dtype=float), region)
    if mode == "T12":
        energy = unit.flat_energy()
        scale = math.sqrt(1.0 / volume / energy) if energy > 0 else 0.0
    else:
        scale = 1.0 / volume
    return TentGridFunction(grid, unit.times, region * scale * amplitude)


def pi_psi(F: TimeGridFunction, psi_multiplier: Callable[[float, np.ndarray], np.ndarray],
           transformer: DunklTransformer, dt_weights: Optional[Sequence[float]] = None) -> GridFunction:
    """
    pi_Psi F = sum_i omega_i Psi_{t_i} * F(t_i, .), where psi_multiplier(t, rho) is the
    spectral multiplier of convolution with Psi_t.
    """
    weights = TimeLadder(F.times).dt_weights if dt_weights is None else np.asarray(dt_weights)
    rho = np.linalg.norm(transformer.xi_grid.points, axis=-1).reshape(transformer.xi_grid.shape)
    total = np.zeros(transformer.xi_grid.shape, dtype=complex)
    for i, t in enumerate(F.times):
        if weights[i] == 0:
            continue
        slice_values = np.where(F.valid[i], F.values[i], 0.0)
        if not np.any(slice_values):
            continue
        total += weights[i] * psi_multiplier(float(t), rho) * transformer.forward(slice_values, check=False)
    return GridFunction(F.grid, np.real(transformer.inverse(total, check=False)))
