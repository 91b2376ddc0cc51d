"""
Atomic Decomposition Module

This module builds the Calderon machinery and the constructive atomic
decomposition of H^1 functions on rank-1 and Z2^N grids.

The reproducing pair: Phi is a radial order-7 smoothstep bump equal to 1 on
B(0, 1/8) and supported in B(0, 1/4); Psi = (-Delta)^p (Phi * Phi), so that

    f = c int Psi_t * (t^2 (-Delta) e^{t^2 Delta} f) dt/t,
    c int_a^b Psi_t * (t^2 (-Delta) e^{t^2 Delta} f) dt/t = Xi_a f - Xi_b f,

with F Xi = eta. Every operator of the pair is a radial spectral multiplier
and runs through the transformer.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import ndimage
from scipy.interpolate import CubicSpline
from scipy.special import comb

from .algebra import RootSystem, WeightedGrid, ball_volume
from .atoms import MIN_POINTS_PER_RADIUS, TENT_APERTURE, AtomCandidate, validate_atom
from .cones import cone_sup
from .exceptions import LadderTooShort, UnsupportedRootSystem
from .hardy import maximal_heat
from .operators import GridFunction, TimeGridFunction
from .semigroups import TimeLadder
from .special import composite_quad
from .transform import DunklTransformer, hankel_transform, normalization_constant

SMOOTHSTEP_ORDER = 7
PHI_INNER = 0.125
PHI_OUTER = 0.25
DEFAULT_S_MAX = 256.0
DEFAULT_S_STEP = 0.25
ETA_RANGE = 8.0
ETA_NODES = 801
LOG_STEP = 0.1
MAXIMAL_APERTURE = 5.0
REGION_APERTURE = 2.0
SUPPORT_FACTOR = 3.5
DEFAULT_J_FLOOR = 1e-6
DEFAULT_ATOM_SLACK = 1.2
DEFAULT_LEAKAGE_TOL = 1e-2


def smoothstep(x: np.ndarray, order: int = SMOOTHSTEP_ORDER) -> np.ndarray:
    """Polynomial smoothstep S_n(x) = x^{n+1} sum_k C(n+k,k) C(2n+1,n-k) (-x)^k, clamped to [0, 1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    total = np.zeros_like(x)
    for k in range(order + 1):
        total += comb(order + k, k) * comb(2 * order + 1, order - k) * (-x) ** k
    return x ** (order + 1) * total


def phi_profile(r: np.ndarray) -> np.ndarray:
    """Radial profile of Phi: 1 on [0, 1/8], smoothstep down to 0 at 1/4."""
    r = np.asarray(r, dtype=float)
    return 1.0 - smoothstep((r - PHI_INNER) / (PHI_OUTER - PHI_INNER))


def heat_generator(t: float, rho: np.ndarray) -> np.ndarray:
    """Multiplier of t^2 (-Delta) e^{t^2 Delta}."""
    s2 = (t * np.asarray(rho)) ** 2
    return s2 * np.exp(-s2)


def default_power(rs: RootSystem) -> int:
    """2 kappa with kappa the smallest integer above N/2, N the homogeneous dimension."""
    return 2 * (int(math.floor(rs.homogeneous_dimension / 2.0)) + 1)


@dataclass
class CalderonPair:
    """
    Spectral tables of Phi, Psi = (-Delta)^power (Phi * Phi) and eta.

    F Phi is tabulated on [0, s_max] by compact Hankel quadrature and
    interpolated with a cubic spline; beyond s_max it is taken as zero.
    """

    rs: RootSystem
    power: int
    ck: float
    s_max: float
    phi_spline: CubicSpline = field(repr=False)
    eta_spline: CubicSpline = field(repr=False)
    constant: float
    dilation: float = 1.0

    @classmethod
    def build(cls, rs: RootSystem, power: Optional[int] = None, s_max: float = DEFAULT_S_MAX,
              s_step: float = DEFAULT_S_STEP) -> "CalderonPair":
        """
        Tabulate F Phi and integrate eta.

        Args:
            rs (RootSystem): Root system (any, only N enters)
            power (int, optional): Exponent p of (-Delta); 2 kappa by default
            s_max (float): Largest tabulated spectral radius
            s_step (float): Table spacing

        Returns:
            CalderonPair: The pair with its constant c
        """
        power = default_power(rs) if power is None else int(power)
        if power < 1:
            raise ValueError(f"The Laplacian power must be positive, got {power}")
        ck = normalization_constant(rs)
        s_nodes = np.arange(0.0, s_max + s_step / 2, s_step)
        panels = 4 + int(s_max / 16)
        values = np.concatenate([
            hankel_transform(rs, phi_profile, chunk, support=(0.0, PHI_INNER, PHI_OUTER), panels=panels)
            for chunk in np.array_split(s_nodes, max(1, s_nodes.size // 256))
        ])
        phi_spline = CubicSpline(s_nodes, values)
        pair = cls(rs=rs, power=power, ck=ck, s_max=float(s_nodes[-1]), phi_spline=phi_spline,
                   eta_spline=phi_spline, constant=1.0)
        pair._integrate_eta()
        logging.info(f"Calderon pair for {rs.name}: power {power}, c = {pair.constant:.10g}")
        return pair

    def _integrate_eta(self) -> None:
        edges = np.linspace(0.0, ETA_RANGE, ETA_NODES)
        nodes, weights = np.polynomial.legendre.leggauss(12)
        half = 0.5 * np.diff(edges)
        points = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * nodes[None, :]
        density = self.psi_hat(points) * points * np.exp(-points ** 2) * self.ck
        panel_integrals = np.sum(density * weights[None, :], axis=1) * half
        tails = np.concatenate([np.cumsum(panel_integrals[::-1])[::-1], [0.0]])
        self.constant = 1.0 / tails[0]
        self.eta_spline = CubicSpline(edges, tails * self.constant)

    def phi_hat(self, s: np.ndarray) -> np.ndarray:
        s = np.abs(np.asarray(s, dtype=float))
        return np.where(s <= self.s_max, self.phi_spline(np.minimum(s, self.s_max)), 0.0)

    def psi_hat(self, s: np.ndarray) -> np.ndarray:
        """F Psi(s) = c_k s^{2 power} (F Phi)^2."""
        s = np.abs(np.asarray(s, dtype=float))
        return self.ck * s ** (2 * self.power) * self.phi_hat(s) ** 2

    def eta(self, s: np.ndarray) -> np.ndarray:
        s = np.abs(np.asarray(s, dtype=float))
        return np.where(s < ETA_RANGE, self.eta_spline(np.minimum(s, ETA_RANGE)), 0.0)

    def psi_multiplier(self, t: float, rho: np.ndarray) -> np.ndarray:
        """Multiplier of f -> Psi_t * f."""
        return self.ck * self.psi_hat(t * np.asarray(rho))

    def phi_multiplier(self, t: float, rho: np.ndarray) -> np.ndarray:
        """Multiplier of f -> Phi_t * f."""
        return self.ck * self.phi_hat(t * np.asarray(rho))

    def xi_multiplier(self, t: float, rho: np.ndarray) -> np.ndarray:
        """Multiplier of f -> Xi_t f."""
        return self.eta(t * np.asarray(rho))

    def phi_constant(self) -> float:
        """Constant c' of f = c' int Psi_t Phi_t f dt/t."""
        edges = np.linspace(0.0, self.s_max, int(self.s_max * 4) + 1)
        integral = composite_quad(lambda s: self.psi_multiplier(1.0, s) * self.phi_multiplier(1.0, s) / s, edges,
                                  order=12)
        return 1.0 / float(integral)

    def describe(self) -> Dict[str, float]:
        return {"power": self.power, "constant": self.constant, "dilation": self.dilation,
                "phi_constant": self.phi_constant(), "s_max": self.s_max}


def _rho(transformer: DunklTransformer) -> np.ndarray:
    return np.linalg.norm(transformer.xi_grid.points, axis=-1).reshape(transformer.xi_grid.shape)


def _rel_l2(approx: GridFunction, reference: GridFunction) -> float:
    scale = reference.l2_norm()
    error = (approx - reference).l2_norm()
    return error / scale if scale > 0 else error


def calderon_ladder(grid: WeightedGrid, transformer: DunklTransformer) -> TimeLadder:
    """Geometric ladder with log step 0.1 from far below the grid scale to past the slowest frequency."""
    rho = _rho(transformer)
    rho_min = float(rho[rho > 0].min())
    t_min = 1e-2 * grid.spacing
    t_max = 8.0 / rho_min
    count = int(math.ceil(math.log(t_max / t_min) / LOG_STEP)) + 1
    return TimeLadder.geometric(t_min, t_max, count)


def calderon_check(rs: RootSystem, f: GridFunction, pair: Optional[CalderonPair] = None,
                   ladder: Optional[TimeLadder] = None, transformer: Optional[DunklTransformer] = None,
                   generator: str = "heat") -> Dict[str, float]:
    """
    Reconstruct f by ladder quadrature of a Calderon reproducing formula.

    Args:
        rs (RootSystem): Root system
        f (GridFunction): Samples
        pair (CalderonPair, optional): Reproducing pair
        ladder (TimeLadder, optional): Ladder (see calderon_ladder)
        transformer (DunklTransformer, optional): Kernel matrices
        generator (str): 'heat' (c int Psi_t t^2(-Delta)e^{t^2 Delta} f dt/t)
            or 'phi' (c' int Psi_t Phi_t f dt/t)

    Returns:
        Dict[str, float]: Relative L^2 error, constant and ladder description
    """
    if generator not in ("heat", "phi"):
        raise ValueError(f"Unknown generator: {generator}")
    pair = pair or CalderonPair.build(rs)
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    ladder = ladder or calderon_ladder(f.grid, transformer)
    rho = _rho(transformer)
    spectral = transformer.forward(f.values)
    constant = pair.constant if generator == "heat" else pair.phi_constant()
    symbol = np.zeros_like(rho)
    for t, omega in zip(ladder.times, ladder.dt_weights):
        second = heat_generator(t, rho) if generator == "heat" else pair.phi_multiplier(t, rho)
        symbol += omega * pair.psi_multiplier(t, rho) * second
    rebuilt = f.with_values(np.real(transformer.inverse(constant * symbol * spectral, check=False)))
    result = {
        "generator": generator,
        "rel_l2": _rel_l2(rebuilt, f),
        "constant": constant,
        "dilation": pair.dilation,
        "power": pair.power,
        "t_min": float(ladder.times[0]),
        "t_max": float(ladder.times[-1]),
        "ladder_size": len(ladder),
    }
    logging.info(f"Calderon reconstruction ({generator}): rel L2 error {result['rel_l2']:.3g}")
    return result


def segment_identity(rs: RootSystem, f: GridFunction, a: float, b: float, pair: Optional[CalderonPair] = None,
                     transformer: Optional[DunklTransformer] = None, panels: int = 40,
                     order: int = 20) -> Dict[str, float]:
    """
    Compare c int_a^b Psi_t * (t^2 (-Delta) e^{t^2 Delta} f) dt/t with Xi_a f - Xi_b f.

    The t-integral runs by composite Gauss quadrature in log t.

    Returns:
        Dict[str, float]: Relative L^2 discrepancy and the norms of both sides
    """
    if not 0 < a < b:
        raise ValueError(f"Need 0 < a < b, got a={a}, b={b}")
    pair = pair or CalderonPair.build(rs)
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    rho = _rho(transformer)
    spectral = transformer.forward(f.values)

    def integrand(u: np.ndarray) -> np.ndarray:
        return np.stack([pair.psi_multiplier(t, rho) * heat_generator(t, rho) for t in np.exp(u)])

    symbol = pair.constant * composite_quad(integrand, np.linspace(math.log(a), math.log(b), panels + 1), order)
    left = f.with_values(np.real(transformer.inverse(symbol * spectral, check=False)))
    right = f.with_values(np.real(transformer.inverse(
        (pair.xi_multiplier(a, rho) - pair.xi_multiplier(b, rho)) * spectral, check=False)))
    result = {"a": a, "b": b, "rel_l2": _rel_l2(left, right), "left_norm": left.l2_norm(),
              "right_norm": right.l2_norm()}
    logging.info(f"Segment identity on [{a}, {b}]: rel L2 {result['rel_l2']:.3g}")
    return result


@dataclass(frozen=True)
class WhitneyBall:
    """Ball B(center, radius / 2) of a Whitney covering; radius is the distance to the complement."""

    center: Tuple[float, ...]
    radius: float


def distance_to_complement(grid: WeightedGrid, mask: np.ndarray) -> np.ndarray:
    """Euclidean distance of every grid point to the nearest point outside `mask`; the grid exterior is outside."""
    padded = np.pad(np.asarray(mask, dtype=bool), 1, constant_values=False)
    dist = ndimage.distance_transform_edt(padded) * grid.spacing
    return dist[tuple(slice(1, -1) for _ in range(grid.dimension))]


def _geometric_toward(start: float, end: float, r_min: float) -> List[WhitneyBall]:
    balls = []
    x = start
    while True:
        x = end - (end - x) / 2.0 if end > x else end + (x - end) / 2.0
        r = abs(end - x)
        if r < r_min:
            return balls
        balls.append(WhitneyBall((x,), r))


def whitney_intervals(grid: WeightedGrid, mask: np.ndarray, r_min: float) -> List[WhitneyBall]:
    """
    Whitney covering of an even open set on the orbit space [0, inf) of rank 1.

    Each maximal interval (a, b) (or [0, b) when it contains the origin) gets
    its midpoint ball and geometric chains toward the finite ends, so that
    the balls B(x, r/2) cover and the balls B(x, r/10) are disjoint.
    Balls with r < r_min are not resolved by the grid and are dropped.
    """
    axis = grid.axis
    h = grid.spacing
    chamber = np.flatnonzero(axis >= -1e-12)
    inside = np.asarray(mask, dtype=bool)[chamber]
    balls: List[WhitneyBall] = []
    start = None
    for pos in range(inside.size + 1):
        if pos < inside.size and inside[pos]:
            if start is None:
                start = pos
            continue
        if start is None:
            continue
        first, last = chamber[start], chamber[pos - 1]
        b = axis[last] + h
        if start == 0:
            if b >= r_min:
                balls.append(WhitneyBall((0.0,), b))
            balls.extend(_geometric_toward(0.0, b, r_min))
        else:
            a = axis[first] - h
            mid, r = (a + b) / 2.0, (b - a) / 2.0
            if r >= r_min:
                balls.append(WhitneyBall((mid,), r))
                balls.extend(_geometric_toward(mid, b, r_min))
                balls.extend(_geometric_toward(mid, a, r_min))
        start = None
    return sorted(balls, key=lambda ball: (-ball.radius, ball.center))


def whitney_greedy(grid: WeightedGrid, mask: np.ndarray, dist: np.ndarray, r_min: float) -> List[WhitneyBall]:
    """
    Greedy Whitney-type covering for Z2^N on the closed positive orthant.

    The uncovered point farthest from the complement becomes the next centre;
    its ball B(x, r/2) in orbit distance is marked covered.
    """
    chamber = np.all(grid.points >= -1e-12, axis=1)
    candidates = np.flatnonzero(chamber & np.asarray(mask).ravel() & (dist.ravel() >= r_min))
    order = candidates[np.argsort(-dist.ravel()[candidates], kind="stable")]
    covered = np.zeros(grid.size, dtype=bool)
    balls = []
    for index in order:
        if covered[index]:
            continue
        center = grid.points[index]
        r = float(dist.ravel()[index])
        covered |= grid.orbit_distances_from(center).ravel() < r / 2.0
        balls.append(WhitneyBall(tuple(float(c) for c in center), r))
    return balls


def whitney_covering(grid: WeightedGrid, mask: np.ndarray, r_min: float) -> List[WhitneyBall]:
    """Whitney covering of a G-invariant grid set on the orbit space."""
    if grid.dimension == 1:
        return whitney_intervals(grid, mask, r_min)
    return whitney_greedy(grid, mask, distance_to_complement(grid, mask), r_min)


def orbit_ball_volume(rs: RootSystem, grid: WeightedGrid, center: Sequence[float], radius: float) -> float:
    """w of the orbit of B(center, radius), by grid sum (ball quadrature when no node falls inside)."""
    inside = grid.orbit_distances_from(center) < radius
    total = float(np.sum(np.where(inside, grid.quad_weights, 0.0)))
    return total if total > 0 else ball_volume(rs, center, radius)


@dataclass
class AtomicDecomposition:
    """Coefficients, atoms (normalized by their measured atom constant) and the run report."""

    lambdas: np.ndarray
    atoms: List[AtomCandidate]
    levels: List[int]
    balls: List[WhitneyBall]
    validations: List[Dict[str, object]]
    report: Dict[str, object]

    def reconstruction(self, grid: WeightedGrid) -> GridFunction:
        total = np.zeros(grid.shape)
        for lam, atom in zip(self.lambdas, self.atoms):
            total += lam * np.real(atom.a.values)
        return GridFunction(grid, total)

    def to_records(self) -> List[Dict[str, object]]:
        return [
            {"j": j, "lambda": float(lam), "center": atom.center.tolist(), "radius": atom.radius,
             "whitney_radius": ball.radius, "M": atom.M, "q": "inf", "validation": validation}
            for j, lam, atom, ball, validation in zip(self.levels, self.lambdas, self.atoms, self.balls,
                                                      self.validations)
        ]

    def atom_frame(self) -> pd.DataFrame:
        """Sampled atom values, one column per atom, with the grid coordinates first."""
        if not self.atoms:
            return pd.DataFrame()
        grid = self.atoms[0].grid
        frame = pd.DataFrame({f"x{d}": grid.points[:, d] for d in range(grid.dimension)})
        for n, atom in enumerate(self.atoms):
            frame[f"atom_{n}"] = np.real(atom.a.values).ravel()
        return frame


def _region_masks(grid: WeightedGrid, times: np.ndarray, tent: np.ndarray, balls: List[WhitneyBall]) -> List[np.ndarray]:
    """Split a tent layer into the regions T_n = T cap (R(Q_n) minus earlier R(Q_i)); orphans go to the nearest Q_n."""
    if not balls:
        return []
    gaps = np.stack([np.maximum(grid.orbit_distances_from(b.center) - b.radius / 2.0, 0.0) for b in balls])
    taken = np.zeros_like(tent)
    regions = []
    for gap in gaps:
        region = tent & (gap[None, ...] < REGION_APERTURE * times.reshape((-1,) + (1,) * grid.dimension)) & ~taken
        taken |= region
        regions.append(region)
    orphans = tent & ~taken
    if np.any(orphans):
        nearest = np.argmin(gaps, axis=0)
        for n in range(len(balls)):
            regions[n] |= orphans & (nearest == n)[None, ...]
    return regions


def atomic_decompose(rs: RootSystem, f: GridFunction, M: int = 1, ladder: Optional[TimeLadder] = None,
                     transformer: Optional[DunklTransformer] = None, pair: Optional[CalderonPair] = None,
                     j_floor: float = DEFAULT_J_FLOOR, slack: float = DEFAULT_ATOM_SLACK,
                     leakage_tol: float = DEFAULT_LEAKAGE_TOL, workers: int = 1) -> AtomicDecomposition:
    """
    Decompose f into (1, inf, M)-atoms through tents over the level sets of the maximal function.

    Steps: G(t) = t^2(-Delta)e^{t^2 Delta} f and Xi_t f on the ladder;
    Mf = sup over |x-y| < 5t of max_sigma(|G| + |Xi_t f|)(t, sigma y);
    Omega_j = {Mf > 2^j}; tents of height d(x, Omega_j^c)/4; Whitney balls
    Q_{n,j}; regions T_{n,j}; lambda_{n,j} = 2^j w(Q_{n,j});
    a_{n,j} = lambda^{-1} c int Psi_t (1_T G) dt/t = Delta^M b_{n,j}.
    Atoms are normalized by their measured atom constant, which is folded
    into lambda.

    Args:
        rs (RootSystem): Rank-1 or Z2^N root system
        f (GridFunction): Samples
        M (int): Number of Laplacians in the atoms
        ladder (TimeLadder, optional): Ladder; geometric with log step 0.1 from h to the tallest tent by default
        transformer (DunklTransformer, optional): Kernel matrices
        pair (CalderonPair, optional): Reproducing pair with power M
        j_floor (float): Lowest level 2^j relative to max Mf
        slack (float): Size slack of the atom validation
        leakage_tol (float): Allowed relative support leakage of the atoms
        workers (int): Threads for the per-atom assembly

    Returns:
        AtomicDecomposition: lambdas, atoms and the reconstruction report

    Raises:
        UnsupportedRootSystem: For root systems other than rank 1 and Z2^N
        LadderTooShort: If the ladder does not reach into the tents
    """
    if not rs.is_product:
        raise UnsupportedRootSystem(f"Atomic decomposition needs a rank-1 or Z2^N root system, not {rs.name}")
    grid = f.grid
    h = grid.spacing
    pair = pair or CalderonPair.build(rs, power=M)
    if pair.power != M:
        raise ValueError(f"Calderon pair has power {pair.power}, decomposition asked for M={M}")
    transformer = transformer or DunklTransformer.build(rs, grid)
    if ladder is None:
        t_end = (grid.extent + h) / TENT_APERTURE
        count = int(math.ceil(math.log(t_end / h) / LOG_STEP)) + 1
        ladder = TimeLadder.geometric(h, t_end, count)
    times = ladder.times
    t_shape = (-1,) + (1,) * grid.dimension

    empty_report = {"atoms": 0, "sum_abs_lambda": 0.0, "rel_l2_resolved": 0.0, "rel_l2_full": 0.0,
                    "tail_fraction": 0.0}
    if f.max_abs() == 0.0:
        logging.info("Atomic decomposition of the zero function is empty")
        return AtomicDecomposition(np.zeros(0), [], [], [], [], empty_report)

    rho = _rho(transformer)
    spectral = transformer.forward(f.values)
    generated = np.stack([np.real(transformer.inverse(heat_generator(t, rho) * spectral, check=False))
                          for t in times])
    smoothed = np.stack([np.real(transformer.inverse(pair.xi_multiplier(t, rho) * spectral, check=False))
                         for t in times])
    size = np.abs(generated) + np.abs(smoothed)
    boldface = size.copy()
    for g in range(rs.order):
        boldface = np.maximum(boldface, np.stack([grid.compose(s, g) for s in size]))
    maximal = cone_sup(TimeGridFunction(grid, times, boldface), MAXIMAL_APERTURE * times)
    top = maximal.max_abs()
    j_max = int(math.floor(math.log2(top)))
    j_min = int(math.ceil(math.log2(j_floor * top)))
    r_min = 2.0 * MIN_POINTS_PER_RADIUS * h / 7.0

    tents = {}
    omega_mass = 0.0
    for j in range(j_min, j_max + 2):
        omega = maximal.values > 2.0 ** j
        omega_mass += 2.0 ** j * float(np.sum(np.where(omega, grid.quad_weights, 0.0))) if j <= j_max else 0.0
        dist = distance_to_complement(grid, omega)
        tents[j] = (dist[None, ...] >= TENT_APERTURE * times.reshape(t_shape)) & omega[None, ...]

    covered = tents[j_min]
    magnitude = np.abs(generated) * grid.quad_weights
    outside = np.sum(np.where(covered, 0.0, magnitude), axis=tuple(range(1, magnitude.ndim)))
    total = np.sum(magnitude, axis=tuple(range(1, magnitude.ndim)))
    uncovered = np.where(total > 0, outside / np.where(total > 0, total, 1.0), 0.0)
    # tents shrink as t grows; the ladder is cut where the lowest tent is empty
    usable = int(np.sum(np.any(covered.reshape(times.size, -1), axis=1)))
    if usable < 2:
        raise LadderTooShort(f"Only {usable} ladder times lie inside the tents (t_min = {times[0]:.3g})")
    cap_times = times[:usable]
    weights = TimeLadder(cap_times).dt_weights
    t_cap = float(cap_times[-1])

    tasks = []
    for j in range(j_max, j_min - 1, -1):
        layer = (tents[j] & ~tents[j + 1])[:usable]
        if not np.any(layer):
            continue
        omega = maximal.values > 2.0 ** j
        balls = whitney_covering(grid, omega, r_min)
        for ball, region in zip(balls, _region_masks(grid, cap_times, layer, balls)):
            if np.any(region):
                tasks.append((j, ball, region))
    logging.info(f"Atomic decomposition: levels {j_min}..{j_max}, {len(tasks)} atoms, t_cap {t_cap:.4g}")

    def assemble(task):
        j, ball, region = task
        lam = 2.0 ** j * orbit_ball_volume(rs, grid, ball.center, ball.radius / 2.0)
        accumulated = np.zeros(rho.shape, dtype=complex)
        for i, t in enumerate(cap_times):
            if not np.any(region[i]):
                continue
            piece = transformer.forward(np.where(region[i], generated[i], 0.0), check=False)
            accumulated += weights[i] * t ** (2 * M) * pair.phi_multiplier(t, rho) ** 2 * piece
        b_hat = (-1.0) ** M * pair.constant / lam * accumulated
        levels = [GridFunction(grid, np.real(transformer.inverse((-rho ** 2) ** level * b_hat, check=False)))
                  for level in range(M + 1)]
        spread = grid.orbit_distances_from(ball.center)
        # supp Psi_t lies in the orbit of B(0, t/2)
        reach = max(float(np.max(np.where(region[i], spread, 0.0))) + cap_times[i] / 2.0
                    for i in range(usable) if np.any(region[i]))
        radius = max(SUPPORT_FACTOR * ball.radius, reach)
        _, raw = validate_atom(rs, AtomCandidate(levels[0], ball.center, radius, math.inf, M, levels=levels),
                               slack, strict=False, leakage_tol=leakage_tol)
        scale = raw["atom_constant"] if raw["atom_constant"] > 0 else 1.0
        normalized = [level * (1.0 / scale) for level in levels]
        atom = AtomCandidate(normalized[0], ball.center, radius, math.inf, M, levels=normalized)
        passed, validation = validate_atom(rs, atom, slack, strict=False, leakage_tol=leakage_tol)
        validation["passed"] = passed
        validation["expanded"] = radius > SUPPORT_FACTOR * ball.radius
        return j, ball, lam * scale, atom, validation

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(assemble, tasks))
    else:
        results = [assemble(task) for task in tasks]

    decomposition = AtomicDecomposition(
        lambdas=np.array([r[2] for r in results]),
        atoms=[r[3] for r in results],
        levels=[r[0] for r in results],
        balls=[r[1] for r in results],
        validations=[r[4] for r in results],
        report={},
    )
    rebuilt = decomposition.reconstruction(grid)
    resolved = f.with_values(f.values - smoothed[usable - 1])
    tail = f.with_values(smoothed[usable - 1])
    heat_max = maximal_heat(rs, f, transformer=transformer)
    sum_lambda = float(np.sum(np.abs(decomposition.lambdas)))
    decomposition.report = {
        "atoms": len(results),
        "levels": [j_min, j_max],
        "t_cap": t_cap,
        "uncovered_fraction": [float(u) for u in uncovered],
        "rel_l2_resolved": _rel_l2(rebuilt, resolved),
        "rel_l2_full": _rel_l2(rebuilt, f),
        "tail_fraction": tail.l2_norm() / f.l2_norm(),
        "sum_abs_lambda": sum_lambda,
        "heat_maximal_l1": heat_max.l1_norm(),
        "lambda_constant": sum_lambda / heat_max.l1_norm() if heat_max.l1_norm() > 0 else float("nan"),
        "level_mass": omega_mass,
        "maximal_l1": maximal.l1_norm(),
        "level_mass_ratio": omega_mass / maximal.l1_norm(),
        "all_atoms_valid": all(v["passed"] for v in decomposition.validations),
        "calderon": pair.describe(),
    }
    logging.info(f"Decomposition: {len(results)} atoms, rel L2 {decomposition.report['rel_l2_full']:.3g} against f, "
                 f"{decomposition.report['rel_l2_resolved']:.3g} against f - Xi_t_cap f")
    return decomposition
