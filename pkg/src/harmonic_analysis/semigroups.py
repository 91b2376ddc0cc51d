"""
Semigroups Module

This module provides the heat kernel and semigroup, the Poisson kernel and
semigroup obtained by subordination, the Littlewood-Paley generators
Q_t = t sqrt(-Delta) e^{-t sqrt(-Delta)} and t^2 Delta e^{t^2 Delta}, and the
bound-verification sweeps for heat and Poisson kernels.

Every semigroup application has a kernel-side route and a spectral route so
that the two can be cross-validated.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .algebra import RootSystem, Vector, WeightedGrid, ball_volume, orbit_distance
from .cones import cone_sup, hardy_littlewood_sup
from .exceptions import LadderTooShort
from .kernel import KernelEvaluator
from .operators import GridFunction, TimeGridFunction
from .special import adaptive_quad, composite_quad, gamma_fn
from .transform import DunklTransformer, normalization_constant, sphere_constant, spectral_multiplier_apply

DEFAULT_LADDER = {"t_min": 1e-3, "t_max": 10.0, "count": 24}
SUBORDINATION_CUTOFF = math.sqrt(math.log(1e12))
FIT_CANDIDATES = (0.05, 0.1, 0.125, 0.15, 0.2, 0.25)
KERNEL_CHUNK = 256
ROUTES = {
    "heat": ("kernel", "spectral"),
    "poisson": ("spectral", "kernel"),
    "qt": ("spectral", "d_dt"),
}


@dataclass(frozen=True)
class TimeLadder:
    """Increasing times with trapezoid weights for dt/t in log t."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.size < 2:
            raise LadderTooShort(f"A time ladder needs at least 2 times, got {times.size}")
        if np.any(times <= 0) or np.any(np.diff(times) <= 0):
            raise ValueError("Ladder times must be positive and increasing")
        object.__setattr__(self, "times", times)

    @classmethod
    def geometric(cls, t_min: float = DEFAULT_LADDER["t_min"], t_max: float = DEFAULT_LADDER["t_max"],
                  count: int = DEFAULT_LADDER["count"]) -> "TimeLadder":
        if count < 2:
            raise LadderTooShort(f"A time ladder needs at least 2 times, got {count}")
        return cls(np.geomspace(t_min, t_max, count))

    @classmethod
    def uniform(cls, t_min: float, t_max: float, count: int) -> "TimeLadder":
        if count < 2:
            raise LadderTooShort(f"A time ladder needs at least 2 times, got {count}")
        return cls(np.linspace(t_min, t_max, count))

    @property
    def dt_weights(self) -> np.ndarray:
        """Trapezoid weights of int g(t) dt/t in the variable log t."""
        u = np.log(self.times)
        weights = np.zeros_like(u)
        steps = np.diff(u)
        weights[:-1] += steps / 2.0
        weights[1:] += steps / 2.0
        return weights

    def refined(self) -> "TimeLadder":
        """Insert the geometric midpoint between neighbours."""
        mids = np.sqrt(self.times[:-1] * self.times[1:])
        return TimeLadder(np.sort(np.concatenate([self.times, mids])))

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass
class HeatEvaluator:
    """
    h_t(x,y) = c_k^{-1} (2t)^{-N/2} e^{-(|x|^2+|y|^2)/4t} E(x/sqrt(2t), y/sqrt(2t)), N homogeneous.

    Values are assembled in log form from the scaled kernel, so no
    intermediate overflows.
    """

    rs: RootSystem
    evaluator: KernelEvaluator
    ladder: TimeLadder
    ck: float

    @classmethod
    def build(cls, rs: RootSystem, evaluator: Optional[KernelEvaluator] = None,
              ladder: Optional[TimeLadder] = None) -> "HeatEvaluator":
        return cls(rs=rs, evaluator=evaluator or KernelEvaluator.for_root_system(rs),
                   ladder=ladder or TimeLadder.geometric(), ck=normalization_constant(rs))

    def log_kernel(self, t, x: Vector, y: Vector) -> np.ndarray:
        """log h_t(x, y); t broadcasts against the leading shape of x and y."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        scale = 1.0 / np.sqrt(2.0 * np.expand_dims(t, -1))
        big_n = self.rs.homogeneous_dimension
        return (-math.log(self.ck) - 0.5 * big_n * np.log(2.0 * t)
                - (np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1)) / (4.0 * t)
                + self.evaluator.log_kernel(x * scale, y * scale))

    def kernel(self, t, x: Vector, y: Vector) -> np.ndarray:
        return np.exp(self.log_kernel(t, x, y))

    def matrix(self, t: float, grid: WeightedGrid) -> np.ndarray:
        """h_t(x_i, x_j) for all grid point pairs."""
        points = grid.points
        rows = [self.kernel(t, points[start:start + KERNEL_CHUNK, None, :], points[None, :, :])
                for start in range(0, grid.size, KERNEL_CHUNK)]
        return np.vstack(rows)


def heat_kernel(rs: RootSystem, t: float, x: Vector, y: Vector, heat: Optional[HeatEvaluator] = None) -> float:
    """
    Heat kernel h_t(x, y).

    Args:
        rs (RootSystem): Root system
        t (float): Time, t > 0
        x (Vector): First point
        y (Vector): Second point
        heat (HeatEvaluator, optional): Prebuilt evaluator

    Returns:
        float: h_t(x, y) > 0
    """
    if t <= 0:
        raise ValueError(f"Heat time must be positive, got {t}")
    heat = heat or HeatEvaluator.build(rs)
    return float(heat.kernel(t, x, y))


def heat_apply(rs: RootSystem, t: float, f: GridFunction, route: str = "kernel",
               heat: Optional[HeatEvaluator] = None,
               transformer: Optional[DunklTransformer] = None) -> GridFunction:
    """
    H_t f = int h_t(., y) f(y) dw(y) (kernel route) or F^{-1}(e^{-t|xi|^2} F f) (spectral route).

    Args:
        rs (RootSystem): Root system
        t (float): Time
        f (GridFunction): Samples
        route (str): 'kernel' or 'spectral'
        heat (HeatEvaluator, optional): Evaluator for the kernel route
        transformer (DunklTransformer, optional): Kernel matrices for the spectral route

    Returns:
        GridFunction: H_t f
    """
    if route == "spectral":
        return spectral_multiplier_apply(f, lambda xi: np.exp(-t * np.sum(xi * xi, axis=-1)), transformer)
    if route != "kernel":
        raise ValueError(f"Unknown heat route: {route}. Available routes: {list(ROUTES['heat'])}")
    heat = heat or HeatEvaluator.build(rs)
    weighted = (f.values * f.grid.quad_weights).ravel()
    return f.with_values((heat.matrix(t, f.grid) @ weighted).reshape(f.grid.shape))


@dataclass
class PoissonEvaluator:
    """p_t(x,y) = (2/sqrt(pi)) int_0^V e^{-v^2} h_{t^2/4v^2}(x,y) dv, with e^{-V^2} = 1e-12."""

    heat: HeatEvaluator
    cutoff: float = SUBORDINATION_CUTOFF
    tol: float = 1e-13

    @classmethod
    def build(cls, rs: RootSystem, heat: Optional[HeatEvaluator] = None) -> "PoissonEvaluator":
        return cls(heat=heat or HeatEvaluator.build(rs))

    @property
    def rs(self) -> RootSystem:
        return self.heat.rs

    def kernel(self, t: float, x: Vector, y: Vector) -> np.ndarray:
        """Subordinated Poisson kernel for broadcastable point arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        pair_shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        xf = np.broadcast_to(x, pair_shape + x.shape[-1:]).reshape(-1, x.shape[-1])
        yf = np.broadcast_to(y, pair_shape + y.shape[-1:]).reshape(-1, y.shape[-1])

        def integrand(v: np.ndarray) -> np.ndarray:
            v = np.asarray(v, dtype=float)
            times = (t * t / (4.0 * v * v))[:, None]
            return (2.0 / math.sqrt(math.pi)) * np.exp(-(v * v)[:, None] + self.heat.log_kernel(times, xf, yf))

        breakpoints = self.cutoff * 2.0 ** -np.arange(1, 24, dtype=float)
        value = adaptive_quad(integrand, 0.0, self.cutoff, tol=self.tol, rtol=1e-11,
                              breakpoints=breakpoints, order=16, max_level=8)
        return np.asarray(value).reshape(pair_shape)

    def matrix(self, t: float, grid: WeightedGrid) -> np.ndarray:
        points = grid.points
        rows = [self.kernel(t, points[start:start + KERNEL_CHUNK, None, :], points[None, :, :])
                for start in range(0, grid.size, KERNEL_CHUNK)]
        return np.vstack(rows)


def poisson_constant(rs: RootSystem) -> float:
    """c'_k = 2^{N/2} Gamma((N+1)/2) / (sqrt(pi) c_k), N homogeneous."""
    big_n = rs.homogeneous_dimension
    return 2.0 ** (big_n / 2.0) * gamma_fn((big_n + 1.0) / 2.0) / (math.sqrt(math.pi) * normalization_constant(rs))


def poisson_profile(rs: RootSystem, t: float, r) -> np.ndarray:
    """Closed radial form p_t(x, 0) = c'_k t (t^2 + |x|^2)^{-(N+1)/2}."""
    r = np.asarray(r, dtype=float)
    return poisson_constant(rs) * t * (t * t + r * r) ** (-(rs.homogeneous_dimension + 1.0) / 2.0)


def poisson_kernel(rs: RootSystem, t: float, x: Vector, y: Vector,
                   poisson: Optional[PoissonEvaluator] = None) -> float:
    """
    Poisson kernel p_t(x, y) by subordination to the heat kernel.

    Raises:
        QuadratureNotConverged: If the subordination integral does not converge
    """
    if t <= 0:
        raise ValueError(f"Poisson time must be positive, got {t}")
    poisson = poisson or PoissonEvaluator.build(rs)
    return float(poisson.kernel(t, x, y))


def poisson_apply(rs: RootSystem, t: float, f: GridFunction, route: str = "spectral",
                  poisson: Optional[PoissonEvaluator] = None,
                  transformer: Optional[DunklTransformer] = None) -> GridFunction:
    """P_t f by the multiplier e^{-t|xi|} (spectral) or the subordinated kernel matrix (kernel)."""
    if route == "spectral":
        return spectral_multiplier_apply(f, lambda xi: np.exp(-t * np.linalg.norm(xi, axis=-1)), transformer)
    if route != "kernel":
        raise ValueError(f"Unknown Poisson route: {route}. Available routes: {list(ROUTES['poisson'])}")
    poisson = poisson or PoissonEvaluator.build(rs)
    weighted = (f.values * f.grid.quad_weights).ravel()
    return f.with_values((poisson.matrix(t, f.grid) @ weighted).reshape(f.grid.shape))


def poisson_ladder(rs: RootSystem, f: GridFunction, times: Sequence[float],
                   transformer: Optional[DunklTransformer] = None) -> TimeGridFunction:
    """P_t f for every t in `times`, sharing one forward transform."""
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    spectral = transformer.forward(f.values)
    rho = np.linalg.norm(transformer.xi_grid.points, axis=-1).reshape(transformer.xi_grid.shape)
    slices = [np.real(transformer.inverse(spectral * np.exp(-t * rho), check=False)) for t in times]
    return TimeGridFunction(f.grid, np.asarray(times, dtype=float), np.stack(slices))


def heat_ladder(rs: RootSystem, f: GridFunction, times: Sequence[float],
                transformer: Optional[DunklTransformer] = None) -> TimeGridFunction:
    """H_t f for every t in `times` on the spectral side."""
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    spectral = transformer.forward(f.values)
    rho2 = np.sum(transformer.xi_grid.points ** 2, axis=-1).reshape(transformer.xi_grid.shape)
    slices = [np.real(transformer.inverse(spectral * np.exp(-t * rho2), check=False)) for t in times]
    return TimeGridFunction(f.grid, np.asarray(times, dtype=float), np.stack(slices))


def qt_multiplier(t: float) -> Callable[[np.ndarray], np.ndarray]:
    def m(xi: np.ndarray) -> np.ndarray:
        s = t * np.linalg.norm(xi, axis=-1)
        return s * np.exp(-s)
    return m


def qt_apply(rs: RootSystem, t: float, f: GridFunction, route: str = "spectral",
             transformer: Optional[DunklTransformer] = None, delta: float = 1e-3) -> GridFunction:
    """
    Q_t f = t sqrt(-Delta) e^{-t sqrt(-Delta)} f.

    Args:
        rs (RootSystem): Root system
        t (float): Time
        f (GridFunction): Samples
        route (str): 'spectral' (multiplier t|xi| e^{-t|xi|}) or 'd_dt' (-t d/dt P_t f)
        transformer (DunklTransformer, optional): Kernel matrices
        delta (float): Relative time step of the central difference

    Returns:
        GridFunction: Q_t f
    """
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    if route == "spectral":
        return spectral_multiplier_apply(f, qt_multiplier(t), transformer)
    if route != "d_dt":
        raise ValueError(f"Unknown Q_t route: {route}. Available routes: {list(ROUTES['qt'])}")
    step = delta * t
    plus = poisson_apply(rs, t + step, f, transformer=transformer)
    minus = poisson_apply(rs, t - step, f, transformer=transformer)
    return f.with_values(-t * (plus.values - minus.values) / (2.0 * step))


def heat_lp_apply(rs: RootSystem, t: float, f: GridFunction,
                  transformer: Optional[DunklTransformer] = None) -> GridFunction:
    """t^2 Delta e^{t^2 Delta} f, multiplier -t^2|xi|^2 e^{-t^2|xi|^2}."""
    def m(xi: np.ndarray) -> np.ndarray:
        s = t * t * np.sum(xi * xi, axis=-1)
        return -s * np.exp(-s)
    return spectral_multiplier_apply(f, m, transformer)


def qt_ladder(rs: RootSystem, f: GridFunction, times: Sequence[float],
              transformer: Optional[DunklTransformer] = None) -> TimeGridFunction:
    """Q_t f for every t in `times`, sharing one forward transform."""
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    spectral = transformer.forward(f.values)
    slices = [np.real(transformer.inverse(spectral * transformer.multiplier_values(qt_multiplier(t)), check=False))
              for t in times]
    return TimeGridFunction(f.grid, np.asarray(times, dtype=float), np.stack(slices))


def qt_energy(rs: RootSystem, f: GridFunction, transformer: Optional[DunklTransformer] = None,
              panels_per_unit: int = 1, order: int = 20) -> Tuple[float, float]:
    """
    int_0^inf |Q_t f|_2^2 dt/t computed on the spectral side, with the reference |f|_2^2 / 4.

    The t-integral runs in log t over the range where some grid frequency
    contributes, so the result is independent of any ladder.

    Returns:
        Tuple[float, float]: (energy, |f|_2^2 / 4)
    """
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    spectral = transformer.forward(f.values)
    rho = np.linalg.norm(transformer.xi_grid.points, axis=-1)
    density = (np.abs(spectral) ** 2 * transformer.xi_grid.quad_weights).ravel()
    keep = rho > 0
    rho, density = rho[keep], density[keep]
    lower = math.log(1e-8 / rho.max())
    upper = math.log(60.0 / rho.min())
    edges = np.arange(lower, upper + 1.0 / panels_per_unit, 1.0 / panels_per_unit)

    def integrand(u: np.ndarray) -> np.ndarray:
        s = np.multiply.outer(np.exp(u), rho)
        return (s * s * np.exp(-2.0 * s)) @ density

    energy = float(composite_quad(integrand, edges, order=order))
    reference = 0.25 * f.l2_norm() ** 2
    logging.info(f"Q_t energy {energy:.10g} against |f|^2/4 = {reference:.10g}")
    return energy, reference


def poisson_mass_outside(rs: RootSystem, t: float, r: float, x: Optional[Vector] = None,
                         grid: Optional[WeightedGrid] = None,
                         poisson: Optional[PoissonEvaluator] = None) -> float:
    """
    int_{|x-y| > r} p_t(x, y) dw(y).

    At x = 0 the radial profile gives 1 - |S|_w int_0^r p_t(s) s^{N-1} ds;
    elsewhere the subordinated kernel is summed over grid points inside B(x, r).
    """
    if x is None or not np.any(np.asarray(x, dtype=float)):
        big_n = rs.homogeneous_dimension
        inside = adaptive_quad(lambda s: poisson_profile(rs, t, s) * s ** (big_n - 1), 0.0, r,
                               tol=1e-13, breakpoints=[min(t, r / 2)] + [t * 2.0 ** j for j in range(1, 30)])
        return float(1.0 - sphere_constant(rs) * inside)
    if grid is None:
        raise ValueError("poisson_mass_outside needs a grid away from the origin")
    x = np.asarray(x, dtype=float)
    poisson = poisson or PoissonEvaluator.build(rs)
    near = np.linalg.norm(grid.points - x, axis=-1) <= r
    values = poisson.kernel(t, x, grid.points[near])
    return float(1.0 - np.sum(values * grid.quad_weights.ravel()[near]))


def hardy_littlewood_maximal(rs: RootSystem, f: GridFunction, radii: Optional[Sequence[float]] = None) -> GridFunction:
    """Centred Hardy-Littlewood maximal function for (R^N, |x-y|, dw) on the grid."""
    return f.with_values(hardy_littlewood_sup(f.grid, np.where(f.valid, f.values, 0.0), radii))


def phl_check(rs: RootSystem, f: GridFunction, ladder: Optional[TimeLadder] = None,
              transformer: Optional[DunklTransformer] = None) -> Dict[str, float]:
    """
    Compare M_P f and M_H f with sum over sigma of M_HL f(sigma x), fitting one constant each.

    Returns:
        Dict[str, float]: Fitted constants and the number of points compared
    """
    ladder = ladder or TimeLadder.geometric()
    transformer = transformer or DunklTransformer.build(rs, f.grid)
    grid = f.grid
    hl = hardy_littlewood_maximal(rs, f).values
    orbit_sum = sum(grid.compose(hl, g) for g in range(rs.order))
    m_p = cone_sup(poisson_ladder(rs, f, ladder.times, transformer), ladder.times).values
    m_h = cone_sup(heat_ladder(rs, f, ladder.times, transformer), np.sqrt(ladder.times)).values
    mask = orbit_sum > 1e-12 * orbit_sum.max()
    result = {
        "poisson_constant": float(np.max(m_p[mask] / orbit_sum[mask])),
        "heat_constant": float(np.max(m_h[mask] / orbit_sum[mask])),
        "points": int(mask.sum()),
    }
    logging.info(f"Maximal comparison constants: {result}")
    return result


def _dunkl_derivative_at(rs: RootSystem, func: Callable[[np.ndarray], float], x: np.ndarray,
                         xi: np.ndarray, step: float) -> float:
    """T_xi f(x) with central differences; on a reflection hyperplane the difference quotient becomes d_alpha f."""
    def directional(direction: np.ndarray) -> float:
        return (func(x + step * direction) - func(x - step * direction)) / (2.0 * step)

    value = directional(xi)
    for alpha, k in zip(rs.positive_roots, rs.positive_multiplicities):
        if k == 0:
            continue
        proj = float(alpha @ x)
        if abs(proj) < 10 * step:
            quotient = directional(alpha)
        else:
            quotient = (func(x) - func(rs.reflect(alpha, x))) / proj
        value += k * float(alpha @ xi) * quotient
    return value


class _VolumeCache:
    def __init__(self, rs: RootSystem):
        self.rs = rs
        self.values: Dict[Tuple, float] = {}

    def __call__(self, x: np.ndarray, r: float) -> float:
        key = (tuple(np.round(x, 12)), round(r, 14))
        if key not in self.values:
            self.values[key] = ball_volume(self.rs, x, r)
        return self.values[key]

    def pair(self, x: np.ndarray, y: np.ndarray, r: float) -> float:
        return max(self(x, r), self(y, r))


def _fit_exponent(log_values: np.ndarray, log_base: np.ndarray,
                  distance_ratio: np.ndarray) -> Tuple[float, np.ndarray]:
    """Pick c minimizing the spread of log(value) - log(base) + c * distance_ratio."""
    best = None
    for c in FIT_CANDIDATES:
        log_ratio = log_values - log_base + c * distance_ratio
        spread = float(np.max(log_ratio) - np.min(log_ratio))
        if best is None or spread < best[0]:
            best = (spread, c, log_ratio)
    return best[1], best[2]


def _coordinate_columns(prefix: str, point: np.ndarray) -> Dict[str, float]:
    return {f"{prefix}{j}": float(v) for j, v in enumerate(point)}


def _summarize(table: pd.DataFrame, fitted: Dict[str, float]) -> Dict[str, Dict[str, float]]:
    summary = {}
    for name, group in table.groupby("quantity", sort=False):
        summary[name] = {
            "min_ratio": float(group["ratio"].min()),
            "max_ratio": float(group["ratio"].max()),
            "fitted_c": fitted.get(name, float("nan")),
            "all_finite": bool(np.all(np.isfinite(group["ratio"]))),
        }
    return summary


def heat_bound_report(rs: RootSystem, sweep: Sequence[Tuple[float, Vector, Vector]],
                      heat: Optional[HeatEvaluator] = None, fd_scale: float = 1e-4,
                      xi: Optional[Vector] = None) -> Tuple[pd.DataFrame, Dict[str, Dict[str, float]]]:
    """
    Envelope ratios for the heat kernel and its derivatives over a (t, x, y) sweep.

    Quantities: h (upper, against V(x,y,sqrt t)^{-1} e^{-c d^2/t}), h_lower
    (against min w(B(., sqrt t))^{-1} e^{-c|x-y|^2/t}), dt_h, holder (y' at
    distance sqrt(t)/2), dunkl_x, mixed (d_t d_{x_1}) and near_diagonal
    (h_t w(B(x, sqrt t)) for |x - y| <= sqrt t).

    Returns:
        Tuple[pd.DataFrame, Dict]: Rows (t, x..., y..., quantity, value,
            envelope, ratio) and per-quantity min/max ratios with fitted c
    """
    heat = heat or HeatEvaluator.build(rs)
    xi = np.eye(rs.dimension)[0] if xi is None else np.asarray(xi, dtype=float)
    volume = _VolumeCache(rs)
    raw: List[Dict[str, object]] = []
    for t, x, y in sweep:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        root_t = math.sqrt(t)
        step = fd_scale * max(1.0, root_t)
        h = lambda tt, xx, yy: float(heat.kernel(tt, xx, yy))
        d2 = float(orbit_distance(rs, x, y)) ** 2
        e2 = float(np.sum((x - y) ** 2))
        v = volume.pair(x, y, root_t)
        v_min = min(volume(x, root_t), volume(y, root_t))
        y_shift = y + 0.5 * root_t * np.eye(rs.dimension)[0]
        dt = fd_scale * t
        values = {
            "h": (h(t, x, y), 1.0 / v, d2 / t, -1.0),
            "h_lower": (h(t, x, y), 1.0 / v_min, e2 / t, +1.0),
            "dt_h": (abs(h(t + dt, x, y) - h(t - dt, x, y)) / (2 * dt), 1.0 / (t * v), d2 / t, -1.0),
            "holder": (abs(h(t, x, y) - h(t, x, y_shift)), 0.5 / v, d2 / t, -1.0),
            "dunkl_x": (abs(_dunkl_derivative_at(rs, lambda p: h(t, p, y), x, xi, step)),
                        1.0 / (root_t * v), d2 / t, -1.0),
            "mixed": (abs((h(t + dt, x + step * xi, y) - h(t + dt, x - step * xi, y)
                           - h(t - dt, x + step * xi, y) + h(t - dt, x - step * xi, y)) / (4 * dt * step)),
                      1.0 / (t * root_t * v), d2 / t, -1.0),
        }
        if math.sqrt(e2) <= root_t:
            values["near_diagonal"] = (h(t, x, y), 1.0 / volume(x, root_t), 0.0, 0.0)
        for name, (value, base, exponent, sign) in values.items():
            raw.append({"t": t, **_coordinate_columns("x", x), **_coordinate_columns("y", y),
                        "quantity": name, "value": value, "base": base, "exponent": exponent, "sign": sign})
    frame = pd.DataFrame(raw)
    fitted: Dict[str, float] = {}
    parts = []
    for name, group in frame.groupby("quantity", sort=False):
        group = group.copy()
        positive = group["value"] > 0
        if group["sign"].iloc[0] == 0.0:
            c = 0.0
            log_ratio = np.log(group["value"]) - np.log(group["base"])
        else:
            c, log_ratio = _fit_exponent(np.log(np.where(positive, group["value"], 1e-300)),
                                         np.log(group["base"].to_numpy()), group["exponent"].to_numpy())
        fitted[name] = c
        group["envelope"] = group["base"] * np.exp(-c * group["exponent"])
        group["ratio"] = np.where(positive, np.exp(log_ratio), 0.0)
        parts.append(group)
    table = pd.concat(parts, ignore_index=True).drop(columns=["base", "exponent", "sign"])
    summary = _summarize(table, fitted)
    logging.info(f"Heat bound report: {len(sweep)} sweep points, {len(table)} rows")
    return table, summary


def poisson_bound_report(rs: RootSystem, sweep: Sequence[Tuple[float, Vector, Vector]],
                         poisson: Optional[PoissonEvaluator] = None, fd_scale: float = 1e-4,
                         xi: Optional[Vector] = None) -> Tuple[pd.DataFrame, Dict[str, Dict[str, float]]]:
    """
    Envelope ratios for the Poisson kernel: p_upper (against V(x,y,t+d)^{-1} t/(t+d)),
    p_lower (same with |x-y|), dunkl_y (against V^{-1}/(t+d)) and dt_p
    (against p_t (t+d)^{-1}(1 + d/t)).
    """
    poisson = poisson or PoissonEvaluator.build(rs)
    xi = np.eye(rs.dimension)[0] if xi is None else np.asarray(xi, dtype=float)
    volume = _VolumeCache(rs)
    rows = []
    for t, x, y in sweep:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        p = lambda tt, xx, yy: float(poisson.kernel(tt, xx, yy))
        d = float(orbit_distance(rs, x, y))
        e = float(np.linalg.norm(x - y))
        value = p(t, x, y)
        step = fd_scale * max(1.0, t)
        dt = fd_scale * t
        envelopes = {
            "p_upper": (value, t / (t + d) / volume.pair(x, y, t + d)),
            "p_lower": (value, t / (t + e) / volume.pair(x, y, t + e)),
            "dunkl_y": (abs(_dunkl_derivative_at(rs, lambda q: p(t, x, q), y, xi, step)),
                        1.0 / ((t + d) * volume.pair(x, y, t + d))),
            "dt_p": (abs(p(t + dt, x, y) - p(t - dt, x, y)) / (2 * dt), value / (t + d) * (1.0 + d / t)),
        }
        for name, (quantity, envelope) in envelopes.items():
            rows.append({"t": t, **_coordinate_columns("x", x), **_coordinate_columns("y", y),
                         "quantity": name, "value": quantity, "envelope": envelope,
                         "ratio": quantity / envelope})
    table = pd.DataFrame(rows)
    summary = _summarize(table, {})
    logging.info(f"Poisson bound report: {len(sweep)} sweep points")
    return table, summary
