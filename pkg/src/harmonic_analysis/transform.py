"""
Dunkl Transform Module

This module implements the Dunkl transform on weighted grids,

    F f(xi) = c_k^{-1} int f(x) E(x, -i xi) dw(x),

its inverse, every spectral multiplier operator m(D) f = F^{-1}(m F f),
Dunkl translations and convolutions, the radial (Hankel) fast path and the
Psi_{s,t} kernels with their bound report.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .algebra import RootSystem, Vector, WeightedGrid, ball_volume, orbit_distance, weight
from .exceptions import BoundaryMassError, UnsupportedRootSystem
from .kernel import KernelEvaluator, rank1_kernel
from .operators import GridFunction
from .special import adaptive_quad, composite_quad, gamma_fn, normalized_bessel_j, semi_infinite_quad

DEFAULT_BOUNDARY_TOL = 1e-10
DENSE_CHUNK = 64

Multiplier = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


@lru_cache(maxsize=64)
def normalization_constant(rs: RootSystem, tol: float = 1e-12) -> float:
    """
    c_k = int exp(-|x|^2/2) dw(x), by semi-infinite quadrature.

    Product root systems factor over the axes; other planar root systems
    split into an angular integral of w and a radial Gaussian moment.

    Args:
        rs (RootSystem): Root system
        tol (float): Quadrature tolerance

    Returns:
        float: c_k

    Raises:
        UnsupportedRootSystem: For non-product root systems in dimension 3 or more
    """
    if rs.is_product:
        value = 1.0
        for k in rs.axis_multiplicities():
            moment = semi_infinite_quad(lambda x, k=k: x ** (2 * k) * np.exp(-x * x / 2.0),
                                        decay="gaussian", tol=tol)
            value *= 2.0 * 2.0 ** k * moment
    elif rs.dimension == 2:
        angles = sorted({float(np.mod(math.atan2(a[1], a[0]) + math.pi / 2, math.pi)) for a in rs.roots})
        breakpoints = [a for a in angles] + [a + math.pi for a in angles]
        sphere = adaptive_quad(
            lambda th: np.asarray(weight(rs, np.stack([np.cos(th), np.sin(th)], axis=-1))),
            0.0, 2 * math.pi, tol=tol, breakpoints=breakpoints, max_level=14)
        radial = semi_infinite_quad(lambda r: r ** (rs.homogeneous_dimension - 1) * np.exp(-r * r / 2.0),
                                    decay="gaussian", tol=tol)
        value = sphere * radial
    else:
        raise UnsupportedRootSystem(f"c_k is only computed for product or planar root systems, not {rs.name}")
    logging.info(f"Normalization constant c_k for {rs.name}: {value:.12g}")
    return float(value)


def product_constant(rs: RootSystem) -> float:
    """Closed form prod_j 2^{2k_j+1/2} Gamma(k_j+1/2) for product root systems."""
    return float(np.prod([2.0 ** (2 * k + 0.5) * gamma_fn(k + 0.5) for k in rs.axis_multiplicities()]))


def sphere_constant(rs: RootSystem) -> float:
    """int_S w dsigma = c_k / (2^{N/2-1} Gamma(N/2)), N the homogeneous dimension."""
    big_n = rs.homogeneous_dimension
    return normalization_constant(rs) / (2.0 ** (big_n / 2 - 1) * gamma_fn(big_n / 2))


class SpectralFunction(GridFunction):
    """Samples of a function on the xi-grid."""

    def energy(self) -> float:
        return self.l2_norm() ** 2


def default_xi_grid(grid: WeightedGrid, xi_extent: Optional[float] = None) -> WeightedGrid:
    """Reciprocal xi-grid: extent pi/h unless given, same number of points."""
    return grid.with_extent(xi_extent if xi_extent is not None else math.pi / grid.spacing)


def _boundary_ratio(values: np.ndarray) -> float:
    values = np.abs(np.asarray(values))
    top = float(values.max()) if values.size else 0.0
    if top == 0.0:
        return 0.0
    edge = 0.0
    for axis in range(values.ndim):
        edge = max(edge, float(np.take(values, 0, axis=axis).max()), float(np.take(values, -1, axis=axis).max()))
    return edge / top


def check_boundary(values: np.ndarray, tol: float = DEFAULT_BOUNDARY_TOL, what: str = "function") -> None:
    """
    Raise BoundaryMassError unless |values| on the outer layer is below tol relative to the maximum.
    """
    ratio = _boundary_ratio(values)
    if ratio > tol:
        logging.error(f"Boundary check failed for {what}: edge/max = {ratio:.3g}")
        raise BoundaryMassError(f"{what} does not decay at the grid boundary (edge/max = {ratio:.3g} > {tol:g})")


@dataclass
class DunklTransformer:
    """
    Kernel matrices between an x-grid and a xi-grid.

    Product root systems use one matrix per axis; other groups one dense
    matrix built in series mode.
    """

    rs: RootSystem
    grid: WeightedGrid
    xi_grid: WeightedGrid
    evaluator: KernelEvaluator
    ck: float
    boundary_tol: float = DEFAULT_BOUNDARY_TOL
    axis_matrices: List[np.ndarray] = field(default_factory=list, repr=False)
    dense_matrix: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def build(cls, rs: RootSystem, grid: WeightedGrid, xi_grid: Optional[WeightedGrid] = None,
              evaluator: Optional[KernelEvaluator] = None,
              boundary_tol: float = DEFAULT_BOUNDARY_TOL) -> "DunklTransformer":
        """
        Build the forward kernel matrices E(x, -i xi).

        Args:
            rs (RootSystem): Root system
            grid (WeightedGrid): x-grid
            xi_grid (WeightedGrid, optional): xi-grid (reciprocal default)
            evaluator (KernelEvaluator, optional): Kernel evaluator
            boundary_tol (float): Relative edge tolerance for decay checks

        Returns:
            DunklTransformer: The transformer
        """
        xi_grid = xi_grid or default_xi_grid(grid)
        evaluator = evaluator or KernelEvaluator.for_root_system(rs)
        transformer = cls(rs=rs, grid=grid, xi_grid=xi_grid, evaluator=evaluator,
                          ck=normalization_constant(rs), boundary_tol=boundary_tol)
        if rs.is_product:
            for k in rs.axis_multiplicities():
                s = -1j * np.multiply.outer(xi_grid.axis, grid.axis)
                transformer.axis_matrices.append(rank1_kernel(float(k), s))
        else:
            rows = []
            for start in range(0, xi_grid.size, DENSE_CHUNK):
                xi = xi_grid.points[start:start + DENSE_CHUNK]
                rows.append(evaluator.evaluate(grid.points[None, :, :], -1j * xi[:, None, :]))
            transformer.dense_matrix = np.vstack(rows)
        logging.info(f"Dunkl transformer for {rs.name}: x-extent {grid.extent}, xi-extent {xi_grid.extent:.4g}")
        return transformer

    def _separable(self, values: np.ndarray, matrices: Sequence[np.ndarray]) -> np.ndarray:
        out = values
        for j, matrix in enumerate(matrices):
            out = np.moveaxis(np.tensordot(matrix, out, axes=([1], [j])), 0, j)
        return out

    def forward(self, values: np.ndarray, check: bool = True) -> np.ndarray:
        """Forward transform of samples on the x-grid, returned on the xi-grid."""
        if check:
            check_boundary(values, self.boundary_tol, "function")
        weighted = np.asarray(values) * self.grid.quad_weights
        if self.dense_matrix is not None:
            out = (self.dense_matrix @ weighted.ravel()).reshape(self.xi_grid.shape)
        else:
            out = self._separable(weighted, self.axis_matrices)
        return out / self.ck

    def inverse(self, values: np.ndarray, check: bool = True) -> np.ndarray:
        """Inverse transform of samples on the xi-grid, returned on the x-grid."""
        if check:
            check_boundary(values, self.boundary_tol, "spectral function")
        weighted = np.asarray(values) * self.xi_grid.quad_weights
        if self.dense_matrix is not None:
            out = (np.conj(self.dense_matrix).T @ weighted.ravel()).reshape(self.grid.shape)
        else:
            out = self._separable(weighted, [np.conj(m).T for m in self.axis_matrices])
        return out / self.ck

    def multiplier_values(self, m: Multiplier) -> np.ndarray:
        if callable(m):
            return np.asarray(m(self.xi_grid.points)).reshape(self.xi_grid.shape)
        return np.asarray(m).reshape(self.xi_grid.shape)

    def apply_multiplier(self, values: np.ndarray, m: Multiplier, check: bool = True) -> np.ndarray:
        """F^{-1}(m F f) on raw arrays; the spectral side is not boundary-checked after m."""
        spectral = self.forward(values, check=check) * self.multiplier_values(m)
        return self.inverse(spectral, check=False)


def _transformer_for(rs: RootSystem, grid: WeightedGrid, transformer: Optional[DunklTransformer],
                     xi_grid: Optional[WeightedGrid] = None) -> DunklTransformer:
    if transformer is not None:
        return transformer
    return DunklTransformer.build(rs, grid, xi_grid)


def dunkl_transform(rs: RootSystem, f: GridFunction, xi_grid: Optional[WeightedGrid] = None,
                    transformer: Optional[DunklTransformer] = None) -> SpectralFunction:
    """
    Dunkl transform of grid samples.

    Args:
        rs (RootSystem): Root system
        f (GridFunction): Samples on the x-grid
        xi_grid (WeightedGrid, optional): Target grid
        transformer (DunklTransformer, optional): Prebuilt kernel matrices

    Returns:
        SpectralFunction: F f on the xi-grid

    Raises:
        BoundaryMassError: If f does not decay at the grid boundary
    """
    tr = _transformer_for(rs, f.grid, transformer, xi_grid)
    return SpectralFunction(tr.xi_grid, tr.forward(f.values))


def inverse_transform(rs: RootSystem, spectral: GridFunction, x_grid: Optional[WeightedGrid] = None,
                      transformer: Optional[DunklTransformer] = None) -> GridFunction:
    """
    Inverse Dunkl transform with kernel E(x, i xi).

    Raises:
        BoundaryMassError: If the spectral samples do not decay at the boundary
    """
    if transformer is None:
        if x_grid is None:
            raise ValueError("inverse_transform needs an x-grid or a transformer")
        transformer = DunklTransformer.build(rs, x_grid, spectral.grid)
    return GridFunction(transformer.grid, transformer.inverse(spectral.values))


def spectral_multiplier_apply(f: GridFunction, m: Multiplier, transformer: Optional[DunklTransformer] = None,
                              real: bool = True, check: bool = True) -> GridFunction:
    """
    Apply the spectral multiplier m: F^{-1}(m F f).

    Args:
        f (GridFunction): Samples on the x-grid
        m (Callable | np.ndarray): m(xi_points) or samples on the xi-grid
        transformer (DunklTransformer, optional): Prebuilt kernel matrices
        real (bool): Drop the imaginary part (multipliers with real-valued output)
        check (bool): Check decay of f at the boundary

    Returns:
        GridFunction: The result on the x-grid
    """
    tr = _transformer_for(f.grid.rs, f.grid, transformer)
    values = tr.apply_multiplier(f.values, m, check=check)
    return f.with_values(np.real(values) if real else values)


def norm_multiplier(profile: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """Radial multiplier xi -> profile(|xi|)."""
    return lambda xi: profile(np.linalg.norm(xi, axis=-1))


def dunkl_translate(rs: RootSystem, f: GridFunction, x: Vector,
                    transformer: Optional[DunklTransformer] = None) -> GridFunction:
    """
    tau_x f(y) = c_k^{-1} int E(i xi, x) E(i xi, y) F f(xi) dw(xi).

    Args:
        rs (RootSystem): Root system
        f (GridFunction): Samples on the x-grid
        x (Vector): Translation point
        transformer (DunklTransformer, optional): Prebuilt kernel matrices

    Returns:
        GridFunction: tau_x f on the same grid (real part)
    """
    tr = _transformer_for(rs, f.grid, transformer)
    x = np.asarray(x, dtype=float)
    return spectral_multiplier_apply(f, lambda xi: tr.evaluator.evaluate(x, 1j * xi), tr)


def dunkl_convolve(rs: RootSystem, f: GridFunction, g: GridFunction, route: str = "spectral",
                   transformer: Optional[DunklTransformer] = None) -> GridFunction:
    """
    Dunkl convolution f * g.

    The spectral route computes c_k F^{-1}[(F f)(F g)]; the translation route
    integrates f(y) tau_x g(-y) dw(y) for every grid point x.

    Args:
        rs (RootSystem): Root system
        f (GridFunction): First factor
        g (GridFunction): Second factor
        route (str): 'spectral' or 'translation'
        transformer (DunklTransformer, optional): Prebuilt kernel matrices

    Returns:
        GridFunction: f * g
    """
    tr = _transformer_for(rs, f.grid, transformer)
    if route == "spectral":
        product = tr.forward(f.values) * tr.forward(g.values)
        return f.with_values(np.real(tr.ck * tr.inverse(product, check=False)))
    if route != "translation":
        raise ValueError(f"Unknown convolution route: {route}")
    spectral_g = tr.forward(g.values)
    weighted = f.values * f.grid.quad_weights
    out = np.empty(f.grid.size)
    for index, x in enumerate(f.grid.points):
        shifted = tr.inverse(spectral_g * tr.multiplier_values(lambda xi: tr.evaluator.evaluate(x, 1j * xi)),
                             check=False)
        # tau_x g evaluated at -y
        reflected = np.flip(np.real(shifted))
        out[index] = float(np.sum(weighted * reflected))
    return f.with_values(out.reshape(f.grid.shape))


def hankel_transform(rs: RootSystem, profile: Callable[[np.ndarray], np.ndarray], rho: Vector,
                     decay: str = "gaussian", scale: float = 1.0, tol: float = 1e-10,
                     support: Optional[Sequence[float]] = None, panels: int = 16, order: int = 20) -> np.ndarray:
    """
    Dunkl transform of a radial function from its profile:
    (2^{N/2-1} Gamma(N/2))^{-1} int f(r) j_{N/2-1}(r rho) r^{N-1} dr, N homogeneous.

    Args:
        rs (RootSystem): Root system
        profile (Callable): Vectorized radial profile f(r)
        rho (Vector): Spectral radii
        decay (str): Decay type of the profile (see semi_infinite_quad)
        scale (float): Decay length scale
        tol (float): Quadrature tolerance
        support (Sequence[float], optional): Breakpoints of a compactly supported profile;
            the integral then runs over them with `panels` Gauss panels of `order` nodes per piece
        panels (int): Panels per piece of the support
        order (int): Nodes per panel

    Returns:
        np.ndarray: Transform values at rho
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    big_n = rs.homogeneous_dimension
    nu = big_n / 2.0 - 1.0

    def integrand(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        bessel = normalized_bessel_j(nu, np.multiply.outer(r, rho).ravel()).reshape(r.size, rho.size)
        return (np.asarray(profile(r)) * r ** (big_n - 1))[:, None] * bessel

    if support is not None:
        pieces = [np.linspace(lo, hi, panels + 1) for lo, hi in zip(support[:-1], support[1:])]
        value = composite_quad(integrand, np.concatenate(pieces), order=order)
    else:
        value = semi_infinite_quad(integrand, decay=decay, tol=tol, scale=scale)
    return np.asarray(value) / (2.0 ** nu * gamma_fn(nu + 1.0))


def sphere_mean_kernel(rs: RootSystem, r: float, rho: float, evaluator: Optional[KernelEvaluator] = None,
                       order: int = 40) -> complex:
    """
    Weighted spherical mean of E(r theta, -i rho e_1) over the unit circle, for planar root systems.

    The radial fast path uses that this equals j_{N/2-1}(r rho).
    """
    if rs.dimension != 2:
        raise UnsupportedRootSystem("Sphere means are computed for planar root systems only")
    evaluator = evaluator or KernelEvaluator.for_root_system(rs)
    angles = sorted({float(np.mod(math.atan2(a[1], a[0]) + math.pi / 2, 2 * math.pi)) for a in rs.roots})
    breakpoints = [0.0] + angles + [2 * math.pi]
    direction = np.array([rho, 0.0])

    def integrand(theta: np.ndarray) -> np.ndarray:
        points = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return np.asarray(weight(rs, points)) * evaluator.evaluate(r * points, -1j * direction)

    total = composite_quad(integrand, breakpoints, order=order)
    norm = composite_quad(lambda th: np.asarray(weight(rs, np.stack([np.cos(th), np.sin(th)], axis=-1))),
                          breakpoints, order=order)
    return complex(total / norm)


def _profile_product(psi1, psi2, l1: int, l2: int, s: float, t: float) -> Callable[[np.ndarray], np.ndarray]:
    for ell in (l1, l2):
        if ell < 0 or ell % 2:
            raise ValueError(f"Powers l1, l2 must be even nonnegative integers, got {ell}")
    return lambda r: (s * r) ** l1 * psi1(s * r) * (t * r) ** l2 * psi2(t * r)


def psi_st_kernel(rs: RootSystem, psi1: Callable, psi2: Callable, l1: int, l2: int, s: float, t: float,
                  x: Vector, y: Vector, evaluator: Optional[KernelEvaluator] = None,
                  cutoff: float = 12.0, tol: float = 1e-12) -> complex:
    """
    Psi_{s,t}(x, y) = c_k^{-1} int (s|xi|)^{l1} psi1(s|xi|) (t|xi|)^{l2} psi2(t|xi|)
    E(x, i xi) E(-y, i xi) dw(xi), for N in {1, 2}.

    Args:
        rs (RootSystem): Root system of dimension 1 or 2
        psi1 (Callable): Even profile psi^{1}
        psi2 (Callable): Even profile psi^{2}
        l1 (int): Even power on the s-factor
        l2 (int): Even power on the t-factor
        s (float): First scale
        t (float): Second scale
        x (Vector): First point
        y (Vector): Second point
        evaluator (KernelEvaluator, optional): Kernel evaluator
        cutoff (float): Profiles are negligible beyond |xi| = cutoff / max(s, t)
        tol (float): Quadrature tolerance

    Returns:
        complex: The kernel value
    """
    if rs.dimension not in (1, 2):
        raise UnsupportedRootSystem(f"Psi_(s,t) kernels are computed for N in (1, 2), got N={rs.dimension}")
    evaluator = evaluator or KernelEvaluator.for_root_system(rs)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = _profile_product(psi1, psi2, l1, l2, s, t)
    upper = cutoff / max(s, t)
    # resolve the oscillation of E(x, i xi) E(-y, i xi)
    panels = max(4, int(math.ceil(upper * (np.linalg.norm(x) + np.linalg.norm(y) + 1.0) / math.pi)))
    breakpoints = np.linspace(0.0, upper, panels + 1)[1:-1]

    if rs.dimension == 1:
        def integrand(r: np.ndarray) -> np.ndarray:
            r = np.asarray(r, dtype=float)
            xi = np.concatenate([r, -r])[:, None]
            values = evaluator.evaluate(x, 1j * xi) * evaluator.evaluate(-y, 1j * xi)
            w = np.asarray(weight(rs, xi))
            both = values * w
            return g(r) * (both[:r.size] + both[r.size:])
    else:
        angles = sorted({float(np.mod(math.atan2(a[1], a[0]) + math.pi / 2, 2 * math.pi)) for a in rs.roots})
        theta_edges = [0.0] + angles + [2 * math.pi]

        def integrand(r: np.ndarray) -> np.ndarray:
            r = np.asarray(r, dtype=float)

            def angular(theta: np.ndarray) -> np.ndarray:
                directions = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
                xi = np.multiply.outer(r, directions).transpose(1, 0, 2)
                values = evaluator.evaluate(x, 1j * xi) * evaluator.evaluate(-y, 1j * xi)
                return np.asarray(weight(rs, directions))[:, None] * values

            return g(r) * composite_quad(angular, theta_edges, order=24) * r ** (rs.homogeneous_dimension - 1)

    value = adaptive_quad(integrand, 0.0, upper, tol=tol, breakpoints=breakpoints, max_level=8)
    return complex(value / normalization_constant(rs))


def psi_st_bound_report(rs: RootSystem, psi1: Callable, psi2: Callable, l1: int, l2: int,
                        scale_pairs: Sequence[Tuple[float, float]], point_pairs: Sequence[Tuple[Vector, Vector]],
                        kappa: float = 2.0) -> Tuple[pd.DataFrame, dict]:
    """
    Ratio of |Psi_{s,t}(x, y)| to min((s/t)^{l1}, (t/s)^{l2}) V(x, y, s+t)^{-1} (1 + d/(s+t))^{-kappa}.

    Returns:
        Tuple[pd.DataFrame, dict]: Per-sweep-point ratios and the max ratio
    """
    evaluator = KernelEvaluator.for_root_system(rs)
    rows = []
    for s, t in scale_pairs:
        for x, y in point_pairs:
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            value = psi_st_kernel(rs, psi1, psi2, l1, l2, s, t, x, y, evaluator)
            d = float(orbit_distance(rs, x, y))
            volume = max(ball_volume(rs, x, s + t), ball_volume(rs, y, s + t))
            envelope = min((s / t) ** l1, (t / s) ** l2) / volume * (1.0 + d / (s + t)) ** (-kappa)
            rows.append({"s": s, "t": t, "x": x.tolist(), "y": y.tolist(), "quantity": abs(value),
                         "envelope": envelope, "ratio": abs(value) / envelope})
    table = pd.DataFrame(rows)
    summary = {"max_ratio": float(table["ratio"].max()) if not table.empty else 0.0, "kappa": kappa}
    return table, summary
