"""
Dunkl Kernel Module

This module evaluates the Dunkl kernel E(x, y) in three modes:

- rank1_closed: E_k(xy) = e^{xy} 1F1(k, 2k+1, -2xy), evaluated through the
  equivalent Bessel representation away from the origin,
- product_closed: product of rank-one factors for Z2^N,
- series: homogeneous blocks E_n obtained by solving
  T_{e_j,x} E_n(x, y) = y_j E_{n-1}(x, y) degree by degree.

It also produces the two-sided kernel bound report.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special as sp

from .algebra import RootSystem, Vector, ball_volume, orbit_distance
from .exceptions import NotConverged, TruncationTooLarge
from .operators import Polynomial, dunkl_apply_poly
from .special import hyp1f1_small

MODES = ("rank1_closed", "product_closed", "series")
DEFAULT_NMAX = 24
DEFAULT_RADIUS = 6.0
DEFAULT_SERIES_TOL = 1e-8
SMALL_ARGUMENT = 1.0
FIT_CANDIDATES = (0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0)


def rank1_series(k: float, s: complex, tol: float = 1e-16, max_terms: int = 2000) -> complex:
    """
    Rank-one kernel by its power series sum c_n s^n with
    c_0 = 1 and c_n (n + k(1 - (-1)^n)) = c_{n-1}.
    """
    total, term = 1.0 + 0.0j, 1.0 + 0.0j
    for n in range(1, max_terms):
        term = term * s / (n + k * (1 - (-1) ** n))
        total += term
        if abs(term) <= tol * abs(total) and n > abs(s):
            return total
    raise NotConverged(f"Rank-one series did not converge at s={s}", estimate=total)


def rank1_kernel(k: float, s: np.ndarray, scaled: bool = False) -> np.ndarray:
    """
    Rank-one Dunkl kernel E_k(s), s = x*y, for real or purely imaginary s.

    Args:
        k (float): Multiplicity
        s (np.ndarray): Products x*y (real, or complex with zero real part)
        scaled (bool): Return e^{-|s|} E_k(s) for real s (no overflow)

    Returns:
        np.ndarray: Kernel values (real for real s, complex otherwise)
    """
    s = np.asarray(s)
    if np.iscomplexobj(s):
        if np.any(np.abs(s.real) > 1e-14 * np.maximum(1.0, np.abs(s))):
            if np.max(np.abs(s), initial=0.0) > 12.5:
                raise NotConverged("General complex rank-one arguments are limited to |s| <= 12.5")
            return np.exp(s) * hyp1f1_small(k, 2 * k + 1, -2 * s, max_terms=400)
        return _rank1_imaginary(k, s.imag)

    s = s.astype(float)
    out = np.empty_like(s)
    small = np.abs(s) <= SMALL_ARGUMENT
    ss = s[small]
    out[small] = np.exp(ss - (np.abs(ss) if scaled else 0.0)) * hyp1f1_small(k, 2 * k + 1, -2 * ss).real
    sl = s[~small]
    a = np.abs(sl)
    # Gamma(k+1/2) (|s|/2)^{1/2-k} [I_{k-1/2}(|s|) + sgn(s) I_{k+1/2}(|s|)], exponentially scaled
    value = sp.gamma(k + 0.5) * (a / 2.0) ** (0.5 - k) * (sp.ive(k - 0.5, a) + np.sign(sl) * sp.ive(k + 0.5, a))
    out[~small] = value if scaled else value * np.exp(a)
    return out


def _rank1_imaginary(k: float, sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    out = np.empty(sigma.shape, dtype=complex)
    small = np.abs(sigma) <= SMALL_ARGUMENT
    z = 1j * sigma[small]
    out[small] = np.exp(z) * hyp1f1_small(k, 2 * k + 1, -2 * z)
    sl = sigma[~small]
    a = np.abs(sl)
    prefactor = sp.gamma(k + 0.5) * (a / 2.0) ** (0.5 - k)
    out[~small] = prefactor * (sp.jv(k - 0.5, a) + 1j * np.sign(sl) * sp.jv(k + 0.5, a))
    return out


def monomial_exponents(dimension: int, degree: int) -> List[Tuple[int, ...]]:
    """All exponents of the given total degree, in a fixed order."""
    out = []
    for combo in combinations_with_replacement(range(dimension), degree):
        exponent = [0] * dimension
        for j in combo:
            exponent[j] += 1
        out.append(tuple(exponent))
    return out


def _monomial_matrix(points: np.ndarray, exponents: List[Tuple[int, ...]]) -> np.ndarray:
    columns = []
    for e in exponents:
        col = np.ones(points.shape[:-1], dtype=points.dtype)
        for j, power in enumerate(e):
            if power:
                col = col * points[..., j] ** power
        columns.append(col)
    return np.stack(columns, axis=-1)


@dataclass
class KernelEvaluator:
    """
    Evaluates E(x, y) for a root system; the series cache is built once on first use.
    """

    rs: RootSystem
    mode: str
    nmax: int = DEFAULT_NMAX
    radius: float = DEFAULT_RADIUS
    tol: float = DEFAULT_SERIES_TOL
    _exponents: List[List[Tuple[int, ...]]] = field(default_factory=list, repr=False)
    _blocks: List[np.ndarray] = field(default_factory=list, repr=False)

    @classmethod
    def for_root_system(cls, rs: RootSystem, mode: Optional[str] = None,
                        nmax: int = DEFAULT_NMAX, radius: float = DEFAULT_RADIUS,
                        tol: float = DEFAULT_SERIES_TOL) -> "KernelEvaluator":
        """Pick the closed form when the root system allows it, otherwise the series."""
        if mode is None:
            if rs.is_product:
                mode = "rank1_closed" if rs.dimension == 1 else "product_closed"
            else:
                mode = "series"
        if mode not in MODES:
            raise ValueError(f"Unknown kernel mode: {mode}. Available modes: {list(MODES)}")
        if mode in ("rank1_closed", "product_closed") and not rs.is_product:
            raise ValueError(f"Mode {mode} needs a rank-one or product root system, got {rs.name}")
        return cls(rs=rs, mode=mode, nmax=nmax, radius=radius, tol=tol)

    def build_series(self, degree: Optional[int] = None) -> None:
        """Solve the degree-n blocks up to `degree` (default nmax)."""
        degree = self.nmax if degree is None else degree
        n_dim = self.rs.dimension
        if not self._blocks:
            self._exponents = [monomial_exponents(n_dim, 0)]
            self._blocks = [np.ones((1, 1))]
        for n in range(len(self._blocks), degree + 1):
            exps = monomial_exponents(n_dim, n)
            lower = self._exponents[n - 1]
            lower_index = {e: i for i, e in enumerate(lower)}
            index = {e: i for i, e in enumerate(exps)}
            stacked, rhs = [], []
            for j in range(n_dim):
                e_j = np.eye(n_dim)[j]
                matrix = np.zeros((len(lower), len(exps)))
                for col, e in enumerate(exps):
                    image = dunkl_apply_poly(self.rs, e_j, Polynomial.monomial(e))
                    for out_e, c in image.coefficients.items():
                        matrix[lower_index[out_e], col] = c
                stacked.append(matrix)
                block = np.zeros((len(lower), len(exps)))
                for col, b in enumerate(exps):
                    if b[j] == 0:
                        continue
                    shifted = b[:j] + (b[j] - 1,) + b[j + 1:]
                    block[:, col] = self._blocks[n - 1][:, lower_index[shifted]]
                rhs.append(block)
            a_n = np.vstack(stacked)
            r_n = np.vstack(rhs)
            c_n, *_ = np.linalg.lstsq(a_n, r_n, rcond=None)
            residual = float(np.max(np.abs(a_n @ c_n - r_n)))
            if residual > 1e-10 * max(1.0, float(np.max(np.abs(r_n)))):
                raise NotConverged(f"Degree-{n} kernel block is inconsistent (residual {residual:.3g})",
                                   error=residual)
            self._exponents.append(exps)
            self._blocks.append(c_n)
            del index
        logging.info(f"Kernel series for {self.rs.name} built to degree {degree}")

    def series_coefficients(self, n: int) -> Tuple[List[Tuple[int, ...]], np.ndarray]:
        """Monomial exponents of degree n and the block C_n with E_n = x^a C_n[a, b] y^b."""
        self.build_series(max(n, len(self._blocks) - 1))
        return self._exponents[n], self._blocks[n]

    def series_symmetry_defect(self) -> float:
        """Largest |C_n - C_n^T| over built blocks (E(x, y) = E(y, x))."""
        self.build_series()
        return max(float(np.max(np.abs(c - c.T))) for c in self._blocks)

    def truncated_polynomial(self, y: Vector, degree: int) -> Polynomial:
        """E^{(degree)}(., y) as a polynomial in x, for real y."""
        y = np.asarray(y, dtype=float)
        self.build_series(max(degree, len(self._blocks) - 1))
        out: Dict[Tuple[int, ...], float] = {}
        for n in range(degree + 1):
            y_monomials = _monomial_matrix(y, self._exponents[n])
            coefficients = self._blocks[n] @ y_monomials
            for e, c in zip(self._exponents[n], coefficients):
                out[e] = out.get(e, 0.0) + float(c)
        return Polynomial(self.rs.dimension, out)

    def _series(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(x, axis=-1) * np.sqrt(np.sum(np.abs(y) ** 2, axis=-1))
        r_max = float(np.max(r, initial=0.0))
        tail = r_max ** (self.nmax + 1) / math.factorial(self.nmax + 1) / max(1e-12, 1.0 - r_max / (self.nmax + 2))
        if r_max > self.radius or tail > self.tol * math.exp(r_max):
            raise TruncationTooLarge(
                f"|x||y|={r_max:.3g} exceeds the series radius {self.radius} or tail {tail:.3g} is too large",
                tail=tail)
        self.build_series()
        dtype = np.result_type(x, y, float)
        total = np.zeros(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]), dtype=dtype)
        for exps, block in zip(self._exponents, self._blocks):
            xm = _monomial_matrix(x.astype(dtype), exps)
            ym = _monomial_matrix(y.astype(dtype), exps)
            total = total + np.einsum("...a,ab,...b->...", xm, block, ym)
        return total

    def evaluate(self, x: Vector, y: Vector) -> np.ndarray:
        """E(x, y) for arrays of points (last axis = coordinates)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y)
        if self.mode == "series":
            return self._series(x, y)
        k_axes = self.rs.axis_multiplicities()
        complex_y = np.iscomplexobj(y)
        result = np.ones(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]), dtype=complex if complex_y else float)
        for j, k in enumerate(k_axes):
            result = result * rank1_kernel(k, x[..., j] * y[..., j])
        return result

    def scaled(self, x: Vector, y: Vector) -> np.ndarray:
        """
        exp(-sum_j |x_j y_j|) E(x, y) for real x, y in closed modes and
        exp(-|x||y|) E(x, y) in series mode.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.mode == "series":
            r = np.linalg.norm(x, axis=-1) * np.linalg.norm(y, axis=-1)
            return np.real(self._series(x, y)) * np.exp(-r)
        result = np.ones(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]))
        for j, k in enumerate(self.rs.axis_multiplicities()):
            result = result * rank1_kernel(k, x[..., j] * y[..., j], scaled=True)
        return result

    def scaling_exponent(self, x: Vector, y: Vector) -> np.ndarray:
        """The exponent removed by `scaled`."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.mode == "series":
            return np.linalg.norm(x, axis=-1) * np.linalg.norm(y, axis=-1)
        return np.sum(np.abs(x * y), axis=-1)

    def log_kernel(self, x: Vector, y: Vector) -> np.ndarray:
        """log E(x, y) for real x, y."""
        return np.log(self.scaled(x, y)) + self.scaling_exponent(x, y)


def dunkl_kernel(ev: KernelEvaluator, x: Vector, y: Vector) -> complex:
    """
    E(x, y) for a real point x and a real or complex point y.

    Args:
        ev (KernelEvaluator): Evaluator
        x (Vector): Real point
        y (Vector): Real or complex point

    Returns:
        complex: The kernel value

    Raises:
        TruncationTooLarge: In series mode beyond the radius guard
    """
    value = ev.evaluate(np.asarray(x, dtype=float), np.asarray(y))
    return complex(np.asarray(value).reshape(-1)[0]) if np.ndim(value) <= 1 and np.size(value) == 1 else value


def kernel_bound_report(ev: KernelEvaluator, xs: Sequence[Vector], ys: Sequence[Vector],
                        fd_step: float = 1e-4) -> Tuple[pd.DataFrame, Dict[str, float]]:
    """
    Compare E(x, y) with the two-sided envelope
    w(B(x,1))^{-1} e^{(|x|^2+|y|^2)/2} e^{-c|x-y|^2} and ... e^{-d(x,y)^2/c}.

    Args:
        ev (KernelEvaluator): Evaluator
        xs (Sequence[Vector]): Sweep points x
        ys (Sequence[Vector]): Sweep points y
        fd_step (float): Finite-difference step for the derivative check

    Returns:
        Tuple[pd.DataFrame, Dict[str, float]]: Per-pair ratios and the summary
            (fitted c, min/max log ratios, positivity, |E(ix,y)| and
            G-invariance checks)
    """
    rs = ev.rs
    volumes: Dict[Tuple[float, ...], float] = {}
    rows = []
    for x in xs:
        x = np.asarray(x, dtype=float)
        key = tuple(np.round(x, 12))
        if key not in volumes:
            volumes[key] = ball_volume(rs, x, 1.0)
        for y in ys:
            y = np.asarray(y, dtype=float)
            log_e = float(ev.log_kernel(x, y))
            images_y = rs.group_elements @ y
            images_x = rs.group_elements @ x
            invariance = float(np.max(np.abs(ev.log_kernel(images_x, images_y) - log_e)))
            oscillatory = float(np.abs(ev.evaluate(x, 1j * y)))
            bound = float(np.max(images_x @ y))
            grad = 0.0
            for j in range(rs.dimension):
                step = np.eye(rs.dimension)[j] * fd_step
                plus = ev.log_kernel(x, y + step)
                minus = ev.log_kernel(x, y - step)
                derivative = (np.exp(plus - log_e) - np.exp(minus - log_e)) / (2 * fd_step)
                grad = max(grad, abs(float(derivative)))
            rows.append({
                "x": x.tolist(),
                "y": y.tolist(),
                "log_E": log_e,
                "log_envelope_base": (x @ x + y @ y) / 2.0 - math.log(volumes[key]),
                "euclidean_sq": float(np.sum((x - y) ** 2)),
                "orbit_sq": float(orbit_distance(rs, x, y)) ** 2,
                "invariance_defect": invariance,
                "abs_E_ix_y": oscillatory,
                "log_rosler_ratio": log_e - bound,
                "derivative_ratio": grad * math.exp(log_e - bound) / max(float(np.linalg.norm(x)), 1e-300)
                if np.linalg.norm(x) > 0 else 0.0,
            })
    table = pd.DataFrame(rows)
    if table.empty:
        return table, {}

    best = None
    for c in FIT_CANDIDATES:
        lower = table["log_E"] - table["log_envelope_base"] + c * table["euclidean_sq"]
        upper = table["log_E"] - table["log_envelope_base"] + table["orbit_sq"] / c
        spread = (lower.max() - lower.min()) + (upper.max() - upper.min())
        if best is None or spread < best[0]:
            best = (spread, c, lower, upper)
    _, c, lower, upper = best
    table["log_lower_ratio"] = lower
    table["log_upper_ratio"] = upper
    summary = {
        "fitted_c": c,
        "min_log_lower_ratio": float(lower.min()),
        "max_log_upper_ratio": float(upper.max()),
        "all_positive_finite": bool(np.all(np.isfinite(table["log_E"]))),
        "max_abs_E_ix_y": float(table["abs_E_ix_y"].max()),
        "max_invariance_defect": float(table["invariance_defect"].max()),
        "max_log_rosler_ratio": float(table["log_rosler_ratio"].max()),
        "max_derivative_ratio": float(table["derivative_ratio"].max()),
    }
    logging.info(f"Kernel bound report: {len(table)} pairs, fitted c={c}")
    return table, summary
