"""
Special Functions and Quadrature Module

This module provides the special functions and quadrature rules used by the
kernel, transform and semigroup modules: a Lanczos Gamma function, the
confluent hypergeometric function 1F1 for real and complex arguments,
normalized Bessel functions, Gauss-Legendre rules and adaptive finite and
semi-infinite quadrature for scalar or array-valued integrands.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Tuple, Union

import numpy as np
from scipy import special as sp

from .exceptions import GammaOverflow, NotConverged, PoleAtB, QuadratureNotConverged

# Lanczos approximation, g = 7, nine coefficients
LANCZOS_G = 7.0
LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

GAMMA_MAX_ARGUMENT = 170.0
HYP1F1_MAX_TERMS = 10000
HYP1F1_Z_CAP = 50.0
# above this |z| the series cancels on the imaginary axis
HYP1F1_INTEGRAL_Z = 8.0
HYP1F1_JACOBI_NODES = 128
DEFAULT_QUAD_TOL = 1e-8

DECAY_TYPES = ("gaussian", "exponential", "power")

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights of a quadrature rule on a finite interval."""

    nodes: np.ndarray
    weights: np.ndarray
    domain: Tuple[float, float] = (-1.0, 1.0)

    def scaled(self, a: float, b: float) -> "QuadratureRule":
        """Map the rule affinely onto [a, b]."""
        lo, hi = self.domain
        scale = (b - a) / (hi - lo)
        nodes = a + (self.nodes - lo) * scale
        return QuadratureRule(nodes=nodes, weights=self.weights * scale, domain=(a, b))

    def integrate(self, f: Integrand) -> Union[float, np.ndarray]:
        """Apply the rule to f, which maps the node array to values (first axis = nodes)."""
        values = np.asarray(f(self.nodes))
        return np.tensordot(self.weights, values, axes=(0, 0))


@lru_cache(maxsize=64)
def _leggauss(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@lru_cache(maxsize=64)
def _jacobi(n: int, alpha: float, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = sp.roots_jacobi(n, alpha, beta)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _hyp1f1_euler(a: float, b: float, z: complex) -> complex:
    """Euler integral of 1F1 for b > a > 0, by Gauss-Jacobi quadrature on [0, 1]."""
    nodes, weights = _jacobi(HYP1F1_JACOBI_NODES, b - a - 1.0, a - 1.0)
    integral = complex(np.sum(weights * np.exp(0.5 * z * (1.0 + nodes))))
    log_norm = sp.gammaln(b) - sp.gammaln(a) - sp.gammaln(b - a) + (1.0 - b) * math.log(2.0)
    return math.exp(log_norm) * integral


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    """
    Build the n-point Gauss-Legendre rule on [a, b].

    Args:
        n (int): Number of nodes (exact for polynomials of degree 2n-1)
        a (float): Left end of the interval
        b (float): Right end of the interval

    Returns:
        QuadratureRule: The rule
    """
    if n < 1:
        raise ValueError(f"Gauss-Legendre rule needs n >= 1, got {n}")
    nodes, weights = _leggauss(n)
    return QuadratureRule(nodes=np.array(nodes), weights=np.array(weights)).scaled(a, b)


def gamma_fn(x: float) -> float:
    """
    Gamma function by the Lanczos approximation (g=7, 9 terms).

    Args:
        x (float): Argument, 0 < x <= 170

    Returns:
        float: Gamma(x)

    Raises:
        ValueError: If x <= 0
        GammaOverflow: If x > 170
    """
    if x <= 0:
        raise ValueError(f"gamma_fn needs x > 0, got {x}")
    if x > GAMMA_MAX_ARGUMENT:
        raise GammaOverflow(f"Gamma({x}) overflows (argument cap {GAMMA_MAX_ARGUMENT})")
    if x < 0.5:
        # reflection keeps the series in its accurate range
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))

    z = x - 1.0
    series = LANCZOS_COEFFICIENTS[0]
    for i, coefficient in enumerate(LANCZOS_COEFFICIENTS[1:], start=1):
        series += coefficient / (z + i)
    t = z + LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * math.exp((z + 0.5) * math.log(t) - t) * series


def _is_nonpositive_integer(b: float) -> bool:
    return b <= 0 and float(b).is_integer()


def hyp1f1(a: float, b: float, z: Union[float, complex], tol: float = 1e-14) -> Union[float, complex]:
    """
    Confluent hypergeometric function 1F1(a; b; z) by its Taylor series.

    Kummer's transformation 1F1(a,b,z) = e^z 1F1(b-a,b,-z) is applied when
    Re z < 0. The series stops once the geometric tail bound drops below
    tol times the partial sum. For |z| >= 8 and b > a > 0 the Euler integral
    Gamma(b) / (Gamma(a) Gamma(b-a)) int_0^1 e^(zu) u^(a-1) (1-u)^(b-a-1) du
    replaces the series, which cancels near the imaginary axis. Real input
    gives a float, complex input a complex number.

    Args:
        a (float): Upper parameter
        b (float): Lower parameter, not a nonpositive integer
        z (float | complex): Argument, |z| <= 50
        tol (float): Relative truncation tolerance

    Returns:
        float | complex: The function value

    Raises:
        PoleAtB: If b is 0, -1, -2, ...
        NotConverged: If |z| exceeds the cap or cancellation destroys the result
    """
    if _is_nonpositive_integer(b):
        raise PoleAtB(f"1F1 has a pole at b={b}")
    is_complex = isinstance(z, complex) or np.iscomplexobj(z)
    z = complex(z)
    if abs(z) > HYP1F1_Z_CAP:
        raise NotConverged(f"|z|={abs(z):.3g} exceeds the 1F1 series cap {HYP1F1_Z_CAP}")
    if abs(z) >= HYP1F1_INTEGRAL_Z and b > a > 0:
        value = _hyp1f1_euler(a, b, z)
        return value if is_complex else value.real

    prefactor = 1.0 + 0.0j
    if z.real < 0:
        prefactor = cmath.exp(z)
        a, z = b - a, -z

    term = 1.0 + 0.0j
    total = 1.0 + 0.0j
    largest = 1.0
    for n in range(HYP1F1_MAX_TERMS):
        ratio = (a + n) / (b + n) * z / (n + 1)
        term *= ratio
        total += term
        largest = max(largest, abs(term))
        r = abs((a + n + 1) / (b + n + 1) * z / (n + 2))
        if term == 0 or (r < 1 and abs(term) * r / (1 - r) <= tol * abs(total)):
            break
    else:
        raise NotConverged(f"1F1({a},{b},{z}) did not converge in {HYP1F1_MAX_TERMS} terms",
                           estimate=prefactor * total)

    if largest * 1e-16 > 1e-10 * abs(total):
        raise NotConverged(f"1F1({a},{b},{z}) lost accuracy to cancellation",
                           estimate=prefactor * total, error=largest * 1e-16)

    value = prefactor * total
    return value if is_complex else value.real


def hyp1f1_small(a: float, b: float, z: np.ndarray, max_terms: int = 200) -> np.ndarray:
    """
    Vectorized 1F1 series for arrays with |z| of order one.

    Args:
        a (float): Upper parameter
        b (float): Lower parameter
        z (np.ndarray): Arguments (real or complex)
        max_terms (int): Series length cap

    Returns:
        np.ndarray: 1F1(a; b; z) elementwise
    """
    if _is_nonpositive_integer(b):
        raise PoleAtB(f"1F1 has a pole at b={b}")
    z = np.asarray(z)
    term = np.ones_like(z, dtype=np.result_type(z, float))
    total = term.copy()
    for n in range(max_terms):
        term = term * ((a + n) / (b + n)) * z / (n + 1)
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def normalized_bessel_j(nu: float, z: np.ndarray) -> np.ndarray:
    """
    Normalized Bessel function j_nu(z) = Gamma(nu+1) (2/z)^nu J_nu(z), with j_nu(0) = 1.

    Args:
        nu (float): Order, nu > -1
        z (np.ndarray): Nonnegative arguments

    Returns:
        np.ndarray: j_nu(z)
    """
    z = np.abs(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    small = z < 1e-4
    zs = z[small]
    out[small] = 1.0 - zs ** 2 / (4.0 * (nu + 1.0)) + zs ** 4 / (32.0 * (nu + 1.0) * (nu + 2.0))
    zl = z[~small]
    out[~small] = sp.gamma(nu + 1.0) * (2.0 / zl) ** nu * sp.jv(nu, zl)
    return out


def _panel_sum(f: Integrand, edges: np.ndarray, order: int) -> Union[float, np.ndarray]:
    nodes, weights = _leggauss(order)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    points = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    w = (half[:, None] * weights[None, :]).ravel()
    values = np.asarray(f(points.ravel()))
    return np.tensordot(w, values, axes=(0, 0))


def _converged(previous, current, tol: float, rtol: float) -> Tuple[bool, float]:
    error = float(np.max(np.abs(np.asarray(current) - np.asarray(previous))))
    scale = float(np.max(np.abs(np.asarray(current)))) if np.size(current) else 0.0
    return error <= max(tol, rtol * scale), error


def composite_quad(f: Integrand, breakpoints: Sequence[float], order: int = 20) -> Union[float, np.ndarray]:
    """
    Gauss-Legendre rule of the given order on every panel between breakpoints.

    Args:
        f (Callable): Vectorized integrand (first output axis = nodes)
        breakpoints (Sequence[float]): Increasing panel edges
        order (int): Nodes per panel

    Returns:
        float | np.ndarray: The integral
    """
    edges = np.asarray(sorted(set(float(b) for b in breakpoints)))
    if edges.size < 2:
        return 0.0
    return _panel_sum(f, edges, order)


def _split(edges: np.ndarray) -> np.ndarray:
    mids = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(edges.size + mids.size)
    out[0::2] = edges
    out[1::2] = mids
    return out


def adaptive_quad(f: Integrand, a: float, b: float, tol: float = DEFAULT_QUAD_TOL,
                  rtol: float = 1e-10, breakpoints: Iterable[float] = (), order: int = 20,
                  max_level: int = 10) -> Union[float, np.ndarray]:
    """
    Composite Gauss-Legendre quadrature on [a, b], halving every panel until
    two successive levels agree.

    Args:
        f (Callable): Vectorized integrand
        a (float): Lower limit
        b (float): Upper limit
        tol (float): Absolute tolerance
        rtol (float): Relative tolerance on the largest component
        breakpoints (Iterable[float]): Interior points where f is not smooth
        order (int): Nodes per panel
        max_level (int): Maximum number of halvings

    Returns:
        float | np.ndarray: The integral

    Raises:
        QuadratureNotConverged: If max_level halvings do not reach tolerance
    """
    inner = [p for p in breakpoints if a < p < b]
    edges = np.asarray(sorted(set([a, b] + inner)), dtype=float)
    previous = _panel_sum(f, edges, order)
    error = float("inf")
    for _ in range(max_level):
        edges = _split(edges)
        current = _panel_sum(f, edges, order)
        ok, error = _converged(previous, current, tol, rtol)
        if ok:
            return current
        previous = current
    raise QuadratureNotConverged(f"Quadrature on [{a}, {b}] did not converge (error {error:.3g})",
                                 estimate=previous, error=error)


def _geometric_edges(upper: float, levels: int) -> np.ndarray:
    return np.concatenate(([0.0], upper * 2.0 ** -np.arange(levels, -1, -1, dtype=float)))


def semi_infinite_quad(f: Integrand, decay: str = "exponential", tol: float = DEFAULT_QUAD_TOL,
                       scale: float = 1.0, order: int = 20, levels: int = 40,
                       max_level: int = 6) -> Union[float, np.ndarray]:
    """
    Integrate f over (0, inf) by a substitution onto a finite interval and
    adaptive Gauss-Legendre quadrature.

    Geometric panels accumulate at the lower end (and at the upper end for
    power decay), which resolves integrable endpoint singularities and
    narrow peaks near zero.

    Args:
        f (Callable): Vectorized integrand on (0, inf)
        decay (str): 'exponential' (f ~ e^{-u/scale}), 'gaussian'
            (f ~ e^{-(u/scale)^2/2}) or 'power' (f ~ u^{-p}, p > 1)
        tol (float): Absolute tolerance
        scale (float): Length scale of the decay
        order (int): Nodes per panel
        levels (int): Number of geometric panels
        max_level (int): Maximum number of panel halvings

    Returns:
        float | np.ndarray: The integral

    Raises:
        ValueError: For an unknown decay type
        NotConverged: With the best estimate and error if tolerance is not met
    """
    if decay not in DECAY_TYPES:
        raise ValueError(f"Unknown decay type: {decay}. Available types: {list(DECAY_TYPES)}")

    cutoff = math.log(1.0 / min(tol, 1e-8)) + 40.0
    if decay == "exponential":
        upper = math.sqrt(cutoff)
        g = lambda s: _broadcast_jacobian(f(scale * s * s), 2.0 * scale * s)
        edges = _geometric_edges(upper, levels)
    elif decay == "gaussian":
        upper = math.sqrt(2.0 * cutoff)
        g = lambda s: _broadcast_jacobian(f(scale * s), np.full_like(s, scale))
        edges = _geometric_edges(upper, levels)
    else:
        def g(s):
            return _broadcast_jacobian(f(scale * s / (1.0 - s)), scale / (1.0 - s) ** 2)
        lower = 0.5 * 2.0 ** -np.arange(levels, 0, -1, dtype=float)
        edges = np.concatenate(([0.0], lower, [0.5], 1.0 - lower[::-1]))

    previous = _panel_sum(g, edges, order)
    error = float("inf")
    for _ in range(max_level):
        edges = _split(edges)
        current = _panel_sum(g, edges, order)
        ok, error = _converged(previous, current, tol, 1e-12)
        if ok:
            return current
        previous = current
    logging.warning(f"semi_infinite_quad ({decay}) stopped with error {error:.3g}")
    raise NotConverged(f"Semi-infinite quadrature ({decay}) did not converge (error {error:.3g})",
                       estimate=previous, error=error)


def _broadcast_jacobian(values, jacobian: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    return values * jacobian.reshape(jacobian.shape + (1,) * (values.ndim - 1))
