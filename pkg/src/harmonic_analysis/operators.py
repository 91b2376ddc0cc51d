"""
Dunkl Operators Module

This module implements the Dunkl operators T_xi and the Dunkl Laplacian on two
substrates: exactly on polynomials (multi-index coefficient maps) and by
finite differences on symmetric weighted grids, where the reflection part is
evaluated exactly through the grid's index permutations. It also provides
the operator L = d^2/dt^2 + Laplacian on (t, x) product grids.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .algebra import RootSystem, Vector, WeightedGrid
from .exceptions import DimensionMismatch, GridTooSmall

Exponent = Tuple[int, ...]

SCHEMES = ("central2", "central4")

FIRST_DERIVATIVE_STENCILS = {
    "central2": np.array([-0.5, 0.0, 0.5]),
    "central4": np.array([1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0]),
}
SECOND_DERIVATIVE_STENCILS = {
    "central2": np.array([1.0, -2.0, 1.0]),
    "central4": np.array([-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]),
}

HYPERPLANE_TOL = 1e-12


@dataclass(frozen=True)
class Polynomial:
    """A real polynomial in N variables stored as {exponent tuple: coefficient}."""

    dimension: int
    coefficients: Dict[Exponent, float] = field(default_factory=dict)

    @classmethod
    def constant(cls, dimension: int, value: float = 1.0) -> "Polynomial":
        return cls(dimension, {(0,) * dimension: float(value)} if value else {})

    @classmethod
    def monomial(cls, exponent: Sequence[int], coefficient: float = 1.0) -> "Polynomial":
        return cls(len(exponent), {tuple(int(e) for e in exponent): float(coefficient)})

    @classmethod
    def variable(cls, dimension: int, j: int) -> "Polynomial":
        exponent = [0] * dimension
        exponent[j] = 1
        return cls.monomial(exponent)

    @classmethod
    def linear_form(cls, vector: Vector) -> "Polynomial":
        vector = np.asarray(vector, dtype=float)
        n = vector.size
        return cls(n, {tuple(int(i == j) for i in range(n)): float(v)
                       for j, v in enumerate(vector) if v != 0.0})

    @classmethod
    def norm_squared(cls, dimension: int) -> "Polynomial":
        return cls(dimension, {tuple(2 * int(i == j) for i in range(dimension)): 1.0
                               for j in range(dimension)})

    @property
    def degree(self) -> int:
        if not self.coefficients:
            return -1
        return max(sum(e) for e in self.coefficients)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.coefficients.values())

    def cleaned(self, tol: float = 1e-13) -> "Polynomial":
        """Drop coefficients below tol times the largest one."""
        if not self.coefficients:
            return self
        scale = max(abs(c) for c in self.coefficients.values())
        return Polynomial(self.dimension, {e: c for e, c in self.coefficients.items()
                                           if abs(c) > tol * scale})

    def _check(self, other: "Polynomial") -> None:
        if other.dimension != self.dimension:
            raise DimensionMismatch(f"Polynomials in {self.dimension} and {other.dimension} variables")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        out = dict(self.coefficients)
        for e, c in other.coefficients.items():
            out[e] = out.get(e, 0.0) + c
        return Polynomial(self.dimension, out)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.dimension, {e: -c for e, c in self.coefficients.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: Union["Polynomial", float]) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial(self.dimension, {e: c * float(other) for e, c in self.coefficients.items()})
        self._check(other)
        out: Dict[Exponent, float] = {}
        for e1, c1 in self.coefficients.items():
            for e2, c2 in other.coefficients.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Polynomial(self.dimension, out)

    __rmul__ = __mul__

    def homogeneous_part(self, n: int) -> "Polynomial":
        return Polynomial(self.dimension, {e: c for e, c in self.coefficients.items() if sum(e) == n})

    def evaluate(self, points: Vector) -> np.ndarray:
        """Evaluate at points (last axis = coordinates); complex points are allowed."""
        points = np.asarray(points)
        if points.shape[-1] != self.dimension:
            raise DimensionMismatch(f"Expected points in R^{self.dimension}, got shape {points.shape}")
        result = np.zeros(points.shape[:-1], dtype=np.result_type(points, float))
        for e, c in self.coefficients.items():
            term = np.full(points.shape[:-1], c, dtype=result.dtype)
            for j, power in enumerate(e):
                if power:
                    term = term * points[..., j] ** power
            result = result + term
        return result

    def derivative(self, xi: Vector) -> "Polynomial":
        """Directional derivative sum_j xi_j d/dx_j."""
        xi = np.asarray(xi, dtype=float)
        if xi.size != self.dimension:
            raise DimensionMismatch(f"Direction has {xi.size} components, polynomial {self.dimension}")
        out: Dict[Exponent, float] = {}
        for e, c in self.coefficients.items():
            for j, power in enumerate(e):
                if power == 0 or xi[j] == 0.0:
                    continue
                lowered = e[:j] + (power - 1,) + e[j + 1:]
                out[lowered] = out.get(lowered, 0.0) + c * power * xi[j]
        return Polynomial(self.dimension, out)

    def compose_linear(self, matrix: np.ndarray) -> "Polynomial":
        """The polynomial x -> p(A x)."""
        matrix = np.asarray(matrix, dtype=float)
        forms = [Polynomial.linear_form(row) for row in matrix]
        powers: Dict[Tuple[int, int], Polynomial] = {}

        def power(j: int, m: int) -> Polynomial:
            if m == 0:
                return Polynomial.constant(self.dimension)
            if (j, m) not in powers:
                powers[(j, m)] = power(j, m - 1) * forms[j]
            return powers[(j, m)]

        out = Polynomial(self.dimension)
        for e, c in self.coefficients.items():
            term = Polynomial.constant(self.dimension, c)
            for j, m in enumerate(e):
                if m:
                    term = term * power(j, m)
            out = out + term
        return out

    def divide_linear(self, alpha: Vector) -> Tuple["Polynomial", float]:
        """
        Divide by the linear form <alpha, x>.

        Returns:
            Tuple[Polynomial, float]: Quotient and the largest remainder coefficient
        """
        alpha = np.asarray(alpha, dtype=float)
        pivot = int(np.argmax(np.abs(alpha)))
        remaining = dict(self.coefficients)
        quotient: Dict[Exponent, float] = {}
        while True:
            candidates = [e for e, c in remaining.items() if e[pivot] > 0 and c != 0.0]
            if not candidates:
                break
            # highest power of the pivot variable first
            e = max(candidates, key=lambda ex: (ex[pivot], ex))
            c = remaining.pop(e)
            q_exp = e[:pivot] + (e[pivot] - 1,) + e[pivot + 1:]
            q = c / alpha[pivot]
            quotient[q_exp] = quotient.get(q_exp, 0.0) + q
            for j, a_j in enumerate(alpha):
                if j == pivot or a_j == 0.0:
                    continue
                shifted = list(q_exp)
                shifted[j] += 1
                shifted = tuple(shifted)
                remaining[shifted] = remaining.get(shifted, 0.0) - q * a_j
        remainder = max((abs(c) for c in remaining.values()), default=0.0)
        return Polynomial(self.dimension, quotient), remainder

    def is_close(self, other: "Polynomial", tol: float = 1e-10) -> bool:
        return (self - other).is_zero(tol)


def _check_poly(rs: RootSystem, p: Polynomial) -> None:
    if p.dimension != rs.dimension:
        raise DimensionMismatch(f"Polynomial in {p.dimension} variables, root system in R^{rs.dimension}")


def _exact_quotient(diff: Polynomial, alpha: np.ndarray) -> Polynomial:
    quotient, remainder = diff.divide_linear(alpha)
    scale = max((abs(c) for c in diff.coefficients.values()), default=0.0)
    if remainder > 1e-9 * max(scale, 1.0):
        logging.warning(f"Difference quotient left a remainder {remainder:.3g}")
    return quotient


def dunkl_apply_poly(rs: RootSystem, xi: Vector, p: Polynomial) -> Polynomial:
    """
    Apply T_xi exactly to a polynomial.

    Args:
        rs (RootSystem): Root system
        xi (Vector): Direction
        p (Polynomial): Polynomial in rs.dimension variables

    Returns:
        Polynomial: T_xi p

    Raises:
        DimensionMismatch: If dimensions disagree
    """
    _check_poly(rs, p)
    xi = np.asarray(xi, dtype=float)
    result = p.derivative(xi)
    for alpha, k in zip(rs.positive_roots, rs.positive_multiplicities):
        c = k * float(alpha @ xi)
        if c == 0.0:
            continue
        diff = (p - p.compose_linear(rs.reflection_matrix(alpha))).cleaned(1e-15)
        if diff.is_zero():
            continue
        result = result + _exact_quotient(diff, alpha) * c
    return result.cleaned()


def laplacian_poly(rs: RootSystem, p: Polynomial, path: str = "iterated") -> Polynomial:
    """
    Apply the Dunkl Laplacian exactly to a polynomial.

    Args:
        rs (RootSystem): Root system
        p (Polynomial): Polynomial
        path (str): 'iterated' (sum of T_j^2) or 'explicit'
            (Euclidean Laplacian + 2 sum k(alpha) delta_alpha)

    Returns:
        Polynomial: The Dunkl Laplacian of p
    """
    _check_poly(rs, p)
    n = rs.dimension
    if path == "iterated":
        result = Polynomial(n)
        for j in range(n):
            e_j = np.eye(n)[j]
            result = result + dunkl_apply_poly(rs, e_j, dunkl_apply_poly(rs, e_j, p))
        return result.cleaned()
    if path != "explicit":
        raise ValueError(f"Unknown Laplacian path: {path}. Available paths: ['iterated', 'explicit']")

    result = Polynomial(n)
    for j in range(n):
        e_j = np.eye(n)[j]
        result = result + p.derivative(e_j).derivative(e_j)
    for alpha, k in zip(rs.positive_roots, rs.positive_multiplicities):
        if k == 0:
            continue
        u = Polynomial.linear_form(alpha)
        numerator = (u * p.derivative(alpha) - (p - p.compose_linear(rs.reflection_matrix(alpha)))).cleaned(1e-15)
        if numerator.is_zero():
            continue
        delta = _exact_quotient(_exact_quotient(numerator, alpha), alpha)
        result = result + delta * (2.0 * k)
    return result.cleaned()


@dataclass
class GridFunction:
    """Samples of a function on a weighted grid, with a validity mask for stencil bands."""

    grid: WeightedGrid
    values: np.ndarray
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values).reshape(self.grid.shape)
        if self.valid is None:
            self.valid = np.ones(self.grid.shape, dtype=bool)

    @classmethod
    def from_callable(cls, grid: WeightedGrid, f) -> "GridFunction":
        return cls(grid, grid.sample(f))

    def with_values(self, values: np.ndarray, valid: Optional[np.ndarray] = None) -> "GridFunction":
        return GridFunction(self.grid, values, self.valid.copy() if valid is None else valid)

    def _weights(self) -> np.ndarray:
        return np.where(self.valid, self.grid.quad_weights, 0.0)

    def integral(self) -> Union[float, complex]:
        return np.sum(self.values * self._weights())

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values) * self._weights()))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2 * self._weights())))

    def inner(self, other: "GridFunction") -> Union[float, complex]:
        """<f, g> = sum f conj(g) w h^N over points valid for both."""
        mask = self.valid & other.valid
        return np.sum(self.values * np.conj(other.values) * np.where(mask, self.grid.quad_weights, 0.0))

    def max_abs(self) -> float:
        return float(np.max(np.abs(np.where(self.valid, self.values, 0.0))))

    def real(self) -> "GridFunction":
        return self.with_values(np.real(self.values))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values, self.valid & other.valid)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values, self.valid & other.valid)

    def __mul__(self, scalar: float) -> "GridFunction":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__


@dataclass
class TimeGridFunction:
    """
    Samples u(t, x) on times x grid; values have shape (len(times),) + grid.shape.

    Times need not be uniform unless a t-stencil is applied.
    """

    grid: WeightedGrid
    times: np.ndarray
    values: np.ndarray
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values).reshape((self.times.size,) + self.grid.shape)
        if self.valid is None:
            self.valid = np.ones(self.values.shape, dtype=bool)

    def slice(self, i: int) -> GridFunction:
        return GridFunction(self.grid, self.values[i], self.valid[i])

    def with_values(self, values: np.ndarray, valid: Optional[np.ndarray] = None) -> "TimeGridFunction":
        return TimeGridFunction(self.grid, self.times, values, self.valid.copy() if valid is None else valid)

    @property
    def time_step(self) -> float:
        steps = np.diff(self.times)
        if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-9):
            raise ValueError("Time stencils need a uniform time axis")
        return float(steps[0])


def _stencil(values: np.ndarray, axis: int, coefficients: np.ndarray, step: float,
             power: int) -> Tuple[np.ndarray, np.ndarray]:
    half = coefficients.size // 2
    n = values.shape[axis]
    if n < coefficients.size:
        raise GridTooSmall(f"Axis of {n} points is shorter than a {coefficients.size}-point stencil")
    out = np.zeros(values.shape, dtype=np.result_type(values, float))
    target = [slice(None)] * values.ndim
    target[axis] = slice(half, n - half)
    for offset, c in enumerate(coefficients):
        if c == 0.0:
            continue
        source = [slice(None)] * values.ndim
        source[axis] = slice(offset, n - 2 * half + offset)
        out[tuple(target)] += c * values[tuple(source)]
    out /= step ** power
    mask = np.zeros(values.shape, dtype=bool)
    mask[tuple(target)] = True
    return out, mask


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"Unknown scheme: {scheme}. Available schemes: {list(SCHEMES)}")


def _gradient(values: np.ndarray, grid: WeightedGrid, scheme: str,
              offset_axes: int = 0) -> Tuple[List[np.ndarray], np.ndarray]:
    grads, mask = [], np.ones(values.shape, dtype=bool)
    for j in range(grid.dimension):
        d, m = _stencil(values, offset_axes + j, FIRST_DERIVATIVE_STENCILS[scheme], grid.spacing, 1)
        grads.append(d)
        mask &= m
    return grads, mask


def reflection_element(rs: RootSystem, alpha: np.ndarray) -> int:
    """Index in rs.group_elements of the reflection in alpha."""
    target = rs.reflection_matrix(alpha)
    gaps = np.abs(rs.group_elements - target).reshape(rs.order, -1).max(axis=1)
    return int(np.argmin(gaps))


def _root_projection(grid: WeightedGrid, alpha: np.ndarray) -> np.ndarray:
    return (grid.points @ alpha).reshape(grid.shape)


def _broadcast(array: np.ndarray, target: np.ndarray) -> np.ndarray:
    return array.reshape((1,) * (target.ndim - array.ndim) + array.shape)


def _dunkl_values(rs: RootSystem, xi: np.ndarray, values: np.ndarray, grid: WeightedGrid,
                  scheme: str, offset_axes: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    grads, mask = _gradient(values, grid, scheme, offset_axes)
    out = sum(x * g for x, g in zip(xi, grads))
    for alpha, k in zip(rs.positive_roots, rs.positive_multiplicities):
        c = k * float(alpha @ xi)
        if c == 0.0:
            continue
        u = _broadcast(_root_projection(grid, alpha), values)
        reflected = _compose_trailing(values, grid, reflection_element(rs, alpha), offset_axes)
        limit = sum(a * g for a, g in zip(alpha, grads))
        on_plane = np.abs(u) <= HYPERPLANE_TOL
        quotient = np.where(on_plane, limit, (values - reflected) / np.where(on_plane, 1.0, u))
        out = out + c * quotient
    return out, mask


def _compose_trailing(values: np.ndarray, grid: WeightedGrid, element: int, offset_axes: int) -> np.ndarray:
    lead = values.shape[:offset_axes]
    flat = values.reshape(lead + (grid.size,))
    return flat[..., grid.reflection_indices[element]].reshape(values.shape)


def dunkl_apply_grid(rs: RootSystem, xi: Vector, f: GridFunction, scheme: str = "central4") -> GridFunction:
    """
    Apply T_xi to grid samples.

    The derivative part uses central differences; the reflection part is exact
    through index lookup, with the removable singularity on hyperplanes
    filled by the stencil estimate of the directional derivative.

    Args:
        rs (RootSystem): Root system
        xi (Vector): Direction
        f (GridFunction): Samples
        scheme (str): 'central2' or 'central4'

    Returns:
        GridFunction: T_xi f, invalid on the stencil boundary band

    Raises:
        GridTooSmall: If an axis is shorter than the stencil
    """
    _check_scheme(scheme)
    xi = np.asarray(xi, dtype=float)
    if xi.size != rs.dimension:
        raise DimensionMismatch(f"Direction has {xi.size} components, root system {rs.dimension}")
    out, mask = _dunkl_values(rs, xi, f.values, f.grid, scheme)
    return GridFunction(f.grid, out, mask & f.valid)


def _directional_second(values: np.ndarray, grid: WeightedGrid, alpha: np.ndarray, scheme: str,
                        offset_axes: int) -> Tuple[np.ndarray, np.ndarray]:
    out = np.zeros(values.shape, dtype=np.result_type(values, float))
    mask = np.ones(values.shape, dtype=bool)
    for i in range(grid.dimension):
        if alpha[i] == 0.0:
            continue
        for j in range(grid.dimension):
            if alpha[j] == 0.0:
                continue
            if i == j:
                d, m = _stencil(values, offset_axes + i, SECOND_DERIVATIVE_STENCILS[scheme], grid.spacing, 2)
            else:
                first, m1 = _stencil(values, offset_axes + i, FIRST_DERIVATIVE_STENCILS[scheme], grid.spacing, 1)
                d, m = _stencil(first, offset_axes + j, FIRST_DERIVATIVE_STENCILS[scheme], grid.spacing, 1)
                m &= m1
            out += alpha[i] * alpha[j] * d
            mask &= m
    return out, mask


def _laplacian_values(rs: RootSystem, values: np.ndarray, grid: WeightedGrid, scheme: str,
                      offset_axes: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    out = np.zeros(values.shape, dtype=np.result_type(values, float))
    mask = np.ones(values.shape, dtype=bool)
    for j in range(grid.dimension):
        d, m = _stencil(values, offset_axes + j, SECOND_DERIVATIVE_STENCILS[scheme], grid.spacing, 2)
        out += d
        mask &= m
    active = [(a, k) for a, k in zip(rs.positive_roots, rs.positive_multiplicities) if k != 0]
    if not active:
        return out, mask
    grads, gmask = _gradient(values, grid, scheme, offset_axes)
    mask &= gmask
    for alpha, k in active:
        u = _broadcast(_root_projection(grid, alpha), values)
        on_plane = np.abs(u) <= HYPERPLANE_TOL
        reflected = _compose_trailing(values, grid, reflection_element(rs, alpha), offset_axes)
        d_alpha = sum(a * g for a, g in zip(alpha, grads))
        safe = np.where(on_plane, 1.0, u)
        delta = d_alpha / safe - (values - reflected) / safe ** 2
        if np.any(on_plane):
            second, smask = _directional_second(values, grid, alpha, scheme, offset_axes)
            delta = np.where(on_plane, 0.5 * second, delta)
            mask &= smask | ~np.broadcast_to(on_plane, mask.shape)
        out += 2.0 * k * delta
    return out, mask


def laplacian_grid(rs: RootSystem, f: GridFunction, scheme: str = "central4") -> GridFunction:
    """
    Dunkl Laplacian of grid samples by the explicit formula
    Laplacian_eucl f + 2 sum k(alpha) delta_alpha f, with
    delta_alpha f = d_alpha f / <alpha,x> - (f - f o sigma_alpha) / <alpha,x>^2
    and its limit (1/2) d_alpha^2 f on hyperplanes.

    Args:
        rs (RootSystem): Root system
        f (GridFunction): Samples
        scheme (str): 'central2' or 'central4'

    Returns:
        GridFunction: Laplacian of f, invalid on the stencil boundary band
    """
    _check_scheme(scheme)
    out, mask = _laplacian_values(rs, f.values, f.grid, scheme)
    return GridFunction(f.grid, out, mask & f.valid)


def time_derivative(u: TimeGridFunction, scheme: str = "central4") -> TimeGridFunction:
    """T_0 u = du/dt by central differences along the uniform time axis."""
    _check_scheme(scheme)
    d, mask = _stencil(u.values, 0, FIRST_DERIVATIVE_STENCILS[scheme], u.time_step, 1)
    return u.with_values(d, mask & u.valid)


def dunkl_apply_slices(rs: RootSystem, xi: Vector, u: TimeGridFunction, scheme: str = "central4") -> TimeGridFunction:
    """Apply T_xi to every time slice of u."""
    _check_scheme(scheme)
    xi = np.asarray(xi, dtype=float)
    out, mask = _dunkl_values(rs, xi, u.values, u.grid, scheme, offset_axes=1)
    return u.with_values(out, mask & u.valid)


def operator_L_grid(rs: RootSystem, u: TimeGridFunction, scheme: str = "central4") -> TimeGridFunction:
    """
    Apply L = d^2/dt^2 + Dunkl Laplacian on a (t, x) product grid.

    Args:
        rs (RootSystem): Root system
        u (TimeGridFunction): Samples on a uniform time axis
        scheme (str): 'central2' or 'central4'

    Returns:
        TimeGridFunction: L u, invalid on boundary time slices and space bands

    Raises:
        GridTooSmall: If the time axis is shorter than the stencil
    """
    _check_scheme(scheme)
    dtt, tmask = _stencil(u.values, 0, SECOND_DERIVATIVE_STENCILS[scheme], u.time_step, 2)
    lap, xmask = _laplacian_values(rs, u.values, u.grid, scheme, offset_axes=1)
    return u.with_values(dtt + lap, tmask & xmask & u.valid)
