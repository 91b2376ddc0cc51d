"""
Root Systems and Orbit Geometry Module

This module builds normalized root systems and their reflection groups and
provides the geometry every other module rests on: the weight w, the orbit
distance d, volumes of balls for the measure dw = w(x)dx and the symmetric
weighted grids on which functions are sampled.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import (
    DimensionMismatch,
    GridTooSmall,
    GroupExplosion,
    NotARootSystem,
    QuadratureNotConverged,
    UnsupportedRootSystem,
)

ROOT_NORM_SQUARED = 2.0
DEFAULT_GROUP_CAP = 1024
DEFAULT_AXIS_CAP = 4096
MATRIX_HASH_DECIMALS = 10

PRESETS = ("rank1", "z2^N", "product", "dihedral", "b2", "custom")

Vector = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class RootSystem:
    """
    A normalized root system with its multiplicity function and reflection group.

    Roots are stored as rows with squared norm 2; the reflection in a root is
    then x - <alpha, x> alpha.
    """

    name: str
    dimension: int
    roots: np.ndarray
    multiplicities: np.ndarray
    positive_mask: np.ndarray
    group_elements: np.ndarray
    scale_factors: np.ndarray = field(default_factory=lambda: np.ones(0))

    @property
    def positive_roots(self) -> np.ndarray:
        return self.roots[self.positive_mask]

    @property
    def positive_multiplicities(self) -> np.ndarray:
        return self.multiplicities[self.positive_mask]

    @property
    def gamma(self) -> float:
        return float(np.sum(self.positive_multiplicities))

    @property
    def homogeneous_dimension(self) -> float:
        return self.dimension + 2.0 * self.gamma

    @property
    def order(self) -> int:
        return int(self.group_elements.shape[0])

    @property
    def is_euclidean(self) -> bool:
        return bool(np.all(self.multiplicities == 0))

    @property
    def is_product(self) -> bool:
        """True when every root lies on a coordinate axis (rank 1 and Z2^N)."""
        return bool(np.all(np.count_nonzero(np.abs(self.roots) > 1e-12, axis=1) == 1))

    @property
    def is_hyperoctahedral(self) -> bool:
        """True when every group element is a signed permutation matrix."""
        g = np.abs(self.group_elements)
        return bool(np.all((np.abs(g - 1.0) < 1e-9) | (g < 1e-9)))

    def axis_multiplicities(self) -> np.ndarray:
        """Per-axis multiplicity k_j of a product root system."""
        if not self.is_product:
            raise UnsupportedRootSystem(f"{self.name} is not a product root system")
        k = np.zeros(self.dimension)
        for root, mult in zip(self.positive_roots, self.positive_multiplicities):
            k[int(np.argmax(np.abs(root)))] = mult
        return k

    def reflection_matrix(self, alpha: np.ndarray) -> np.ndarray:
        return np.eye(self.dimension) - np.outer(alpha, alpha) * (2.0 / float(alpha @ alpha))

    def reflect(self, alpha: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Reflect points x (last axis = coordinates) in the hyperplane orthogonal to alpha."""
        x = np.asarray(x, dtype=float)
        return x - np.multiply.outer(x @ alpha, alpha) * (2.0 / float(alpha @ alpha))


def _generic_direction(dimension: int) -> np.ndarray:
    return np.array([1.0 + math.sqrt(2.0 + j) / (7.0 + j) for j in range(dimension)]) * \
        np.array([10.0 ** (-j) for j in range(dimension)])


def _matrix_key(matrix: np.ndarray) -> bytes:
    # +0.0 folds negative zeros so rounding residues share a key
    return (np.round(matrix, MATRIX_HASH_DECIMALS) + 0.0).tobytes()


def generate_group(roots: np.ndarray, cap: int = DEFAULT_GROUP_CAP) -> np.ndarray:
    """
    Generate the reflection group by breadth-first closure over the root reflections.

    Args:
        roots (np.ndarray): Roots as rows
        cap (int): Maximum number of group elements

    Returns:
        np.ndarray: Group elements, identity first, in breadth-first order

    Raises:
        GroupExplosion: If the closure exceeds the cap
    """
    dimension = roots.shape[1]
    generators = [np.eye(dimension) - np.outer(a, a) * (2.0 / float(a @ a)) for a in roots]
    identity = np.eye(dimension)
    elements = [identity]
    seen = {_matrix_key(identity)}
    frontier = [identity]
    while frontier:
        next_frontier = []
        for g in frontier:
            for s in generators:
                h = s @ g
                key = _matrix_key(h)
                if key in seen:
                    continue
                seen.add(key)
                elements.append(h)
                next_frontier.append(h)
                if len(elements) > cap:
                    raise GroupExplosion(f"Reflection group exceeds {cap} elements")
        frontier = next_frontier
    return np.array(elements)


def _validate_roots(roots: np.ndarray, multiplicities: np.ndarray, tol: float = 1e-9) -> None:
    for alpha in roots:
        reflected = roots - np.outer(roots @ alpha, alpha)
        for beta, k_beta in zip(reflected, multiplicities):
            distances = np.linalg.norm(roots - beta, axis=1)
            match = int(np.argmin(distances))
            if distances[match] > tol:
                raise NotARootSystem(f"Reflection of a root in {alpha.round(6).tolist()} is not a root")
            if abs(multiplicities[match] - k_beta) > 1e-12:
                raise NotARootSystem("Multiplicity is not constant on reflection orbits of roots")


def _assemble(name: str, roots: List[np.ndarray], mults: List[float],
              scale_factors: Optional[List[float]] = None, cap: int = DEFAULT_GROUP_CAP) -> RootSystem:
    roots_arr = np.array(roots, dtype=float)
    mults_arr = np.array(mults, dtype=float)
    if np.any(mults_arr < 0):
        raise ValueError(f"Multiplicities must be nonnegative, got {mults_arr.tolist()}")
    _validate_roots(roots_arr, mults_arr)

    direction = _generic_direction(roots_arr.shape[1])
    projections = roots_arr @ direction
    if np.any(np.abs(projections) < 1e-12):
        raise NotARootSystem("Could not separate positive roots")
    group = generate_group(roots_arr, cap=cap)
    for g in group:
        if not np.allclose(g @ g.T, np.eye(g.shape[0]), atol=1e-12):
            raise NotARootSystem("Generated group element is not orthogonal")

    rs = RootSystem(
        name=name,
        dimension=roots_arr.shape[1],
        roots=roots_arr,
        multiplicities=mults_arr,
        positive_mask=projections > 0,
        group_elements=group,
        scale_factors=np.array(scale_factors if scale_factors is not None else np.ones(len(roots))),
    )
    logging.info(f"Built root system {name}: |R|={len(roots)}, |G|={rs.order}, "
                 f"gamma={rs.gamma:g}, homogeneous dimension={rs.homogeneous_dimension:g}")
    return rs


def _with_negatives(roots: List[np.ndarray], mults: List[float]) -> Tuple[List[np.ndarray], List[float], List[int]]:
    """Close a root list under negation; the third list gives the input index each root came from."""
    out_roots, out_mults, origins = [], [], []
    for index, (root, mult) in enumerate(zip(roots, mults)):
        for candidate in (root, -root):
            if not any(np.allclose(candidate, r, atol=1e-9) for r in out_roots):
                out_roots.append(candidate)
                out_mults.append(mult)
                origins.append(index)
    return out_roots, out_mults, origins


def _as_list(k: Union[float, Sequence[float]]) -> List[float]:
    if np.isscalar(k):
        return [float(k)]
    return [float(v) for v in k]


def build_root_system(preset: str, k: Union[float, Sequence[float], None] = None,
                      roots: Optional[Sequence[Vector]] = None,
                      multiplicities: Optional[Sequence[float]] = None,
                      dimension: Optional[int] = None,
                      group_cap: int = DEFAULT_GROUP_CAP) -> RootSystem:
    """
    Build a validated root system from a preset id.

    Args:
        preset (str): 'rank1', 'z2^N' (or 'product'), 'dihedral:m', 'b2' or 'custom'
        k (float | Sequence[float]): Multiplicities; one per axis for products,
            one or two classes for dihedral groups, (k1, k2) for b2
        roots (Sequence): Custom roots (rescaled to squared norm 2)
        multiplicities (Sequence[float]): Custom multiplicities, one per root
        dimension (int): Dimension for 'z2^N' when k is a scalar
        group_cap (int): Maximum reflection group size

    Returns:
        RootSystem: The validated root system

    Raises:
        ValueError: For an unknown preset or invalid multiplicities
        NotARootSystem: If the reflection closure fails
        GroupExplosion: If the group exceeds group_cap
    """
    root2 = math.sqrt(ROOT_NORM_SQUARED)
    family, _, parameter = preset.partition(":")

    if family == "rank1":
        value = _as_list(0.0 if k is None else k)[0]
        return _assemble("rank1", [np.array([root2]), np.array([-root2])], [value, value], cap=group_cap)

    if family in ("z2^N", "product"):
        ks = _as_list(0.0 if k is None else k)
        if len(ks) == 1 and dimension:
            ks = ks * dimension
        n = len(ks)
        base = [root2 * np.eye(n)[j] for j in range(n)]
        rs_roots, rs_mults, _ = _with_negatives(base, ks)
        return _assemble(f"z2^{n}", rs_roots, rs_mults, cap=group_cap)

    if family in ("dihedral", "b2"):
        m = 4 if family == "b2" else int(parameter or 0)
        if m < 1:
            raise ValueError(f"Dihedral preset needs m >= 1, got '{preset}'")
        ks = _as_list(0.0 if k is None else k)
        if len(ks) == 1:
            ks = ks * 2
        if m % 2 == 1 and abs(ks[0] - ks[1]) > 1e-12:
            raise NotARootSystem(f"Dihedral group of odd order {m} has a single root class")
        base, base_mults = [], []
        for j in range(m):
            angle = j * math.pi / m
            base.append(root2 * np.array([-math.sin(angle), math.cos(angle)]))
            base_mults.append(ks[j % 2])
        rs_roots, rs_mults, _ = _with_negatives(base, base_mults)
        return _assemble(family if family == "b2" else f"dihedral:{m}", rs_roots, rs_mults, cap=group_cap)

    if family == "custom":
        if not roots:
            raise ValueError("Custom preset requires 'roots'")
        mults = list(multiplicities) if multiplicities is not None else [0.0] * len(roots)
        if len(mults) != len(roots):
            raise ValueError(f"Got {len(roots)} roots but {len(mults)} multiplicities")
        normalized, scales = [], []
        for root in roots:
            root = np.asarray(root, dtype=float)
            norm = float(np.linalg.norm(root))
            if norm == 0:
                raise ValueError("Custom roots must be nonzero")
            scale = root2 / norm
            normalized.append(root * scale)
            scales.append(scale)
        if any(abs(s - 1.0) > 1e-12 for s in scales):
            logging.info(f"Rescaled custom roots to squared norm 2 (factors {np.round(scales, 6).tolist()})")
        rs_roots, rs_mults, origins = _with_negatives(normalized, mults)
        rs_scales = [scales[i] for i in origins]
        return _assemble("custom", rs_roots, rs_mults, scale_factors=rs_scales, cap=group_cap)

    raise ValueError(f"Unknown root system preset: {preset}. Available presets: {list(PRESETS)}")


def _check_dimension(rs: RootSystem, x: np.ndarray) -> None:
    if x.shape[-1] != rs.dimension:
        raise DimensionMismatch(f"Expected vectors in R^{rs.dimension}, got shape {x.shape}")


def weight(rs: RootSystem, x: Vector) -> Union[float, np.ndarray]:
    """
    The weight w(x) = prod over all roots of |<alpha, x>|^{k(alpha)}.

    Args:
        rs (RootSystem): Root system
        x (Vector): A point or an array of points (last axis = coordinates)

    Returns:
        float | np.ndarray: w(x)
    """
    x = np.asarray(x, dtype=float)
    _check_dimension(rs, x)
    result = np.ones(x.shape[:-1])
    for alpha, k in zip(rs.positive_roots, rs.positive_multiplicities):
        if k == 0:
            continue
        result = result * np.abs(x @ alpha) ** (2.0 * k)
    return float(result) if result.ndim == 0 else result


def orbit(rs: RootSystem, x: Vector) -> np.ndarray:
    """Distinct images of x under the reflection group."""
    x = np.asarray(x, dtype=float)
    images = rs.group_elements @ x
    unique: List[np.ndarray] = []
    for image in images:
        if not any(np.allclose(image, u, atol=1e-12) for u in unique):
            unique.append(image)
    return np.array(unique)


def orbit_distance(rs: RootSystem, x: Vector, y: Vector) -> Union[float, np.ndarray]:
    """
    Orbit distance d(x, y) = min over the group of ||x - sigma(y)||.

    Args:
        rs (RootSystem): Root system
        x (Vector): Point or array of points
        y (Vector): Point or array of points (broadcast against x)

    Returns:
        float | np.ndarray: d(x, y)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_dimension(rs, x)
    _check_dimension(rs, y)
    lead = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    x = np.broadcast_to(x, lead + (rs.dimension,))
    y = np.broadcast_to(y, lead + (rs.dimension,))
    images = np.einsum("gij,...j->g...i", rs.group_elements, y)
    distances = np.linalg.norm(x[None, ...] - images, axis=-1)
    result = distances.min(axis=0)
    return float(result) if np.ndim(result) == 0 else result


def _graded_rule(p: float, q: float, order: int, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    # graded at both ends: x = p + (q - p) * phi(s), phi(s) = s^3 / (s^3 + (1 - s)^3)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    s = (0.5 * (edges[:-1] + edges[1:]))[:, None] + (0.5 * np.diff(edges))[:, None] * nodes[None, :]
    ws = (0.5 * np.diff(edges))[:, None] * weights[None, :]
    s, ws = s.ravel(), ws.ravel()
    num, den = s ** 3, s ** 3 + (1.0 - s) ** 3
    phi = num / den
    dphi = 3.0 * s ** 2 * (1.0 - s) ** 2 / den ** 2
    return p + (q - p) * phi, ws * (q - p) * dphi


def _ball_integral(rs: RootSystem, center: np.ndarray, r: float, order: int, panels: int) -> float:
    dimension = rs.dimension
    positive = rs.positive_roots
    mults = rs.positive_multiplicities

    def integrate(level: int, fixed: np.ndarray, radius: float) -> float:
        c = center[level]
        support = [(a, k) for a, k in zip(positive, mults)
                   if abs(a[level]) > 1e-14 and np.all(np.abs(a[level + 1:]) < 1e-14)]
        cuts = []
        for alpha, _ in support:
            crossing = -float(alpha[:level] @ fixed) / alpha[level]
            if c - radius < crossing < c + radius:
                cuts.append(crossing)

        if level == dimension - 1:
            edges = sorted(set([c - radius, c + radius] + cuts))
            total = 0.0
            for p, q in zip(edges[:-1], edges[1:]):
                xs, ws = _graded_rule(p, q, order, panels)
                points = np.empty((xs.size, dimension))
                points[:, :level] = fixed
                points[:, level] = xs
                total += float(ws @ np.atleast_1d(weight(rs, points)))
            return total

        # x_level = c + radius sin(theta) removes the square-root edge of the inner chords
        edges = [-0.5 * math.pi, 0.5 * math.pi]
        edges += [math.asin(max(-1.0, min(1.0, (b - c) / radius))) for b in cuts]
        edges = sorted(set(edges))
        total = 0.0
        for p, q in zip(edges[:-1], edges[1:]):
            thetas, ws = _graded_rule(p, q, order, panels)
            for theta, w_theta in zip(thetas, ws):
                chord = radius * math.cos(theta)
                if chord <= 0:
                    continue
                coordinate = c + radius * math.sin(theta)
                inner = integrate(level + 1, np.append(fixed, coordinate), chord)
                total += w_theta * radius * math.cos(theta) * inner
        return total

    return integrate(0, np.zeros(0), r)


def ball_volume_estimate(rs: RootSystem, center: Vector, r: float) -> float:
    """Comparable product estimate r^N prod over all roots of (|<alpha, x>| + r)^{k(alpha)}."""
    center = np.asarray(center, dtype=float)
    value = r ** rs.dimension
    for alpha, k in zip(rs.roots, rs.multiplicities):
        value *= (abs(float(alpha @ center)) + r) ** k
    return value


def ball_volume(rs: RootSystem, center: Vector, r: float, rtol: float = 1e-6,
                with_estimate: bool = False, order: int = 12,
                max_level: int = 4) -> Union[float, Tuple[float, float]]:
    """
    Volume w(B(center, r)) by nested Gauss-Legendre quadrature split at reflection hyperplanes.

    Args:
        rs (RootSystem): Root system
        center (Vector): Ball center
        r (float): Radius, r > 0
        rtol (float): Relative agreement required between two refinement levels
        with_estimate (bool): Also return the comparable product estimate
        order (int): Gauss-Legendre nodes per panel
        max_level (int): Maximum number of panel doublings

    Returns:
        float | Tuple[float, float]: The volume, or (volume, estimate)

    Raises:
        ValueError: If r <= 0
        QuadratureNotConverged: If refinement levels keep disagreeing
    """
    if r <= 0:
        raise ValueError(f"Ball radius must be positive, got {r}")
    center = np.asarray(center, dtype=float)
    _check_dimension(rs, center)
    previous = _ball_integral(rs, center, r, order, 1)
    for level in range(1, max_level + 1):
        current = _ball_integral(rs, center, r, order, 2 ** level)
        if abs(current - previous) <= rtol * abs(current):
            break
        previous = current
    else:
        raise QuadratureNotConverged(f"Ball volume at {center.tolist()}, r={r} did not converge",
                                     estimate=current, error=abs(current - previous))
    if with_estimate:
        return current, ball_volume_estimate(rs, center, r)
    return current


def growth_report(rs: RootSystem, centers: Sequence[Vector], radii: Sequence[float],
                  factors: Sequence[float] = (2.0, 4.0, 8.0)) -> pd.DataFrame:
    """
    Tabulate doubling and growth ratios w(B(x, R)) / w(B(x, r)).

    Args:
        rs (RootSystem): Root system
        centers (Sequence[Vector]): Ball centers
        radii (Sequence[float]): Base radii r
        factors (Sequence[float]): Ratios R / r

    Returns:
        pd.DataFrame: One row per (center, r, R/r) with the volume ratio and
            its normalizations by (R/r)^N and (R/r)^{homogeneous dimension}
    """
    rows = []
    big_n = rs.homogeneous_dimension
    for center in centers:
        for r in radii:
            base = ball_volume(rs, center, r)
            for factor in factors:
                ratio = ball_volume(rs, center, r * factor) / base
                rows.append({
                    "center": np.round(np.asarray(center, dtype=float), 12).tolist(),
                    "r": r,
                    "factor": factor,
                    "ratio": ratio,
                    "lower_normalized": ratio / factor ** rs.dimension,
                    "upper_normalized": ratio / factor ** big_n,
                })
    return pd.DataFrame(rows)


@dataclass(frozen=True, eq=False)
class WeightedGrid:
    """
    Tensor grid on [-L, L]^N closed under the reflection group.

    Nodes include the origin when points_per_axis is odd and are cell
    centred when it is even. quad_weights carries w(x_i) h^N and
    reflection_indices[g][i] is the flat index of sigma_g(x_i).
    """

    rs: RootSystem
    extent: float
    points_per_axis: int
    axis: np.ndarray
    spacing: float
    points: np.ndarray
    quad_weights: np.ndarray
    reflection_indices: np.ndarray

    @property
    def dimension(self) -> int:
        return self.rs.dimension

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @classmethod
    def build(cls, rs: RootSystem, extent: float, points_per_axis: int,
              axis_cap: int = DEFAULT_AXIS_CAP) -> "WeightedGrid":
        """
        Build the grid and resolve every group element to an index permutation.

        Args:
            rs (RootSystem): Root system (group of signed permutations)
            extent (float): Half width L
            points_per_axis (int): Points per axis
            axis_cap (int): Maximum points per axis

        Returns:
            WeightedGrid: The grid

        Raises:
            GridTooSmall: For fewer than 5 points per axis
            UnsupportedRootSystem: If the group does not preserve tensor grids
        """
        if points_per_axis < 5:
            raise GridTooSmall(f"Need at least 5 points per axis, got {points_per_axis}")
        if points_per_axis > axis_cap:
            raise ValueError(f"{points_per_axis} points per axis exceeds the cap {axis_cap}")
        if extent <= 0:
            raise ValueError(f"Grid extent must be positive, got {extent}")
        if not rs.is_hyperoctahedral:
            raise UnsupportedRootSystem(
                f"Tensor grids need a group of signed permutations; {rs.name} is not one")

        n = points_per_axis
        if n % 2 == 1:
            h = 2.0 * extent / (n - 1)
            axis = -extent + h * np.arange(n)
        else:
            h = 2.0 * extent / n
            axis = -extent + h * (np.arange(n) + 0.5)
        mesh = np.meshgrid(*([axis] * rs.dimension), indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=-1)
        quad = np.asarray(weight(rs, points)).reshape((n,) * rs.dimension) * h ** rs.dimension

        offset = axis[0]
        strides = n ** np.arange(rs.dimension - 1, -1, -1)
        permutations = []
        for g in rs.group_elements:
            image = points @ g.T
            index = np.rint((image - offset) / h).astype(int)
            if np.any(index < 0) or np.any(index >= n) or \
                    not np.allclose(axis[index], image, atol=1e-9 * max(1.0, extent)):
                raise UnsupportedRootSystem(f"Grid is not closed under the group of {rs.name}")
            permutations.append(index @ strides)
        logging.info(f"Built {rs.name} grid: {n} points per axis, L={extent}, h={h:.4g}")
        return cls(rs=rs, extent=float(extent), points_per_axis=n, axis=axis, spacing=h,
                   points=points, quad_weights=quad, reflection_indices=np.array(permutations))

    def with_extent(self, extent: float, points_per_axis: Optional[int] = None) -> "WeightedGrid":
        """A grid of the same layout with a different extent (used for xi-grids)."""
        return WeightedGrid.build(self.rs, extent, points_per_axis or self.points_per_axis)

    def refined(self) -> "WeightedGrid":
        """Halve the spacing over the same extent, keeping the parity of the layout."""
        n = self.points_per_axis
        return WeightedGrid.build(self.rs, self.extent, 2 * n - 1 if n % 2 == 1 else 2 * n)

    def sample(self, f) -> np.ndarray:
        """Evaluate a vectorized f(points) on the grid, returned in grid shape."""
        return np.asarray(f(self.points)).reshape(self.shape)

    def compose(self, values: np.ndarray, element: int) -> np.ndarray:
        """Values of f o sigma_g on the grid, given values of f."""
        flat = np.asarray(values).reshape(self.size, *np.shape(values)[self.dimension:])
        return flat[self.reflection_indices[element]].reshape(np.shape(values))

    def interior_mask(self, band: int) -> np.ndarray:
        """True where every axis index lies at least `band` points from the boundary."""
        n = self.points_per_axis
        inside = np.zeros(n, dtype=bool)
        inside[band:n - band] = True
        mask = inside
        for _ in range(1, self.dimension):
            mask = np.multiply.outer(mask, inside)
        return mask

    def distances_from(self, x: Vector) -> np.ndarray:
        """Euclidean distances of all grid points from x, in grid shape."""
        return np.linalg.norm(self.points - np.asarray(x, dtype=float), axis=1).reshape(self.shape)

    def orbit_distances_from(self, x: Vector) -> np.ndarray:
        """Orbit distances d(x_i, x) of all grid points, in grid shape."""
        return np.asarray(orbit_distance(self.rs, self.points, np.asarray(x, dtype=float))).reshape(self.shape)

    def describe(self) -> Dict[str, object]:
        return {"root_system": self.rs.name, "extent": self.extent,
                "points_per_axis": self.points_per_axis, "spacing": self.spacing}
