"""
Discrete Cones Module

This module holds the grid machinery shared by maximal functions, square
functions and tent spaces: Euclidean ball sums and averages (FFT
convolution with a disk), suprema over cone apertures (maximum filters)
and the cone functional

    A F(x) = ( int int_{|x-y| < a t} |F(t,y)|^2 dw(y) dt / (t w(B(x,t))) )^{1/2}.

Cone membership is strict: points at distance exactly a*t are excluded.
"""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage, signal

from .algebra import WeightedGrid
from .operators import GridFunction, TimeGridFunction

BOUNDARY_EPS = 1e-12


def disk_footprint(grid: WeightedGrid, radius: float, strict: bool = True) -> np.ndarray:
    """
    Boolean stencil of the offsets o with |o h| < radius (or <= when not strict).

    Args:
        grid (WeightedGrid): Grid providing spacing and dimension
        radius (float): Ball radius
        strict (bool): Exclude offsets at distance exactly `radius`

    Returns:
        np.ndarray: Footprint of odd side length, capped at 2n - 1
    """
    h = grid.spacing
    half = min(int(np.floor(radius / h)), grid.points_per_axis - 1)
    offsets = np.arange(-half, half + 1) * h
    mesh = np.meshgrid(*([offsets] * grid.dimension), indexing="ij")
    dist = np.sqrt(sum(m * m for m in mesh))
    if strict:
        footprint = dist < radius * (1.0 - BOUNDARY_EPS)
    else:
        footprint = dist <= radius * (1.0 + BOUNDARY_EPS)
    # the centre always belongs to its own ball
    footprint[(half,) * grid.dimension] = True
    return footprint


def ball_sum(grid: WeightedGrid, values: np.ndarray, radius: float, strict: bool = True) -> np.ndarray:
    """Sum of `values` over grid points in B(x, radius), for every grid point x."""
    footprint = disk_footprint(grid, radius, strict).astype(float)
    values = np.asarray(values, dtype=float)
    if footprint.size == 1:
        return values.copy()
    out = signal.fftconvolve(values, footprint, mode="same")
    return np.where(np.abs(out) < 1e-13 * max(1.0, float(np.max(np.abs(values)))), 0.0, out)


def ball_volumes(grid: WeightedGrid, radius: float, strict: bool = True) -> np.ndarray:
    """Discrete w(B(x, radius)) at every grid point (balls truncated at the grid edge)."""
    return ball_sum(grid, grid.quad_weights, radius, strict)


def ball_average(grid: WeightedGrid, values: np.ndarray, radius: float, strict: bool = True) -> np.ndarray:
    """w(B(x,r))^{-1} int_{B(x,r)} values dw for every grid point x."""
    volumes = ball_volumes(grid, radius, strict)
    sums = ball_sum(grid, np.asarray(values) * grid.quad_weights, radius, strict)
    with np.errstate(invalid="ignore", divide="ignore"):
        # w vanishes on reflection hyperplanes; a one-point ball there averages to the point value
        return np.where(volumes > 0, sums / np.where(volumes > 0, volumes, 1.0), values)


def aperture_max(grid: WeightedGrid, values: np.ndarray, radius: float) -> np.ndarray:
    """sup of values over grid points at distance < radius, for every grid point."""
    footprint = disk_footprint(grid, radius, strict=True)
    if footprint.size == 1:
        return np.asarray(values, dtype=float).copy()
    return ndimage.maximum_filter(np.asarray(values, dtype=float), footprint=footprint, mode="constant", cval=0.0)


def hardy_littlewood_sup(grid: WeightedGrid, values: np.ndarray, radii: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Discrete centred Hardy-Littlewood maximal function of |values| for (R^N, |x-y|, dw).

    Args:
        grid (WeightedGrid): Grid
        values (np.ndarray): Samples in grid shape
        radii (Sequence[float], optional): Ball radii; geometric from h/2 to 2L by default

    Returns:
        np.ndarray: sup over radii of the ball averages of |values|
    """
    if radii is None:
        radii = grid.spacing * 0.5 * 2.0 ** np.arange(0, int(np.ceil(np.log2(8 * grid.extent / grid.spacing))) + 1)
    magnitude = np.abs(np.asarray(values))
    out = magnitude.astype(float).copy()
    for r in radii:
        out = np.maximum(out, ball_average(grid, magnitude, float(r), strict=False))
    return out


def cone_sup(u: TimeGridFunction, radii: Sequence[float]) -> GridFunction:
    """
    sup over ladder slices i and |x - x'| < radii[i] of |u(t_i, x')|.

    Args:
        u (TimeGridFunction): Samples on times x grid
        radii (Sequence[float]): Aperture radius for each time slice

    Returns:
        GridFunction: The discrete nontangential supremum
    """
    grid = u.grid
    out = np.zeros(grid.shape)
    magnitude = np.abs(np.where(u.valid, u.values, 0.0))
    for i, r in enumerate(radii):
        out = np.maximum(out, aperture_max(grid, magnitude[i], float(r)))
    return GridFunction(grid, out)


def weighted_sup(u: TimeGridFunction, lam: float, chunk: int = 256) -> GridFunction:
    """
    Grand maximal function sup_{i, y} |u(t_i, y)| (t_i / (t_i + |x - y|))^lam, over all grid points y.
    """
    grid = u.grid
    points = grid.points
    magnitude = np.abs(np.where(u.valid, u.values, 0.0)).reshape(u.times.size, grid.size)
    out = np.zeros(grid.size)
    for start in range(0, grid.size, chunk):
        block = points[start:start + chunk]
        dist = np.linalg.norm(block[:, None, :] - points[None, :, :], axis=-1)
        for i, t in enumerate(u.times):
            factor = (t / (t + dist)) ** lam
            out[start:start + chunk] = np.maximum(out[start:start + chunk], np.max(magnitude[i][None, :] * factor, axis=1))
    return GridFunction(grid, out.reshape(grid.shape))


def cone_functional(u: TimeGridFunction, dt_weights: Sequence[float], aperture: float = 1.0,
                    p_inner: float = 2.0) -> GridFunction:
    """
    Discrete cone functional ( sum_i omega_i w(B(x,t_i))^{-1} sum_{|x-y| < a t_i} |u(t_i,y)|^2 w(y) h^N )^{1/2}.

    Args:
        u (TimeGridFunction): Samples on the ladder
        dt_weights (Sequence[float]): Quadrature weights of dt/t on the ladder
        aperture (float): Cone aperture a
        p_inner (float): Inner exponent (2 for tent spaces and square functions)

    Returns:
        GridFunction: A F on the grid
    """
    grid = u.grid
    magnitude = np.abs(np.where(u.valid, u.values, 0.0)) ** p_inner
    total = np.zeros(grid.shape)
    for i, (t, omega) in enumerate(zip(u.times, dt_weights)):
        radius = aperture * float(t)
        total += omega * ball_average(grid, magnitude[i], radius, strict=True)
    logging.debug(f"Cone functional over {u.times.size} slices, aperture {aperture}")
    return GridFunction(grid, total ** (1.0 / p_inner))
