"""Alignment, scale, subspace and density-distance measurements."""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "cosine_similarity",
    "norm_parameter",
    "orthonormal_basis",
    "principal_angles",
    "grassmann_distance",
    "trapezoid",
    "l1_density_distance",
    "empirical_histogram",
]


def cosine_similarity(x: np.ndarray, xi: np.ndarray) -> float:
    """``xi.x / (||xi|| ||x||)``; equals ``xi.x / (p lam)`` when ``||xi|| = sqrt(p)``."""
    nx = np.linalg.norm(x)
    nxi = np.linalg.norm(xi)
    if nx == 0.0 or nxi == 0.0:
        raise DomainError("cosine similarity of a zero vector is undefined")
    q = float(xi @ x) / (nxi * nx)
    return min(1.0, max(-1.0, q))


def norm_parameter(x: np.ndarray, p: int | None = None) -> float:
    p = x.size if p is None else p
    return float(np.linalg.norm(x)) / math.sqrt(p)


def orthonormal_basis(U: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column span of ``U`` (``p x r``)."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    q, r = np.linalg.qr(U)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() <= rtol * max(diag.max(), 1e-300):
        raise DomainError("basis is rank deficient")
    return q


def principal_angles(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Principal angles between the column spans of ``U`` and ``V``.

    Only the ``r x r`` cross-Gram of the orthonormalized bases is decomposed.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if V.ndim == 1:
        V = V[:, None]
    if U.shape != V.shape:
        raise ConfigError(f"bases must have equal shape, got {U.shape} and {V.shape}")
    qu = orthonormal_basis(U)
    qv = orthonormal_basis(V)
    sigma = np.linalg.svd(qu.T @ qv, compute_uv=False)
    return np.arccos(np.clip(sigma, 0.0, 1.0))


def grassmann_distance(U: np.ndarray, V: np.ndarray) -> float:
    """l2 norm of the principal angles, in ``[0, sqrt(r) * pi / 2]``."""
    return float(np.sqrt(np.sum(principal_angles(U, V) ** 2)))


def trapezoid(values: np.ndarray, grid: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.trapezoid(values, grid, axis=axis) if hasattr(np, "trapezoid") else np.trapz(values, grid, axis=axis)


def l1_density_distance(h: np.ndarray, density: np.ndarray, grid: np.ndarray) -> float:
    """Trapezoid approximation of ``int |h - density| dx`` on a shared grid."""
    h = np.asarray(h, dtype=float)
    density = np.asarray(density, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if not (h.shape == density.shape == grid.shape):
        raise ConfigError(f"grid mismatch: {h.shape}, {density.shape}, {grid.shape}")
    return float(trapezoid(np.abs(h - density), grid))


def empirical_histogram(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Histogram of ``values`` with one bin per grid point, normalized to unit
    trapezoid integral on the grid.

    Bin edges sit halfway between grid points; the outer bins extend half a
    spacing beyond the ends.  Values outside the covered range are counted in
    the end bins and a warning is emitted.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise ConfigError("histogram grid must be a strictly increasing 1-D array of length >= 2")
    values = np.asarray(values, dtype=float).ravel()
    mid = 0.5 * (grid[1:] + grid[:-1])
    lo = grid[0] - 0.5 * (grid[1] - grid[0])
    hi = grid[-1] + 0.5 * (grid[-1] - grid[-2])
    outside = int(np.count_nonzero((values < lo) | (values > hi)))
    if outside:
        warnings.warn(f"{outside} of {values.size} values fall outside the histogram grid; "
                      "they were counted in the end bins", RuntimeWarning, stacklevel=2)
    edges = np.concatenate(([lo], mid, [hi]))
    idx = np.clip(np.searchsorted(mid, values, side="right"), 0, grid.size - 1)
    counts = np.bincount(idx, minlength=grid.size).astype(float)
    widths = np.diff(edges)
    dens = counts / widths
    total = trapezoid(dens, grid)
    if total == 0.0:
        raise DomainError("no values to histogram")
    return dens / total
