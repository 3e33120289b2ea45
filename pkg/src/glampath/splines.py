"""Marginal B-spline bases and scatter binning for grid smoothing."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def default_basis_count(n: int, ratio: int) -> int:
    """``max(ceil(n / ratio), 5)`` basis functions for ``n`` grid points."""
    if n < 1 or ratio < 1:
        raise ValueError("n and ratio must be positive")
    return max(math.ceil(n / ratio), 5)


def clamped_knots(lo: float, hi: float, n_basis: int, order: int) -> np.ndarray:
    spans = n_basis - order + 1
    inner = np.linspace(lo, hi, spans + 1)
    return np.concatenate([np.full(order - 1, lo), inner, np.full(order - 1, hi)])


def bspline_design(points, n_basis: int, order: int = 4) -> np.ndarray:
    """``len(points) x n_basis`` matrix of B-splines of the given order.

    Knots are clamped at the ends of the grid with uniform interior spans;
    the last span is closed so the right end point gets full support.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
        raise ValueError("grid points must be strictly increasing with at least two entries")
    if order < 1:
        raise ValueError("order must be positive")
    if n_basis < order:
        raise ValueError(f"need at least {order} basis functions for order {order}")
    t = clamped_knots(x[0], x[-1], n_basis, order)
    n_knots = t.size

    # order-1 indicators of [t_i, t_{i+1}), last non-empty span closed
    B = ((x[:, None] >= t[None, :-1]) & (x[:, None] < t[None, 1:])).astype(float)
    last = np.flatnonzero(t[:-1] < t[1:])[-1]
    B[x == t[-1], last] = 1.0

    for k in range(2, order + 1):
        nb = n_knots - k
        left_den = t[k - 1:k - 1 + nb] - t[:nb]
        right_den = t[k:k + nb] - t[1:1 + nb]
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.where(left_den > 0, (x[:, None] - t[None, :nb]) / left_den, 0.0)
            right = np.where(right_den > 0, (t[None, k:k + nb] - x[:, None]) / right_den, 0.0)
        B = left * B[:, :nb] + right * B[:, 1:nb + 1]
    return B


def uniform_grid(n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    return np.linspace(lo, hi, n)


def bin_scatter(points, bounds: Sequence[tuple], bins: Sequence[int]) -> tuple:
    """Count d-dimensional points in equal-width bins.

    Bins are right-open except the last one in each dimension; points
    outside ``bounds`` are dropped. Returns ``(counts, n_dropped)``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    d = len(bins)
    if pts.shape[1] != d or len(bounds) != d:
        raise ValueError("points, bounds and bins disagree on dimension")
    for (lo, hi), b in zip(bounds, bins):
        if not hi > lo or b < 1:
            raise ValueError("bounds must be nondegenerate and bins positive")
    counts, _ = np.histogramdd(pts, bins=list(bins), range=[tuple(b) for b in bounds])
    inside = np.all([(pts[:, j] >= lo) & (pts[:, j] <= hi)
                     for j, (lo, hi) in enumerate(bounds)], axis=0)
    return np.asfortranarray(counts), int(pts.shape[0] - inside.sum())
