"""Exact signed distances from 2-D points to an airfoil polyline.

Sign convention: positive outside the foil (the flow domain), zero on the
surface, negative inside. Distances are exact point-to-segment minima over
the flat segment list; there is no spatial tree, just a chunked scan, which
is plenty at desk scale and keeps the result deterministic.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import Polyline

__all__ = [
    "SdfField",
    "distance_to_polyline",
    "contains",
    "signed_distance",
    "sdf_field",
]

_CHUNK = 4096  # points per block when scanning all segments at once


@dataclass(frozen=True)
class SdfField:
    """Point cloud with signed distances to a fixed polyline."""

    points: np.ndarray  # shape (n, 2)
    values: np.ndarray  # shape (n,)

    def __post_init__(self):
        if self.points.shape != (self.values.shape[0], 2):
            raise ValueError("points/values shape mismatch")


def _unsigned_block(px, py, table) -> np.ndarray:
    """Min distance from points (px, py) to the cached segment table."""
    ax, ay, dx, dy, dd = table
    wx = px[:, None] - ax[None, :]  # (n, m)
    wy = py[:, None] - ay[None, :]
    t = np.clip((wx * dx + wy * dy) / dd, 0.0, 1.0)
    ex = wx - t * dx
    ey = wy - t * dy
    return np.sqrt(np.min(ex * ex + ey * ey, axis=1))


def distance_to_polyline(pt, poly: Polyline) -> float | np.ndarray:
    """Unsigned Euclidean distance to the nearest polyline segment.

    Accepts one point of shape (2,) or a batch of shape (n, 2).
    """
    pts = np.asarray(pt, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    table = poly.segment_table
    out = np.empty(pts.shape[0])
    for lo in range(0, pts.shape[0], _CHUNK):
        block = pts[lo : lo + _CHUNK]
        out[lo : lo + _CHUNK] = _unsigned_block(block[:, 0], block[:, 1], table)
    return float(out[0]) if single else out


def contains(pt, poly: Polyline) -> bool | np.ndarray:
    """Even-odd ray-crossing containment test.

    Casts a ray toward +x and counts edge crossings. Points exactly on an
    edge are not reliably classified here; `signed_distance` resolves them
    to the surface (sdf == 0) before the sign matters.
    """
    pts = np.asarray(pt, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    ax, ay, dx, dy, _ = poly.segment_table
    by = ay + dy
    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    straddles = (ay[None, :] > y) != (by[None, :] > y)
    # x coordinate where the edge crosses the horizontal line through y
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = ax[None, :] + (y - ay[None, :]) * dx[None, :] / dy[None, :]
    hits = straddles & (x < x_cross)
    inside = np.sum(hits, axis=1) % 2 == 1
    return bool(inside[0]) if single else inside


def signed_distance(pt, poly: Polyline) -> float | np.ndarray:
    """Signed distance: positive outside, negative inside, zero on the surface."""
    pts = np.asarray(pt, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    dist = distance_to_polyline(pts, poly)
    inside = contains(pts, poly)
    out = np.where(inside & (dist > 0.0), -dist, dist)
    return float(out[0]) if single else out


def sdf_field(points, poly: Polyline, threads: int = 1) -> SdfField:
    """Signed distances for a point list, order preserved.

    The scan is embarrassingly parallel over points; with ``threads > 1``
    the point list is sharded into contiguous chunks whose results are
    reassembled in order, so the output is identical for any thread count.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("sdf_field needs at least one point")
    if threads <= 1 or pts.shape[0] <= _CHUNK:
        return SdfField(points=pts, values=signed_distance(pts, poly))
    bounds = list(range(0, pts.shape[0], _CHUNK))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda lo: signed_distance(pts[lo : lo + _CHUNK], poly), bounds))
    return SdfField(points=pts, values=np.concatenate(parts))
