"""Collocation and boundary point sets over the flow domain.

Every sampler is a pure function of its arguments plus a seed; randomness
comes from a counter-based Philox generator, so regeneration is
bit-identical and independent streams can be derived from structured seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Polyline
from .sdf import signed_distance

__all__ = [
    "Domain",
    "CollocationSet",
    "SamplingError",
    "sample_interior",
    "sample_surface",
    "sample_inlet",
    "sample_outlet",
    "sample_sides",
    "zone_split",
    "build_collocation",
]

#: Fraction of near-band points biased into the wake region (x > 0.5 chord),
#: where the separation wake makes resolution matter most.
WAKE_FRACTION = 0.6
WAKE_X_CUT = 0.5

#: Default chord distance separating the near zone from the far zone.
DEFAULT_ZONE_THRESHOLD = 0.25

_MAX_REJECT_FACTOR = 10_000  # rejection budget per requested point


class SamplingError(RuntimeError):
    """Rejection sampling could not place the requested points."""


def _rng(seed, *stream) -> np.random.Generator:
    entropy = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy + stream)))


@dataclass(frozen=True)
class Domain:
    """Rectangular flow domain in chord units."""

    x_min: float = -2.0
    x_max: float = 4.0
    y_min: float = -2.0
    y_max: float = 2.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("degenerate domain box")

    def check_margin(self, poly: Polyline, margin: float = 0.5) -> None:
        """Require the box to contain the foil with at least `margin` chords to spare."""
        bx0, bx1, by0, by1 = poly.bounding_box()
        if (
            bx0 - self.x_min < margin
            or self.x_max - bx1 < margin
            or by0 - self.y_min < margin
            or self.y_max - by1 < margin
        ):
            raise ValueError(f"domain {self} does not contain the airfoil with margin {margin}")


@dataclass(frozen=True)
class CollocationSet:
    """Interior and boundary sample points with mutually exclusive roles."""

    interior: np.ndarray
    surface: np.ndarray
    inlet: np.ndarray
    outlet: np.ndarray
    sides: np.ndarray
    seed: int
    interior_sdf: np.ndarray = field(default=None, repr=False)  # cached sdf of interior points

    def roles(self):
        """(role, points) pairs in a fixed order."""
        return (
            ("interior", self.interior),
            ("surface", self.surface),
            ("inlet", self.inlet),
            ("outlet", self.outlet),
            ("side", self.sides),
        )


def sample_interior(
    domain: Domain,
    poly: Polyline,
    n: int,
    near_fraction: float = 0.0,
    near_band: float = DEFAULT_ZONE_THRESHOLD,
    seed: int | tuple = 0,
) -> np.ndarray:
    """Exactly n exterior points (sdf > 0), a share of them hugging the foil.

    At least ``near_fraction * n`` points satisfy 0 < sdf < near_band,
    drawn by rejection inside the foil's bounding box inflated by the band;
    a fixed fraction of those is biased into the wake (x > 0.5). The three
    quota buckets (wake, near, far) are filled from one proposal stream per
    pass, so each pass costs a single signed-distance scan.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if near_band <= 0.0:
        raise ValueError("near_band must be positive")
    if not 0.0 <= near_fraction <= 1.0:
        raise ValueError("near_fraction must lie in [0, 1]")
    rng = _rng(seed, 0)
    n_near = int(np.ceil(near_fraction * n))
    n_wake = int(round(WAKE_FRACTION * n_near))
    quotas = {"wake": n_wake, "near": n_near - n_wake, "far": n - n_near}

    bx0, bx1, by0, by1 = poly.bounding_box()
    band_lo = np.maximum([bx0 - near_band, by0 - near_band], [domain.x_min, domain.y_min])
    band_hi = np.minimum([bx1 + near_band, by1 + near_band], [domain.x_max, domain.y_max])
    wake_lo = np.array([max(WAKE_X_CUT, band_lo[0]), band_lo[1]])
    dom_lo = np.array([domain.x_min, domain.y_min])
    dom_hi = np.array([domain.x_max, domain.y_max])
    boxes = {"wake": (wake_lo, band_hi), "near": (band_lo, band_hi), "far": (dom_lo, dom_hi)}
    # typical acceptance per bucket; only sizes the proposal batches
    oversample = {"wake": 4, "near": 4, "far": 2}

    kept = {key: [] for key in quotas}
    have = dict.fromkeys(quotas, 0)
    drawn = 0
    budget = _MAX_REJECT_FACTOR * n
    while any(have[key] < quotas[key] for key in quotas):
        batches = {}
        proposals = []
        for key in ("wake", "near", "far"):
            need = quotas[key] - have[key]
            if need <= 0:
                batches[key] = 0
                continue
            lo, hi = boxes[key]
            count = max(64, oversample[key] * need)
            batches[key] = count
            proposals.append(lo + (hi - lo) * rng.random((count, 2)))
        pts = np.concatenate(proposals)
        drawn += pts.shape[0]
        s = signed_distance(pts, poly)
        off = 0
        for key in ("wake", "near", "far"):
            count = batches[key]
            if count == 0:
                continue
            block, sb = pts[off : off + count], s[off : off + count]
            off += count
            ok = (sb > 0.0) & (sb < near_band) if key != "far" else sb > 0.0
            good = block[ok][: quotas[key] - have[key]]
            if good.shape[0]:
                kept[key].append(good)
                have[key] += good.shape[0]
        if drawn > budget and any(have[key] < quotas[key] for key in quotas):
            placed = sum(have.values())
            raise SamplingError(
                f"placed only {placed}/{n} interior points after {drawn} proposals; geometry degenerate?"
            )
    parts = [np.concatenate(kept[key]) for key in ("wake", "near", "far") if kept[key]]
    return np.concatenate(parts)


def _arc_table(poly: Polyline):
    a, b = poly.segments
    seg = np.linalg.norm(b - a, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    return a, b, seg, cum


def sample_surface(poly: Polyline, n: int, seed: int | tuple | None = None) -> np.ndarray:
    """n points on the polyline, stratified by arc length.

    With ``seed=None`` the points sit at deterministic arc positions
    ``s_i = i * L / n`` starting at the leading edge, which keeps symmetric
    foils symmetric and always covers the leading edge. With a seed, each
    point jitters uniformly inside its stratum.
    """
    if n < 8:
        raise ValueError("n must be >= 8 to cover the surface")
    a, b, seg, cum = _arc_table(poly)
    total = cum[-1]
    i = np.arange(n, dtype=float)
    if seed is None:
        s = i * total / n
    else:
        u = _rng(seed, 1).random(n)
        s = (i + u) * total / n
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[idx]) / np.maximum(seg[idx], np.finfo(float).tiny)
    return a[idx] + frac[:, None] * (b[idx] - a[idx])


def _boundary_rng_points(rng, n, fixed_value, lo, hi, axis):
    free = lo + (hi - lo) * rng.random(n)
    pts = np.empty((n, 2))
    pts[:, axis] = fixed_value
    pts[:, 1 - axis] = free
    return pts


def sample_inlet(domain: Domain, n: int, seed: int | tuple = 0) -> np.ndarray:
    """Points on the inlet boundary x = x_min."""
    return _boundary_rng_points(_rng(seed, 2), n, domain.x_min, domain.y_min, domain.y_max, 0)


def sample_outlet(domain: Domain, n: int, seed: int | tuple = 0) -> np.ndarray:
    """Points on the outlet boundary x = x_max."""
    return _boundary_rng_points(_rng(seed, 3), n, domain.x_max, domain.y_min, domain.y_max, 0)


def sample_sides(domain: Domain, n: int, seed: int | tuple = 0) -> np.ndarray:
    """Points on the free-stream side walls y = y_min and y = y_max."""
    rng = _rng(seed, 4)
    n_bottom = n // 2
    bottom = _boundary_rng_points(rng, n_bottom, domain.y_min, domain.x_min, domain.x_max, 1)
    top = _boundary_rng_points(rng, n - n_bottom, domain.y_max, domain.x_min, domain.x_max, 1)
    return np.vstack([bottom, top])


def zone_split(sdf_values, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Partition exterior points into near (0 <= sdf < threshold) and far (sdf >= threshold)."""
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    s = np.asarray(sdf_values, dtype=float)
    if np.any(s < 0.0):
        raise ValueError("zone_split expects exterior points (sdf >= 0)")
    near = s < threshold
    return near, ~near


def build_collocation(
    domain: Domain,
    poly: Polyline,
    n_interior: int,
    near_fraction: float = 0.4,
    near_band: float = DEFAULT_ZONE_THRESHOLD,
    seed: int = 0,
    n_boundary: int | None = None,
) -> CollocationSet:
    """Full collocation set: interior plus the four boundary families.

    Boundary families default to ``max(8, n_interior // 10)`` points each.
    """
    domain.check_margin(poly)
    if n_boundary is None:
        n_boundary = max(8, n_interior // 10)
    interior = sample_interior(domain, poly, n_interior, near_fraction, near_band, seed)
    return CollocationSet(
        interior=interior,
        surface=sample_surface(poly, max(8, n_boundary), seed),
        inlet=sample_inlet(domain, n_boundary, seed),
        outlet=sample_outlet(domain, n_boundary, seed),
        sides=sample_sides(domain, n_boundary, seed),
        seed=seed,
        interior_sdf=signed_distance(interior, poly),
    )
