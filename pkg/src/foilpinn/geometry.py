"""NACA 4-digit airfoil geometry: code parsing, camber/thickness evaluators,
and closed surface polylines.

All geometry lives in chord units: chord length 1.0, leading edge at the
origin, trailing edge at (1, 0). The half-thickness polynomial uses the
closed-trailing-edge coefficient (-0.1036) so the surface polyline closes
exactly and inside/outside is well defined everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "AirfoilParams",
    "NacaCodeError",
    "Polyline",
    "parse_naca_code",
    "half_thickness",
    "camber_line",
    "surface_polyline",
    "rotate_polyline",
]

# Closed-TE thickness polynomial coefficients (sqrt, x, x^2, x^3, x^4 terms).
_THICKNESS_COEFFS = (0.2969, -0.1260, -0.3516, 0.2843, -0.1036)


class NacaCodeError(ValueError):
    """Raised when a NACA 4-digit code cannot be parsed."""


@dataclass(frozen=True)
class AirfoilParams:
    """Design parameters of a NACA 4-digit airfoil.

    Attributes
    ----------
    m : float
        Maximum camber as a fraction of chord (first digit / 100).
    p : float
        Chordwise position of maximum camber (second digit / 10).
    t : float
        Maximum thickness as a fraction of chord (last two digits / 100).
    code : str
        The 4-character source string, reproducible via :meth:`to_code`.
    """

    m: float
    p: float
    t: float
    code: str

    def to_code(self) -> str:
        """Format the stored digits back into the 4-character code."""
        return f"{round(self.m * 100):1d}{round(self.p * 10):1d}{round(self.t * 100):02d}"


@dataclass(frozen=True)
class Polyline:
    """Closed 2-D polyline, vertices in chord units.

    The first and last vertices coincide; ``segments`` exposes the edges as
    (start, end) vertex pairs without the duplicated closing vertex.
    """

    vertices: np.ndarray  # shape (n, 2), vertices[0] == vertices[-1]

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 8:
            raise ValueError(f"polyline needs >= 8 vertices of shape (n, 2), got {v.shape}")
        if not np.allclose(v[0], v[-1], atol=1e-12, rtol=0.0):
            raise ValueError("polyline is not closed: first and last vertices differ")
        object.__setattr__(self, "vertices", v)

    @property
    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge start points and end points, each of shape (n-1, 2)."""
        return self.vertices[:-1], self.vertices[1:]

    @cached_property
    def segment_table(self) -> tuple[np.ndarray, ...]:
        """Precomputed per-edge scalars (ax, ay, dx, dy, |d|^2) for distance
        scans; cached because polylines are immutable."""
        a, b = self.segments
        d = b - a
        dd = np.maximum(d[:, 0] ** 2 + d[:, 1] ** 2, np.finfo(float).tiny)
        return a[:, 0].copy(), a[:, 1].copy(), d[:, 0].copy(), d[:, 1].copy(), dd

    def bounding_box(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of the vertex set."""
        v = self.vertices
        return (
            float(v[:, 0].min()),
            float(v[:, 0].max()),
            float(v[:, 1].min()),
            float(v[:, 1].max()),
        )


def parse_naca_code(code: str) -> AirfoilParams:
    """Parse a NACA 4-digit code like ``"2412"`` into design fractions.

    Raises
    ------
    NacaCodeError
        If the code is not exactly 4 decimal digits or the thickness
        digits are ``00``.
    """
    if not isinstance(code, str) or len(code) != 4:
        raise NacaCodeError(f"NACA code must have exactly 4 characters, got {code!r}")
    if not code.isdigit():
        bad = next(c for c in code if not c.isdigit())
        raise NacaCodeError(f"NACA code must be decimal digits, found {bad!r} in {code!r}")
    m = int(code[0]) / 100.0
    p = int(code[1]) / 10.0
    t = int(code[2:4]) / 100.0
    if t == 0.0:
        raise NacaCodeError(f"thickness digits of {code!r} are 00; a zero-thickness foil is degenerate")
    return AirfoilParams(m=m, p=p, t=t, code=code)


def half_thickness(x, t: float):
    """Half-thickness y_t(x) of the symmetric thickness distribution.

    y_t = 5 t (0.2969 sqrt(x) - 0.1260 x - 0.3516 x^2 + 0.2843 x^3 - 0.1036 x^4)

    The -0.1036 final coefficient closes the trailing edge: y_t(1) == 0.
    Accepts scalars or arrays; x must lie in [0, 1].
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("x must lie in [0, 1] chord units")
    c0, c1, c2, c3, c4 = _THICKNESS_COEFFS
    y = 5.0 * t * (c0 * np.sqrt(x) + x * (c1 + x * (c2 + x * (c3 + x * c4))))
    y = np.maximum(y, 0.0)  # the TE can round to -1e-17; the polynomial is nonnegative on [0, 1]
    return float(y) if y.ndim == 0 else y


def camber_line(x, params: AirfoilParams):
    """Mean camber line height and slope at chord stations x.

    Piecewise-parabolic: for x < p, y_c = m/p^2 (2 p x - x^2); for x >= p,
    y_c = m/(1-p)^2 (1 - 2p + 2 p x - x^2). Both value and slope are
    continuous at x = p (slope is zero there from either side).
    Returns (y_c, dy_c/dx); zero everywhere for symmetric foils (m == 0).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("x must lie in [0, 1] chord units")
    scalar = x.ndim == 0
    xs = np.atleast_1d(x)
    y = np.zeros_like(xs)
    dy = np.zeros_like(xs)
    m, p = params.m, params.p
    if m != 0.0:
        fore = xs < p
        aft = ~fore
        y[fore] = (m / p**2) * (2.0 * p * xs[fore] - xs[fore] ** 2)
        dy[fore] = (2.0 * m / p**2) * (p - xs[fore])
        y[aft] = (m / (1.0 - p) ** 2) * (1.0 - 2.0 * p + 2.0 * p * xs[aft] - xs[aft] ** 2)
        dy[aft] = (2.0 * m / (1.0 - p) ** 2) * (p - xs[aft])
    if scalar:
        return float(y[0]), float(dy[0])
    return y, dy


def surface_polyline(params: AirfoilParams, n_per_side: int) -> Polyline:
    """Closed surface polyline: upper surface LE->TE, then lower TE->LE.

    Chord stations are cosine-clustered, x_i = (1 - cos(pi i / n)) / 2, so
    vertices concentrate at the leading and trailing edges. Thickness is
    applied perpendicular to the camber line. The result has 2 n + 1
    vertices with the first repeated at the end.
    """
    if n_per_side < 4:
        raise ValueError(f"n_per_side must be >= 4, got {n_per_side}")
    i = np.arange(n_per_side + 1, dtype=float)
    x = 0.5 * (1.0 - np.cos(math.pi * i / n_per_side))
    x[0], x[-1] = 0.0, 1.0  # pin endpoints against rounding
    yt = half_thickness(x, params.t)
    yc, slope = camber_line(x, params)
    theta = np.arctan(slope)
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    upper = np.column_stack([x - yt * sin_t, yc + yt * cos_t])
    lower = np.column_stack([x + yt * sin_t, yc - yt * cos_t])
    # yt vanishes at both ends, so upper[0] == lower[0] and upper[-1] == lower[-1];
    # drop the duplicated TE vertex and close the loop back at the LE.
    vertices = np.vstack([upper, lower[-2::-1]])
    return Polyline(vertices=vertices)


def rotate_polyline(poly: Polyline, angle_deg: float, center=(0.25, 0.0)) -> Polyline:
    """Rigid rotation of a polyline, default pivot at the quarter chord.

    Positive angles pitch the leading edge up (counterclockwise in the
    x-y plane). Used to apply an angle of attack to a generated foil.
    """
    if angle_deg == 0.0:
        return poly
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    rot = np.array([[c, -s], [s, c]])
    center = np.asarray(center, dtype=float)
    return Polyline(vertices=(poly.vertices - center) @ rot.T + center)
