import numpy as np
import pytest

from foilpinn.geometry import parse_naca_code, surface_polyline


@pytest.fixture(scope="session")
def poly0012():
    return surface_polyline(parse_naca_code("0012"), 100)


@pytest.fixture(scope="session")
def poly2412():
    return surface_polyline(parse_naca_code("2412"), 100)


@pytest.fixture(scope="session")
def poly4421():
    return surface_polyline(parse_naca_code("4421"), 100)


def brute_force_segment_scan(pts, poly):
    """Reference O(points x segments) scan, one segment at a time."""
    pts = np.atleast_2d(pts)
    a, b = poly.segments
    best = np.full(pts.shape[0], np.inf)
    for s, e in zip(a, b):
        d = e - s
        dd = max(float(d @ d), 1e-300)
        t = np.clip(((pts - s) @ d) / dd, 0.0, 1.0)
        closest = s + t[:, None] * d
        best = np.minimum(best, np.linalg.norm(pts - closest, axis=1))
    return best
