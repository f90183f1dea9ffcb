import numpy as np
import pytest

from foilpinn.geometry import (
    NacaCodeError,
    Polyline,
    camber_line,
    half_thickness,
    parse_naca_code,
    rotate_polyline,
    surface_polyline,
)


def test_parse_2412():
    p = parse_naca_code("2412")
    assert (p.m, p.p, p.t) == (0.02, 0.4, 0.12)
    assert p.code == "2412"


def test_parse_symmetric():
    p = parse_naca_code("0012")
    assert (p.m, p.p, p.t) == (0.0, 0.0, 0.12)


@pytest.mark.parametrize("bad", ["24", "24123", "", "2a12", "24-2"])
def test_parse_malformed(bad):
    with pytest.raises(NacaCodeError):
        parse_naca_code(bad)


def test_parse_zero_thickness():
    with pytest.raises(NacaCodeError, match="thickness"):
        parse_naca_code("2400")


@pytest.mark.parametrize("code", ["0012", "2412", "4421", "9940", "0101"])
def test_code_roundtrip(code):
    assert parse_naca_code(code).to_code() == code


def test_half_thickness_endpoints():
    assert half_thickness(0.0, 0.12) == 0.0
    assert abs(half_thickness(1.0, 0.12)) <= 1e-12  # closed trailing edge


def test_half_thickness_peak_grid_oracle():
    # dense grid search is the oracle for the peak location and value
    x = np.linspace(0.0, 1.0, 100_001)
    y = half_thickness(x, 0.12)
    i = int(np.argmax(y))
    assert abs(y[i] - 0.06) <= 1e-3
    assert abs(x[i] - 0.30) <= 0.02


def test_half_thickness_linear_in_t():
    x = np.linspace(0.0, 1.0, 257)
    np.testing.assert_allclose(half_thickness(x, 0.24), 2.0 * half_thickness(x, 0.12), rtol=0, atol=1e-15)


def test_half_thickness_domain_error():
    with pytest.raises(ValueError):
        half_thickness(-0.01, 0.12)
    with pytest.raises(ValueError):
        half_thickness(1.01, 0.12)


def test_camber_symmetric_is_zero():
    p = parse_naca_code("0012")
    y, dy = camber_line(np.linspace(0, 1, 11), p)
    assert not y.any() and not dy.any()


def test_camber_peak_at_p():
    p = parse_naca_code("2412")
    y, dy = camber_line(0.4, p)
    assert y == pytest.approx(0.02, abs=1e-15)
    assert dy == pytest.approx(0.0, abs=1e-15)


def test_camber_spot_value_2412():
    # independent evaluation of the piecewise formula at x=0.1 < p:
    # y_c = m/p^2 (2 p x - x^2) = 0.125 * 0.07, slope = 2m/p^2 (p - x)
    y, dy = camber_line(0.1, parse_naca_code("2412"))
    assert y == pytest.approx(0.00875, abs=1e-15)
    assert dy == pytest.approx(0.075, abs=1e-15)


def test_camber_slope_matches_finite_differences():
    p = parse_naca_code("4421")
    h = 1e-7
    xs = np.linspace(0.01, 0.99, 197)
    xs = xs[np.abs(xs - p.p) > 1e-3]  # slope is C0 but curvature jumps at x = p
    y_p, _ = camber_line(xs + h, p)
    y_m, _ = camber_line(xs - h, p)
    _, dy = camber_line(xs, p)
    np.testing.assert_allclose(dy, (y_p - y_m) / (2 * h), atol=1e-6, rtol=0)


def _cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _segments_intersect(p1, p2, p3, p4):
    d1 = _cross2(p4 - p3, p1 - p3)
    d2 = _cross2(p4 - p3, p2 - p3)
    d3 = _cross2(p2 - p1, p3 - p1)
    d4 = _cross2(p2 - p1, p4 - p1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


@pytest.mark.parametrize("code", ["0012", "2412", "4421", "2508"])
def test_polyline_closed_simple_bounded(code):
    poly = surface_polyline(parse_naca_code(code), 60)
    v = poly.vertices
    assert np.array_equal(v[0], v[-1])
    x0, x1, y0, y1 = poly.bounding_box()
    assert x0 >= -0.01 and x1 <= 1.01 and y0 >= -0.5 and y1 <= 0.5
    # simple polygon: no non-adjacent edges intersect
    edges = [(v[i], v[i + 1]) for i in range(len(v) - 1)]
    m = len(edges)
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue  # sharing the closing vertex
            assert not _segments_intersect(*edges[i], *edges[j]), (i, j)


def test_polyline_vertex_count_and_te():
    poly = surface_polyline(parse_naca_code("0012"), 100)
    assert poly.vertices.shape == (201, 2)
    assert poly.vertices[100] == pytest.approx([1.0, 0.0], abs=1e-15)


def test_polyline_symmetric_0012():
    poly = surface_polyline(parse_naca_code("0012"), 100)
    v = poly.vertices
    upper, lower = v[:101], v[100:]
    # reversed lower surface mirrors the upper surface exactly
    np.testing.assert_array_equal(upper[:, 0], lower[::-1][:, 0])
    np.testing.assert_array_equal(upper[:, 1], -lower[::-1][:, 1])


def test_polyline_upper_above_lower_2412():
    p = parse_naca_code("2412")
    poly = surface_polyline(p, 100)
    upper, lower = poly.vertices[:101], poly.vertices[100:][::-1]
    assert np.all(upper[1:-1, 1] > lower[1:-1, 1])


def test_polyline_max_y_0012_grid_oracle():
    poly = surface_polyline(parse_naca_code("0012"), 100)
    assert abs(np.max(np.abs(poly.vertices[:, 1])) - 0.06) <= 2e-3


def test_polyline_rejects_small_n():
    with pytest.raises(ValueError):
        surface_polyline(parse_naca_code("0012"), 3)


def test_polyline_validation():
    with pytest.raises(ValueError, match="closed"):
        Polyline(vertices=np.array([[0.0, 0], [1, 0], [1, 1], [0, 1], [0, 0.5], [0.2, 0.2], [0.3, 0.1], [0.4, 0.2]]))


def test_rotation_pivot_fixed():
    poly = surface_polyline(parse_naca_code("2412"), 50)
    rot = rotate_polyline(poly, 10.0)
    # quarter-chord pivot stays put, other points move
    assert rot.vertices.shape == poly.vertices.shape
    le = poly.vertices[0]
    le_rot = rot.vertices[0]
    assert np.hypot(*(le_rot - le)) > 0.01
    lengths = np.linalg.norm(np.diff(poly.vertices, axis=0), axis=1)
    lengths_rot = np.linalg.norm(np.diff(rot.vertices, axis=0), axis=1)
    np.testing.assert_allclose(lengths_rot, lengths, rtol=1e-12)
    assert rotate_polyline(poly, 0.0) is poly
