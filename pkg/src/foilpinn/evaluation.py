"""Normalized error metrics, zone summaries, and field/grid exports.

Errors follow the inlet-speed normalizations: velocity-magnitude error is
(pred - truth) / u_in and pressure error is (pred - truth) / (0.5 u_in^2),
kept signed per point; summaries report mean and median of the absolute
values in percent. Zone reports split points at a signed-distance
threshold (printed alongside the numbers, since it defines them).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .data import CaseDataset, SyntheticCaseModel
from .geometry import parse_naca_code, surface_polyline
from .network import MlpParams, build_input, denormalize, forward
from .sampling import Domain, zone_split
from .sdf import signed_distance
from .training import reynolds

__all__ = [
    "velocity_error",
    "pressure_error",
    "summarize",
    "zone_report",
    "ZoneMeans",
    "ErrorReport",
    "predict_fields",
    "evaluate_case",
    "export_grid",
    "write_pgm",
    "format_comparison_table",
]

DEFAULT_ZONE_THRESHOLD = 0.25
PGM_CLIP = 0.5  # |velocity error|/u_in mapped linearly onto 0..255, clipped here


def velocity_error(pred_mag, truth_mag, u_in):
    """Signed normalized velocity-magnitude error (pred - truth) / u_in."""
    if np.any(np.asarray(u_in) <= 0.0):
        raise ValueError("u_in must be positive")
    return (np.asarray(pred_mag, float) - np.asarray(truth_mag, float)) / u_in


def pressure_error(pred_p, truth_p, u_in):
    """Signed normalized pressure error (pred - truth) / (0.5 u_in^2)."""
    if np.any(np.asarray(u_in) <= 0.0):
        raise ValueError("u_in must be positive")
    return (np.asarray(pred_p, float) - np.asarray(truth_p, float)) / (0.5 * np.asarray(u_in) ** 2)


def summarize(errors) -> tuple[float, float]:
    """(mean, median) of absolute errors, in the units given.

    The median of an even count is the midpoint of the two central order
    statistics. The mean is sensitive to near-wall outliers; the median is
    the robust companion number.
    """
    e = np.abs(np.asarray(errors, dtype=float))
    if e.size == 0:
        raise ValueError("summarize needs at least one error value")
    return float(np.mean(e)), float(np.median(e))


@dataclass(frozen=True)
class ZoneMeans:
    """Mean absolute errors by zone; a zone with no points reports None."""

    near: float | None
    far: float | None
    overall: float
    n_near: int
    n_far: int


def zone_report(errors, sdf_values, threshold: float = DEFAULT_ZONE_THRESHOLD) -> ZoneMeans:
    """Mean absolute error over the near/far partition at `threshold`."""
    e = np.abs(np.asarray(errors, dtype=float))
    s = np.asarray(sdf_values, dtype=float)
    if e.shape != s.shape:
        raise ValueError("errors and sdf values must align")
    near, far = zone_split(s, threshold)
    return ZoneMeans(
        near=float(np.mean(e[near])) if near.any() else None,
        far=float(np.mean(e[far])) if far.any() else None,
        overall=float(np.mean(e)),
        n_near=int(near.sum()),
        n_far=int(far.sum()),
    )


def predict_fields(
    params: MlpParams,
    naca_code: str,
    u_in: float,
    x,
    y,
    sdf=None,
    n_per_side: int = 200,
) -> dict[str, np.ndarray]:
    """Physical-unit surrogate predictions at arbitrary exterior points.

    The signed distance is recomputed from the airfoil when not supplied.
    """
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    airfoil = parse_naca_code(naca_code)
    if sdf is None and params.config.variant.uses_sdf:
        poly = surface_polyline(airfoil, n_per_side)
        sdf = signed_distance(np.column_stack([x, y]), poly)
    inputs = build_input(
        params.config.variant, x, y, sdf=sdf, airfoil=airfoil, u_in=u_in, norm=params.config.norm
    )
    state, _ = denormalize(forward(params, inputs), None, u_in)
    mag = np.hypot(state.u, state.v)
    return {"u": state.u, "v": state.v, "p": state.p, "k": state.k, "eps": state.eps, "speed": mag}


@dataclass
class ErrorReport:
    """Per-case evaluation: per-point signed percent errors plus summaries."""

    naca_code: str
    u_in: float
    reynolds: float
    threshold: float
    n_points: int
    vel_errors_pct: np.ndarray  # signed, percent
    p_errors_pct: np.ndarray
    vel_mean: float
    vel_median: float
    p_mean: float
    p_median: float
    vel_zones: ZoneMeans
    p_zones: ZoneMeans
    sdf_recomputed: bool = False

    def to_dict(self) -> dict:
        def zones(z: ZoneMeans) -> dict:
            return {"near": z.near, "far": z.far, "overall": z.overall, "n_near": z.n_near, "n_far": z.n_far}

        return {
            "naca_code": self.naca_code,
            "u_in": self.u_in,
            "reynolds": self.reynolds,
            "zone_threshold": self.threshold,
            "n_points": self.n_points,
            "velocity_pct": {
                "mean": self.vel_mean,
                "median": self.vel_median,
                "zones": zones(self.vel_zones),
            },
            "pressure_pct": {
                "mean": self.p_mean,
                "median": self.p_median,
                "zones": zones(self.p_zones),
            },
            "sdf_recomputed": self.sdf_recomputed,
        }


def evaluate_case(
    params: MlpParams,
    case: CaseDataset,
    threshold: float = DEFAULT_ZONE_THRESHOLD,
    n_per_side: int = 200,
) -> ErrorReport:
    """Evaluate the surrogate against a case's own truth samples."""
    recomputed = case.sdf is None
    sdf_vals = case.ensure_sdf(n_per_side=n_per_side)
    pred = predict_fields(params, case.naca_code, case.u_in, case.x, case.y, sdf=sdf_vals)
    truth_mag = np.hypot(case.u, case.v)
    ve = 100.0 * velocity_error(pred["speed"], truth_mag, case.u_in)
    pe = 100.0 * pressure_error(pred["p"], case.p, case.u_in)
    vel_mean, vel_median = summarize(ve)
    p_mean, p_median = summarize(pe)
    return ErrorReport(
        naca_code=case.naca_code,
        u_in=case.u_in,
        reynolds=reynolds(case.u_in),
        threshold=threshold,
        n_points=len(case),
        vel_errors_pct=ve,
        p_errors_pct=pe,
        vel_mean=vel_mean,
        vel_median=vel_median,
        p_mean=p_mean,
        p_median=p_median,
        vel_zones=zone_report(ve, sdf_vals, threshold),
        p_zones=zone_report(pe, sdf_vals, threshold),
        sdf_recomputed=recomputed,
    )


def export_grid(
    params: MlpParams,
    naca_code: str,
    u_in: float,
    domain: Domain | None = None,
    resolution: int = 64,
    truth: SyntheticCaseModel | None = None,
    csv_path: str | None = None,
    pgm_path: str | None = None,
    clip: float = PGM_CLIP,
    n_per_side: int = 200,
    extra_comments: list[str] | None = None,
):
    """Predictions on a regular grid plus an optional grayscale error image.

    Grid cells inside the airfoil (sdf < 0) are masked: their field columns
    are written as zero and their image pixels are black. The image encodes
    |velocity error| / u_in linearly up to `clip`, so it needs `truth`;
    without a truth model only the CSV is produced.
    """
    if resolution < 16:
        raise ValueError("resolution must be >= 16 per axis")
    domain = domain or Domain()
    xs = np.linspace(domain.x_min, domain.x_max, resolution)
    ys = np.linspace(domain.y_min, domain.y_max, resolution)
    gx, gy = np.meshgrid(xs, ys)
    gx, gy = gx.ravel(), gy.ravel()
    poly = surface_polyline(parse_naca_code(naca_code), n_per_side)
    sdf_vals = signed_distance(np.column_stack([gx, gy]), poly)
    outside = sdf_vals >= 0.0

    fields = {name: np.zeros(gx.size) for name in ("u", "v", "p", "k", "eps")}
    pred = predict_fields(
        params, naca_code, u_in, gx[outside], gy[outside], sdf=sdf_vals[outside], n_per_side=n_per_side
    )
    for name in fields:
        fields[name][outside] = pred[name]

    grid = {"x": gx, "y": gy, "sdf": sdf_vals, **fields}
    if csv_path is not None:
        _write_grid_csv(grid, csv_path, naca_code, u_in, resolution, extra_comments)

    image = None
    if truth is not None:
        speed_pred = np.hypot(fields["u"], fields["v"])
        tfields = truth.evaluate(gx[outside], gy[outside], dist=sdf_vals[outside])
        speed_truth = np.zeros(gx.size)
        speed_truth[outside] = np.hypot(tfields["u"], tfields["v"])
        err = np.zeros(gx.size)
        err[outside] = np.abs(velocity_error(speed_pred[outside], speed_truth[outside], u_in))
        pixels = np.rint(255.0 * np.minimum(err, clip) / clip).astype(int)
        pixels[~outside] = 0
        image = pixels.reshape(resolution, resolution)[::-1]  # top row = highest y
        if pgm_path is not None:
            comment = f"foil-pinn error image v1, naca={naca_code}, u_in={u_in!r}, clip={clip!r}"
            if extra_comments:
                comment += ", " + ", ".join(extra_comments)
            write_pgm(image, pgm_path, comment=comment)
    return grid, image


def _write_grid_csv(grid, path, naca_code, u_in, resolution, extra_comments):
    columns = ("x", "y", "sdf", "u", "v", "p", "k", "eps")
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# foil-pinn grid v1, naca={naca_code}, u_in={u_in!r}, resolution={resolution}\n")
        for comment in extra_comments or []:
            fh.write(f"# {comment}\n")
        fh.write(",".join(columns) + "\n")
        for row in zip(*(grid[c] for c in columns)):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    os.replace(tmp, path)


def write_pgm(image: np.ndarray, path: str, comment: str = "") -> None:
    """Plain-text (P2) portable graymap, bit-exact for textual diffing."""
    img = np.asarray(image, dtype=int)
    if img.ndim != 2 or img.min() < 0 or img.max() > 255:
        raise ValueError("image must be a 2-D array of 0..255 values")
    lines = ["P2"]
    if comment:
        lines.append(f"# {comment}")
    lines.append(f"{img.shape[1]} {img.shape[0]}")
    lines.append("255")
    lines += [" ".join(str(v) for v in row) for row in img]
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def format_comparison_table(rows: list[dict], variants: tuple[str, ...] = ("L", "G", "LG")) -> str:
    """Fixed-width near/far/overall comparison across model variants.

    `rows` entries: {"label": str, "zone": "near"|"far"|"overall",
    "values": {variant: mean_pct or None}}.
    """
    label_w = max([len(r["label"]) + len(r["zone"]) + 3 for r in rows] + [16])
    header = f"{'validation case':<{label_w}}" + "".join(f"{v + ' model':>12}" for v in variants)
    out = [header, "-" * len(header)]
    for r in rows:
        label = f"{r['label']} ({r['zone']})"
        cells = []
        for v in variants:
            val = r["values"].get(v)
            cells.append(f"{val:>12.2f}" if val is not None else f"{'n/a':>12}")
        out.append(f"{label:<{label_w}}" + "".join(cells))
    return "\n".join(out)
