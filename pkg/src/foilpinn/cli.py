"""`foil-pinn`: one executable wiring the modules into reproducible pipelines.

Subcommands: geom, sdf, sample, synth, train, eval, report. Every run
resolves its configuration to a canonical JSON document, hashes it, and
embeds the hash (and a format version line) in each artifact it writes, so
outputs are self-describing and byte-identical across reruns of the same
resolved config. Files are written to a temp path and renamed into place.

Exit codes: 0 success, 1 validation/usage error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from . import data as data_mod
from . import evaluation as ev
from . import physics as phy
from . import training as tr
from .geometry import NacaCodeError, parse_naca_code, rotate_polyline, surface_polyline
from .network import MlpConfig, ModelVariant, Normalization, NumericError, load_checkpoint
from .sampling import Domain, SamplingError, build_collocation
from .sdf import sdf_field, signed_distance

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors (exit 1)."""

    def error(self, message):
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _config_hash(resolved: dict) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# geom
# ---------------------------------------------------------------------------


def _cmd_geom(args) -> int:
    resolved = {"cmd": "geom", "naca": args.naca, "n": args.n, "alpha_deg": args.alpha}
    sha = _config_hash(resolved)
    poly = surface_polyline(parse_naca_code(args.naca), args.n)
    if args.alpha:
        poly = rotate_polyline(poly, args.alpha)
    lines = [
        f"# foil-pinn surface v1, naca={args.naca}, n={args.n}, alpha={args.alpha!r}",
        f"# config_sha256={sha}",
        "x,y",
    ]
    lines += [f"{_fmt(x)},{_fmt(y)}" for x, y in poly.vertices]
    _atomic_write(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out} ({poly.vertices.shape[0]} rows) config_sha256={sha}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sdf
# ---------------------------------------------------------------------------


def _read_point_csv(path: str) -> tuple[list[str], list[list[str]], np.ndarray]:
    header = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
            else:
                rows.append(line.split(","))
    if header is None or "x" not in header or "y" not in header:
        raise ValueError(f"{path}: need a CSV with x and y columns")
    ix, iy = header.index("x"), header.index("y")
    pts = np.array([[float(r[ix]), float(r[iy])] for r in rows], dtype=float)
    return header, rows, pts


def _cmd_sdf(args) -> int:
    resolved = {"cmd": "sdf", "naca": args.naca, "n": args.n, "points": os.path.basename(args.points)}
    sha = _config_hash(resolved)
    poly = surface_polyline(parse_naca_code(args.naca), args.n)
    header, rows, pts = _read_point_csv(args.points)
    field = sdf_field(pts, poly, threads=args.threads)
    lines = [
        f"# foil-pinn sdf v1, naca={args.naca}, n={args.n}",
        f"# config_sha256={sha}",
        ",".join(header + ["sdf"]),
    ]
    lines += [",".join(row + [_fmt(s)]) for row, s in zip(rows, field.values)]
    _atomic_write(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out} ({len(rows)} rows) config_sha256={sha}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def _cmd_sample(args) -> int:
    resolved = {
        "cmd": "sample",
        "naca": args.naca,
        "n": args.n,
        "near_frac": args.near_frac,
        "near_band": args.near_band,
        "seed": args.seed,
    }
    sha = _config_hash(resolved)
    poly = surface_polyline(parse_naca_code(args.naca), 200)
    colloc = build_collocation(
        Domain(), poly, args.n, near_fraction=args.near_frac, near_band=args.near_band, seed=args.seed
    )
    lines = [
        f"# foil-pinn collocation v1, naca={args.naca}, n={args.n}, seed={args.seed}",
        f"# config_sha256={sha}",
        "x,y,sdf,role",
    ]
    for role, pts in colloc.roles():
        svals = colloc.interior_sdf if role == "interior" else signed_distance(pts, poly)
        if role == "surface":
            svals = np.zeros(pts.shape[0])
        lines += [f"{_fmt(x)},{_fmt(y)},{_fmt(s)},{role}" for (x, y), s in zip(pts, svals)]
    _atomic_write(args.out, "\n".join(lines) + "\n")
    print(f"wrote {args.out} config_sha256={sha}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def _cmd_synth(args) -> int:
    resolved = {"cmd": "synth", "naca": args.naca, "u_in": args.u_in, "n": args.n, "seed": args.seed}
    sha = _config_hash(resolved)
    case = data_mod.synthetic_case(args.naca, args.u_in, args.n, args.seed)
    data_mod.save_case_csv(case, args.out, extra_comments=[f"config_sha256={sha}"])
    print(f"wrote {args.out} ({len(case)} rows) config_sha256={sha}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train / report configuration
# ---------------------------------------------------------------------------

_DEFAULT_CONFIG = {
    "seed": 0,
    "variant": "L",
    "cases": [],
    "holdout": [],
    "network": {"hidden_layers": 6, "width": 64, "activation": "tanh"},
    "domain": {"x_min": -2.0, "x_max": 4.0, "y_min": -2.0, "y_max": 2.0},
    "schedule": {
        "total_steps": 1000,
        "warmstart_steps": None,
        "learning_rate": 1e-3,
        "lr_decay": 0.5,
        "plateau_patience": 500,
        "plateau_rtol": 1e-3,
        "data_batch": 512,
        "colloc_per_case": 32,
        "surface_per_case": 16,
        "bc_per_case": 8,
    },
    "weights": {f.name: getattr(tr.LossWeights(), f.name) for f in tr.LossWeights.__dataclass_fields__.values()},
    "sampling": {"near_fraction": 0.4, "near_band": 0.25},
    "physics": {
        "mu": 1e-5,
        "standard_sign": True,
        "full_divergence": False,
        "nondim_residuals": True,
        "constrain_inlet_keps": True,
    },
    "aoa_deg": 0.0,
    "outputs": {"checkpoint": "model.ckpt", "log": "train_log.csv", "checkpoint_every": 0},
}


def _merge_defaults(raw: dict, defaults: dict, where: str) -> dict:
    out = {}
    for key, default in defaults.items():
        if isinstance(default, dict) and key in raw and isinstance(raw[key], dict):
            out[key] = _merge_defaults(raw[key], default, f"{where}.{key}")
        else:
            out[key] = raw.get(key, default)
    unknown = set(raw) - set(defaults)
    if unknown:
        raise ValueError(f"unknown config field(s) {sorted(unknown)} in {where}")
    return out


def _build_cases(entries: list, seed: int, salt: int) -> list:
    cases = []
    for i, entry in enumerate(entries):
        if "path" in entry:
            cases.append(data_mod.load_case_csv(entry["path"]))
        else:
            missing = {"naca", "u_in", "n_points"} - set(entry)
            if missing:
                raise ValueError(f"case entry {i} is missing field(s) {sorted(missing)}")
            cases.append(
                data_mod.synthetic_case(
                    entry["naca"], float(entry["u_in"]), int(entry["n_points"]), seed=(seed, salt, i)
                )
            )
    return cases


def _setup_from_config(cfg: dict, variant: str, out_dir: str | None, tag: str = "") -> tr.TrainSetup:
    domain = Domain(**cfg["domain"])
    mlp = MlpConfig(
        variant=ModelVariant(variant),
        norm=Normalization.from_domain(domain),
        **cfg["network"],
    )
    schedule = tr.Schedule(seed=cfg["seed"], **cfg["schedule"])
    weights = tr.LossWeights(**cfg["weights"])
    consts = phy.TurbulenceConstants(mu=cfg["physics"]["mu"])
    outputs = cfg["outputs"]
    ckpt = outputs["checkpoint"]
    if out_dir:
        base, ext = os.path.splitext(os.path.basename(ckpt))
        ckpt = os.path.join(out_dir, f"{base}{tag}{ext}")
    return tr.TrainSetup(
        cases=_build_cases(cfg["cases"], cfg["seed"], 1000),
        mlp=mlp,
        schedule=schedule,
        weights=weights,
        domain=domain,
        consts=consts,
        near_fraction=cfg["sampling"]["near_fraction"],
        near_band=cfg["sampling"]["near_band"],
        aoa_deg=cfg["aoa_deg"],
        standard_sign=cfg["physics"]["standard_sign"],
        full_divergence=cfg["physics"]["full_divergence"],
        nondim_residuals=cfg["physics"]["nondim_residuals"],
        constrain_inlet_keps=cfg["physics"]["constrain_inlet_keps"],
        checkpoint_path=ckpt,
        checkpoint_every=outputs["checkpoint_every"],
    )


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return _merge_defaults(raw, _DEFAULT_CONFIG, "config")


def _write_train_log(records, path: str, sha: str) -> None:
    lines = [f"# foil-pinn train-log v1, config_sha256={sha}", ",".join(tr.LOG_COLUMNS)]
    lines += [",".join(rec.row()) for rec in records]
    _atomic_write(path, "\n".join(lines) + "\n")


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    sha = _config_hash(cfg)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
    setup = _setup_from_config(cfg, cfg["variant"], args.out_dir)
    params, records = tr.train(setup)
    log_path = cfg["outputs"]["log"]
    if args.out_dir:
        log_path = os.path.join(args.out_dir, os.path.basename(log_path))
    _write_train_log(records, log_path, sha)
    # rewrite the checkpoint with the config hash in its metadata
    from .network import save_checkpoint

    save_checkpoint(params, setup.checkpoint_path, {"config_sha256": sha, "resolved_config": cfg})
    final = records[-1].total if records else float("nan")
    print(f"trained {cfg['variant']} for {len(records)} steps, final total loss {final!r}")
    print(f"checkpoint={setup.checkpoint_path} log={log_path} config_sha256={sha}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def _cmd_eval(args) -> int:
    params = load_checkpoint(args.checkpoint)
    case = data_mod.load_case_csv(args.case)
    resolved = {
        "cmd": "eval",
        "checkpoint": os.path.basename(args.checkpoint),
        "case": os.path.basename(args.case),
        "threshold": args.threshold,
        "grid": args.grid,
    }
    sha = _config_hash(resolved)
    report = ev.evaluate_case(params, case, threshold=args.threshold)
    payload = {
        "format": "foil-pinn eval-report",
        "version": 1,
        "config_sha256": sha,
        "config": resolved,
        "report": report.to_dict(),
    }
    _atomic_write(args.out, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    extras = ""
    if args.grid:
        truth = None
        if case.provenance == "synthetic" or args.synthetic_truth:
            truth = data_mod.synthetic_flow(case.naca_code, case.u_in)
        grid_path = args.grid_out or f"{os.path.splitext(args.out)[0]}_grid.csv"
        ev.export_grid(
            params,
            case.naca_code,
            case.u_in,
            resolution=args.grid,
            truth=truth,
            csv_path=grid_path,
            pgm_path=args.image,
            extra_comments=[f"config_sha256={sha}"],
        )
        extras = f" grid={grid_path}" + (f" image={args.image}" if args.image else "")
    print(
        f"velocity median {report.vel_median:.3f}% mean {report.vel_mean:.3f}% | "
        f"pressure median {report.p_median:.3f}% mean {report.p_mean:.3f}% "
        f"(threshold {args.threshold}, sdf_recomputed={report.sdf_recomputed})"
    )
    print(f"wrote {args.out}{extras} config_sha256={sha}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report (ablation driver)
# ---------------------------------------------------------------------------


def _cmd_report(args) -> int:
    cfg = _load_config(args.config)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        ModelVariant(v)  # validate early
    resolved = {"cmd": "report", "variants": variants, "config": cfg}
    sha = _config_hash(resolved)
    if not cfg["holdout"]:
        raise ValueError("report needs at least one `holdout` case entry in the config")
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
    holdout = _build_cases(cfg["holdout"], cfg["seed"], 2000)

    results: dict[str, list[ev.ErrorReport]] = {}
    for variant in variants:
        setup = _setup_from_config(cfg, variant, args.out_dir, tag=f"_{variant}")
        params, records = tr.train(setup)
        log_path = os.path.join(args.out_dir or ".", f"train_log_{variant}.csv")
        _write_train_log(records, log_path, sha)
        results[variant] = [ev.evaluate_case(params, case, threshold=args.threshold) for case in holdout]

    rows = []
    for zone in ("near", "far", "overall"):
        for ci, case in enumerate(holdout):
            label = f"NACA {case.naca_code}, u_in={case.u_in:g}"
            values = {}
            for variant in variants:
                z = results[variant][ci].vel_zones
                values[variant] = {"near": z.near, "far": z.far, "overall": z.overall}[zone]
            rows.append({"label": label, "zone": zone, "values": values})
    table = ev.format_comparison_table(rows, tuple(variants))

    flags = []
    if "L" in results and "G" in results:
        for ci in range(len(holdout)):
            l_near = results["L"][ci].vel_zones.near
            g_near = results["G"][ci].vel_zones.near
            flags.append(
                {
                    "case": holdout[ci].naca_code,
                    "u_in": holdout[ci].u_in,
                    "l_near": l_near,
                    "g_near": g_near,
                    "l_not_worse_than_g_near": (l_near is not None and g_near is not None and l_near <= g_near),
                }
            )
    payload = {
        "format": "foil-pinn ablation-report",
        "version": 1,
        "config_sha256": sha,
        "zone_threshold": args.threshold,
        "variants": variants,
        "velocity_zone_means_pct": rows,
        "near_zone_l_vs_g": flags,
        "reports": {
            v: [r.to_dict() for r in reps] for v, reps in results.items()
        },
    }
    out_dir = args.out_dir or "."
    json_path = os.path.join(out_dir, "ablation_report.json")
    table_path = os.path.join(out_dir, "ablation_table.txt")
    _atomic_write(json_path, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    header = [
        f"# foil-pinn ablation-table v1, config_sha256={sha}",
        f"# velocity-magnitude mean |error| in % by zone (threshold {args.threshold} chord)",
    ]
    _atomic_write(table_path, "\n".join(header) + "\n" + table + "\n")
    print(table)
    for f in flags:
        print(
            f"near zone, NACA {f['case']} u_in={f['u_in']:g}: "
            f"L={f['l_near']:.2f}% G={f['g_near']:.2f}% -> L ≤ G: {f['l_not_worse_than_g_near']}"
        )
    print(f"wrote {json_path} and {table_path} config_sha256={sha}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# top level
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="foil-pinn", description=__doc__)
    parser.add_argument("--version", action="version", version=f"foil-pinn {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("geom", help="emit a closed airfoil surface polyline CSV")
    p.add_argument("--naca", required=True)
    p.add_argument("--n", type=int, default=200, help="stations per side (output has 2n+1 rows)")
    p.add_argument("--alpha", type=float, default=0.0, help="angle of attack, degrees")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_geom)

    p = sub.add_parser("sdf", help="append a signed-distance column to a point CSV")
    p.add_argument("--naca", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sdf)

    p = sub.add_parser("sample", help="emit a collocation set CSV (x,y,sdf,role)")
    p.add_argument("--naca", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--near-frac", type=float, default=0.4, dest="near_frac")
    p.add_argument("--near-band", type=float, default=0.25, dest="near_band")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("synth", help="emit a synthetic analytic case CSV")
    p.add_argument("--naca", required=True)
    p.add_argument("--u-in", type=float, required=True, dest="u_in")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("train", help="train a surrogate from a JSON run config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None, dest="out_dir")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint against a case CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--case", required=True)
    p.add_argument("--threshold", type=float, default=0.25)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=int, default=0, help="also export an NxN field grid")
    p.add_argument("--grid-out", default=None, dest="grid_out")
    p.add_argument("--image", default=None, help="grayscale |velocity error| PGM path")
    p.add_argument(
        "--synthetic-truth",
        action="store_true",
        dest="synthetic_truth",
        help="force the synthetic analytic truth for the error image",
    )
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("report", help="train L,G,LG on shared seeds and compare near/far errors")
    p.add_argument("--config", required=True)
    p.add_argument("--variants", default="L,G,LG")
    p.add_argument("--threshold", type=float, default=0.25)
    p.add_argument("--out-dir", default=".", dest="out_dir")
    p.set_defaults(fn=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (NacaCodeError, data_mod.CaseLoadError, SamplingError, ValueError, OSError, KeyError) as exc:
        print(f"foil-pinn: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericError, tr.TrainingDiverged, FloatingPointError) as exc:
        print(f"foil-pinn: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
