"""Point-cloud flow datasets: CSV ingestion, a synthetic analytic stand-in
generator, and manufactured solutions for operator verification.

The synthetic generator provides desk-scale training data in place of
external CFD exports. It evaluates incompressible potential flow around a
conformally mapped (Joukowski-type) body whose maximum thickness is fitted
to the airfoil's thickness digits, with Bernoulli pressure and smooth
positive k/eps profiles decaying away from the surface. It is a documented
approximation: exactly divergence-free and wall-bounded like the real flow,
but with slip at the wall and no wake, so it never claims CFD fidelity.
"""

from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import dataclass

import numpy as np

from .geometry import AirfoilParams, Polyline, parse_naca_code, surface_polyline
from .network import FlowDerivs, FlowState
from .physics import TurbulenceConstants
from .sampling import Domain, sample_interior
from .sdf import signed_distance

__all__ = [
    "FieldSample",
    "CaseDataset",
    "CaseLoadError",
    "ManufacturedCase",
    "SyntheticCaseModel",
    "JoukowskiFlow",
    "load_case_csv",
    "save_case_csv",
    "synthetic_flow",
    "synthetic_case",
    "manufactured_case",
    "MANUFACTURED_IDS",
]

CASE_HEADER_RE = re.compile(r"#\s*foil-pinn case v(\d+),\s*naca=(\d{4}),\s*u_in=([^,\s]+)")
PROVENANCE_RE = re.compile(r"#\s*provenance=(\w+)")
CASE_FORMAT_VERSION = 1

U_IN_RANGE = (2.0, 7.0)  # training range of inlet speeds, m/s

_EXTERIOR_TOL = -1e-9  # tolerance when checking sdf >= 0 against rounding


class CaseLoadError(ValueError):
    """A case CSV failed validation; the message names the offending row or column."""


@dataclass(frozen=True)
class FieldSample:
    """One flow record: position in chord units, velocities in m/s,
    density-normalized pressure, optional turbulence quantities."""

    x: float
    y: float
    u: float
    v: float
    p: float
    k: float | None = None
    eps: float | None = None


@dataclass
class CaseDataset:
    """Column-oriented point cloud for one (airfoil, inlet speed) case."""

    naca_code: str
    u_in: float
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    k: np.ndarray | None = None
    eps: np.ndarray | None = None
    sdf: np.ndarray | None = None
    provenance: str = "cfd"
    extrapolation: bool = False

    def __post_init__(self):
        if self.provenance not in ("cfd", "synthetic", "manufactured"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        n = self.x.shape[0]
        for name in ("y", "u", "v", "p"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"column {name} has wrong length")
        for name in ("k", "eps", "sdf"):
            col = getattr(self, name)
            if col is not None and col.shape != (n,):
                raise ValueError(f"column {name} has wrong length")
        if (self.k is None) != (self.eps is None):
            raise ValueError("k and eps columns must be present together")
        for name in ("x", "y", "u", "v", "p", "k", "eps", "sdf"):
            col = getattr(self, name)
            if col is not None and not np.all(np.isfinite(col)):
                raise ValueError(f"column {name} contains non-finite values")
        if self.k is not None and (np.any(self.k <= 0.0) or np.any(self.eps <= 0.0)):
            raise ValueError("k and eps must be strictly positive where present")
        lo, hi = U_IN_RANGE
        if not self.extrapolation and not (lo <= self.u_in <= hi):
            raise ValueError(
                f"u_in={self.u_in} outside training range [{lo}, {hi}]; pass extrapolation=True to override"
            )

    def __len__(self) -> int:
        return int(self.x.shape[0])

    @property
    def has_turbulence(self) -> bool:
        return self.k is not None

    def sample(self, i: int) -> FieldSample:
        return FieldSample(
            x=float(self.x[i]),
            y=float(self.y[i]),
            u=float(self.u[i]),
            v=float(self.v[i]),
            p=float(self.p[i]),
            k=float(self.k[i]) if self.k is not None else None,
            eps=float(self.eps[i]) if self.eps is not None else None,
        )

    @property
    def samples(self) -> list[FieldSample]:
        return [self.sample(i) for i in range(len(self))]

    def airfoil(self) -> AirfoilParams:
        return parse_naca_code(self.naca_code)

    def ensure_sdf(self, poly: Polyline | None = None, n_per_side: int = 200) -> np.ndarray:
        """Signed distances of the sample points, computed and cached on demand."""
        if self.sdf is None:
            poly = poly or surface_polyline(self.airfoil(), n_per_side)
            self.sdf = signed_distance(np.column_stack([self.x, self.y]), poly)
        return self.sdf


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CaseLoadError(f"row {row}: column {col} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise CaseLoadError(f"row {row}: column {col} is not finite: {text!r}")
    return value


def load_case_csv(
    path: str,
    naca_code: str | None = None,
    u_in: float | None = None,
    validate_exterior: bool = True,
    n_per_side: int = 200,
) -> CaseDataset:
    """Read a case CSV (header x,y,u,v,p with optional k,eps and sdf).

    Case identity comes from the version comment line or from the explicit
    arguments; explicit arguments must agree with the header when both are
    given. Rows are validated for finiteness and, unless disabled, for
    lying outside the named airfoil; errors carry the 1-based data row.
    """
    header_code: str | None = None
    header_u: float | None = None
    provenance = "cfd"
    columns: list[str] | None = None
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                m = CASE_HEADER_RE.match(line)
                if m:
                    if int(m.group(1)) != CASE_FORMAT_VERSION:
                        raise CaseLoadError(f"unsupported case format version v{m.group(1)}")
                    header_code, header_u = m.group(2), float(m.group(3))
                mp = PROVENANCE_RE.match(line)
                if mp:
                    provenance = mp.group(1)
                continue
            if columns is None:
                columns = [c.strip() for c in line.split(",")]
            else:
                rows.append(next(csv.reader([line])))
    if columns is None:
        raise CaseLoadError(f"{path}: no header row found")
    required = ["x", "y", "u", "v", "p"]
    missing = [c for c in required if c not in columns]
    if missing:
        raise CaseLoadError(f"{path}: missing required columns {missing}")
    has_keps = "k" in columns and "eps" in columns
    if ("k" in columns) != ("eps" in columns):
        raise CaseLoadError(f"{path}: k and eps columns must appear together")
    has_sdf = "sdf" in columns

    code = naca_code or header_code
    if code is None:
        raise CaseLoadError(f"{path}: no case header line and no naca_code given")
    if naca_code and header_code and naca_code != header_code:
        raise CaseLoadError(f"{path}: header says naca={header_code}, caller says {naca_code}")
    speed = u_in if u_in is not None else header_u
    if speed is None:
        raise CaseLoadError(f"{path}: no case header line and no u_in given")
    if u_in is not None and header_u is not None and abs(u_in - header_u) > 1e-12:
        raise CaseLoadError(f"{path}: header says u_in={header_u}, caller says {u_in}")

    idx = {c: i for i, c in enumerate(columns)}
    data: dict[str, list[float]] = {c: [] for c in columns}
    for r, row in enumerate(rows, start=1):
        if len(row) != len(columns):
            raise CaseLoadError(f"row {r}: expected {len(columns)} fields, got {len(row)}")
        for c in columns:
            data[c].append(_parse_float(row[idx[c]], r, c))
    cols = {c: np.asarray(v, dtype=float) for c, v in data.items()}

    if has_keps:
        for name in ("k", "eps"):
            bad = np.nonzero(cols[name] <= 0.0)[0]
            if bad.size:
                raise CaseLoadError(f"row {int(bad[0]) + 1}: column {name} must be positive")

    dataset = CaseDataset(
        naca_code=code,
        u_in=float(speed),
        x=cols["x"],
        y=cols["y"],
        u=cols["u"],
        v=cols["v"],
        p=cols["p"],
        k=cols["k"] if has_keps else None,
        eps=cols["eps"] if has_keps else None,
        sdf=cols["sdf"] if has_sdf else None,
        provenance=provenance,
        extrapolation=not (U_IN_RANGE[0] <= float(speed) <= U_IN_RANGE[1]),
    )
    if validate_exterior:
        poly = surface_polyline(parse_naca_code(code), n_per_side)
        s = signed_distance(np.column_stack([dataset.x, dataset.y]), poly)
        bad = np.nonzero(s < _EXTERIOR_TOL)[0]
        if bad.size:
            raise CaseLoadError(
                f"row {int(bad[0]) + 1}: point lies inside airfoil {code} (sdf={s[bad[0]]:.3e})"
            )
    return dataset


def save_case_csv(dataset: CaseDataset, path: str, extra_comments: list[str] | None = None) -> None:
    """Write a case CSV with the versioned header comment; floats use
    shortest round-trip decimal form (at most 17 significant digits)."""
    columns = ["x", "y", "u", "v", "p"]
    if dataset.has_turbulence:
        columns += ["k", "eps"]
    if dataset.sdf is not None:
        columns.append("sdf")
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# foil-pinn case v{CASE_FORMAT_VERSION}, naca={dataset.naca_code}, u_in={dataset.u_in!r}\n")
        fh.write(f"# provenance={dataset.provenance}\n")
        for comment in extra_comments or []:
            fh.write(f"# {comment}\n")
        fh.write(",".join(columns) + "\n")
        arrays = [getattr(dataset, c) for c in columns]
        for row in zip(*arrays):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Synthetic analytic stand-in: potential flow around a Joukowski-type body
# ---------------------------------------------------------------------------


@dataclass
class JoukowskiFlow:
    """Potential flow around a mapped circle, rescaled to unit chord.

    The circle (center mu, radius a through the cusp point c) maps through
    zeta + c^2/zeta to a foil-like body; an affine transform places its
    leading edge at 0 and trailing edge at 1+0j. Circulation satisfies the
    trailing-edge (Kutta) condition, so the velocity stays finite there.
    """

    c: float
    mu: complex
    a: float
    z_le: complex
    z_te: complex
    u_in: float

    def __post_init__(self):
        self.scale = 1.0 / (self.z_te - self.z_le)  # chord-plane = (z - z_le) * scale
        self.onset = self.u_in * self.scale  # complex velocity at infinity in the map plane
        q = abs(self.onset)
        alpha = -np.angle(self.onset)  # onset flow angle in the map plane
        beta = -np.angle(self.c - self.mu)
        self.gamma = -4.0 * math.pi * self.a * q * math.sin(alpha + beta)
        self._q = q
        self._alpha = alpha

    def _to_map_plane(self, x, y) -> np.ndarray:
        zp = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
        return self.z_le + zp / self.scale

    def _zeta_of_z(self, z: np.ndarray) -> np.ndarray:
        root = np.sqrt(z * z - 4.0 * self.c * self.c)
        zeta_a = 0.5 * (z + root)
        zeta_b = 0.5 * (z - root)
        pick_a = np.abs(zeta_a - self.mu) >= np.abs(zeta_b - self.mu)
        return np.where(pick_a, zeta_a, zeta_b)

    def velocity(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """(u, v) in chord-plane coordinates; exactly divergence-free."""
        z = self._to_map_plane(x, y)
        zeta = self._zeta_of_z(z)
        eta = zeta - self.mu
        w_circle = (
            self._q * np.exp(-1j * self._alpha)
            - self._q * np.exp(1j * self._alpha) * (self.a / eta) ** 2
            - 1j * self.gamma / (2.0 * math.pi * eta)
        )
        dz_dzeta = 1.0 - (self.c / zeta) ** 2
        w = w_circle / dz_dzeta / self.scale
        return np.real(w), -np.imag(w)

    def speed(self, x, y) -> np.ndarray:
        u, v = self.velocity(x, y)
        return np.hypot(u, v)

    def pressure(self, x, y) -> np.ndarray:
        """Bernoulli pressure with far-field reference zero: 0.5 (u_in^2 - |U|^2)."""
        return 0.5 * (self.u_in**2 - self.speed(x, y) ** 2)

    def in_body(self, x, y) -> np.ndarray:
        """True where a point maps inside the generating circle."""
        zeta = self._zeta_of_z(self._to_map_plane(x, y))
        return np.abs(zeta - self.mu) < self.a * (1.0 + 1e-12)

    def stagnation_points(self) -> list[complex]:
        """Chord-plane stagnation locations (w_circle == 0 off the cusp)."""
        # q e^{-ia} eta^2 - i gamma/(2 pi) eta - q e^{ia} a^2 = 0
        pa = self._q * np.exp(-1j * self._alpha)
        pb = -1j * self.gamma / (2.0 * math.pi)
        pc = -self._q * np.exp(1j * self._alpha) * self.a**2
        disc = np.sqrt(pb * pb - 4.0 * pa * pc)
        out = []
        for eta in ((-pb + disc) / (2 * pa), (-pb - disc) / (2 * pa)):
            zeta = eta + self.mu
            z = zeta + self.c**2 / zeta
            out.append((z - self.z_le) * self.scale)
        return out


def _body_thickness(c: float, mu: complex, a: float, n: int = 2048) -> float:
    """Max thickness / chord of the mapped body, measured on a dense trace."""
    theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    zeta = mu + a * np.exp(1j * theta)
    z = zeta + c * c / zeta
    xs, ys = np.real(z), np.imag(z)
    i_te = int(np.argmax(xs))
    xs, ys = np.roll(xs, -i_te), np.roll(ys, -i_te)
    i_le = int(np.argmin(xs))
    x1, y1 = xs[: i_le + 1], ys[: i_le + 1]
    x2 = np.concatenate([xs[i_le:], xs[:1]])
    y2 = np.concatenate([ys[i_le:], ys[:1]])
    chord = xs.max() - xs.min()
    grid = np.linspace(xs.min() + 0.01 * chord, xs.max() - 0.01 * chord, 512)
    o1 = np.argsort(x1)
    o2 = np.argsort(x2)
    ya = np.interp(grid, x1[o1], y1[o1])
    yb = np.interp(grid, x2[o2], y2[o2])
    return float(np.max(np.abs(ya - yb)) / chord)


def _fit_joukowski(t_target: float, m_target: float, u_in: float) -> JoukowskiFlow:
    """Bisect the circle offset until the mapped body's max thickness
    matches the thickness digits; camber uses the thin-body approximation."""
    c = 1.0
    mu_y = 2.0 * c * m_target
    lo, hi = 1e-4, 0.9
    for _ in range(80):
        e = 0.5 * (lo + hi)
        mu = complex(-e * c, mu_y)
        a = abs(c - mu)
        if _body_thickness(c, mu, a) < t_target:
            lo = e
        else:
            hi = e
    e = 0.5 * (lo + hi)
    mu = complex(-e * c, mu_y)
    a = abs(c - mu)
    theta = np.linspace(0.0, 2.0 * math.pi, 8192, endpoint=False)
    zeta = mu + a * np.exp(1j * theta)
    z = zeta + c * c / zeta
    z_te = complex(2.0 * c, 0.0)  # the cusp image is exact
    z_le = complex(z[np.argmin(np.real(z))])
    return JoukowskiFlow(c=c, mu=mu, a=a, z_le=z_le, z_te=z_te, u_in=u_in)


@dataclass
class SyntheticCaseModel:
    """Analytic truth for one synthetic case: potential-flow velocity and
    pressure plus wall-distance turbulence profiles.

    k(d) = k_far + (k_wall - k_far) exp(-d / decay) and
    eps = C_mu^0.75 k^1.5 / length_scale, so both are smooth, strictly
    positive, and scale like u_in^2 and u_in^3 respectively.
    """

    params: AirfoilParams
    poly: Polyline
    flow: JoukowskiFlow
    u_in: float
    k_wall_coeff: float = 0.03
    k_intensity: float = 0.05
    decay: float = 0.05
    length_scale: float = 0.05
    consts: TurbulenceConstants = None

    def __post_init__(self):
        if self.consts is None:
            self.consts = TurbulenceConstants()

    def turbulence(self, dist) -> tuple[np.ndarray, np.ndarray]:
        d = np.asarray(dist, dtype=float)
        k_far = 1.5 * (self.k_intensity * self.u_in) ** 2
        k_wall = self.k_wall_coeff * self.u_in**2
        k = k_far + (k_wall - k_far) * np.exp(-d / self.decay)
        eps = self.consts.C_mu**0.75 * k**1.5 / self.length_scale
        return k, eps

    def evaluate(self, x, y, dist=None) -> dict[str, np.ndarray]:
        """Truth fields at exterior points; dist defaults to the airfoil sdf."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if dist is None:
            dist = signed_distance(np.column_stack([x, y]), self.poly)
        u, v = self.flow.velocity(x, y)
        k, eps = self.turbulence(dist)
        return {"u": u, "v": v, "p": self.flow.pressure(x, y), "k": k, "eps": eps}


def synthetic_flow(naca_code: str, u_in: float, n_per_side: int = 200, **profile_kwargs) -> SyntheticCaseModel:
    """Build the analytic stand-in model for one (airfoil, speed) pair."""
    params = parse_naca_code(naca_code)
    poly = surface_polyline(params, n_per_side)
    flow = _fit_joukowski(params.t, params.m, u_in)
    return SyntheticCaseModel(params=params, poly=poly, flow=flow, u_in=u_in, **profile_kwargs)


def synthetic_case(
    naca_code: str,
    u_in: float,
    n_points: int,
    seed: int,
    domain: Domain | None = None,
    near_fraction: float = 0.4,
    near_band: float = 0.25,
    extrapolation: bool = False,
    n_per_side: int = 200,
    **profile_kwargs,
) -> CaseDataset:
    """Synthetic dataset at `n_points` exterior sample points.

    Points are exterior to the airfoil polyline and to the mapped stand-in
    body (the two nearly coincide; the body interior is where the potential
    flow is meaningless). The velocity field is exactly divergence-free and
    the Bernoulli identity p + 0.5 |U|^2 = 0.5 u_in^2 holds identically.
    """
    lo, hi = U_IN_RANGE
    if not extrapolation and not (lo <= u_in <= hi):
        raise ValueError(f"u_in={u_in} outside [{lo}, {hi}]; pass extrapolation=True to override")
    model = synthetic_flow(naca_code, u_in, n_per_side, **profile_kwargs)
    domain = domain or Domain()
    seed_base = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    pts = np.empty((0, 2))
    for attempt in range(32):
        need = n_points - pts.shape[0]
        if need <= 0:
            break
        cand = sample_interior(
            domain, model.poly, 2 * need, near_fraction, near_band, seed=seed_base + (attempt,)
        )
        cand = cand[~model.flow.in_body(cand[:, 0], cand[:, 1])]
        pts = np.vstack([pts, cand])
    if pts.shape[0] < n_points:
        raise RuntimeError("could not place synthetic sample points outside both bodies")
    pts = pts[:n_points]
    dist = signed_distance(pts, model.poly)
    fields = model.evaluate(pts[:, 0], pts[:, 1], dist)
    return CaseDataset(
        naca_code=naca_code,
        u_in=u_in,
        x=pts[:, 0],
        y=pts[:, 1],
        u=fields["u"],
        v=fields["v"],
        p=fields["p"],
        k=fields["k"],
        eps=fields["eps"],
        sdf=dist,
        provenance="synthetic",
        extrapolation=extrapolation,
    )


# ---------------------------------------------------------------------------
# Manufactured solutions with hand-derived residuals
# ---------------------------------------------------------------------------


@dataclass
class ManufacturedCase:
    """Analytic fields plus closures for their exact model residuals.

    `state`/`derivs` return the fields and their analytic spatial
    derivatives; `expected_residuals` returns the hand-derived values of
    the five residual operators at the same points, for either epsilon
    source sign.
    """

    case_id: str
    dataset: CaseDataset
    state_fn: callable
    derivs_fn: callable
    residual_fn: callable

    def state(self, x, y) -> FlowState:
        return self.state_fn(np.asarray(x, float), np.asarray(y, float))

    def derivs(self, x, y) -> FlowDerivs:
        return self.derivs_fn(np.asarray(x, float), np.asarray(y, float))

    def expected_residuals(self, x, y, standard_sign: bool = True) -> dict[str, np.ndarray]:
        return self.residual_fn(np.asarray(x, float), np.asarray(y, float), standard_sign)


def _zero_derivs(shape) -> FlowDerivs:
    z = dict.fromkeys(
        (
            "u_x", "u_y", "v_x", "v_y", "p_x", "p_y", "k_x", "k_y", "eps_x", "eps_y",
            "u_xx", "u_yy", "v_xx", "v_yy", "k_xx", "k_yy", "eps_xx", "eps_yy",
        )
    )
    return FlowDerivs(**{name: np.zeros(shape) for name in z})


_MANUF_BOX = (1.5, 3.5, -1.5, 1.5)  # sample box clear of the nominal foil
_MANUF_CONSTS = TurbulenceConstants()


def _manuf_points(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 9))))
    x0, x1, y0, y1 = _MANUF_BOX
    pts = rng.random((n, 2))
    return x0 + (x1 - x0) * pts[:, 0], y0 + (y1 - y0) * pts[:, 1]


def _uniform_case(n: int, seed: int) -> ManufacturedCase:
    """Laminar free stream: u = U0, v = 0, p = const, k = eps = 0.

    Every derivative vanishes, production vanishes, and the k sink equals
    eps = 0, so all five residuals are identically zero.
    """
    u0, p0 = 3.0, 0.4
    x, y = _manuf_points(n, seed)

    def state(xx, yy):
        shape = xx.shape
        return FlowState(
            u=np.full(shape, u0), v=np.zeros(shape), p=np.full(shape, p0),
            k=np.zeros(shape), eps=np.zeros(shape),
        )

    def derivs(xx, yy):
        return _zero_derivs(xx.shape)

    def residuals(xx, yy, standard_sign):
        z = np.zeros(xx.shape)
        return {"r_cont": z, "r_mom_x": z, "r_mom_y": z, "r_k": z, "r_eps": z}

    dataset = CaseDataset(
        naca_code="0012", u_in=3.0, x=x, y=y,
        u=np.full(n, u0), v=np.zeros(n), p=np.full(n, p0),
        provenance="manufactured",
    )
    return ManufacturedCase("uniform", dataset, state, derivs, residuals)


def _couette_case(n: int, seed: int) -> ManufacturedCase:
    """Plane shear u = y with constant k0 and e0 in source equilibrium.

    With S = du/dy = 1: convection and the Laplacian of u vanish and p is
    constant, so both momentum residuals are zero. P_k = mu_t S^2 = mu_t
    with mu_t = C_mu k0^2/e0. Choosing e0 = k0 S sqrt(3 C_mu/4)
    (= (3 sqrt(3)/20) k0 for C_mu = 0.09) makes P_k = (C2/C1) e0, so the
    standard-sign epsilon source (C1 P_k - C2 e0) e0/k0 vanishes exactly
    and r_k = e0 - P_k = e0 (1 - C2/C1) = -e0/3. Under the printed sign the
    epsilon source is -(C1 P_k + C2 e0) e0/k0 = -2 C2 e0^2/k0.
    """
    k0 = 0.3
    e0 = k0 * math.sqrt(3.0 * _MANUF_CONSTS.C_mu / 4.0)
    mu_t = _MANUF_CONSTS.C_mu * k0**2 / e0
    c1, c2 = _MANUF_CONSTS.C1, _MANUF_CONSTS.C2
    x, y = _manuf_points(n, seed)

    def state(xx, yy):
        shape = xx.shape
        return FlowState(
            u=yy.copy(), v=np.zeros(shape), p=np.zeros(shape),
            k=np.full(shape, k0), eps=np.full(shape, e0),
        )

    def derivs(xx, yy):
        d = _zero_derivs(xx.shape)
        d.u_y = np.ones(xx.shape)
        return d

    def residuals(xx, yy, standard_sign):
        shape = xx.shape
        z = np.zeros(shape)
        pk = mu_t
        if standard_sign:
            r_eps = -(c1 * pk - c2 * e0) * e0 / k0  # == 0 by construction
        else:
            r_eps = -(c1 * pk + c2 * e0) * e0 / k0
        return {
            "r_cont": z, "r_mom_x": z, "r_mom_y": z,
            "r_k": np.full(shape, e0 - pk),
            "r_eps": np.full(shape, r_eps),
        }

    dataset = CaseDataset(
        naca_code="0012", u_in=2.0, x=x, y=y,
        u=y.copy(), v=np.zeros(n), p=np.zeros(n),
        k=np.full(n, k0), eps=np.full(n, e0),
        provenance="manufactured",
    )
    return ManufacturedCase("couette", dataset, state, derivs, residuals)


def _taylor_green_case(n: int, seed: int) -> ManufacturedCase:
    """Steady Taylor-Green-like cell with constant turbulence quantities.

    u = sin x cos y, v = -cos x sin y, p = (cos 2x + cos 2y)/4. Continuity
    holds identically; convection cancels the pressure gradient, and the
    Laplacian equals -2 U, so the momentum residual is the documented
    forcing (2 mu_eff u, 2 mu_eff v). The strain invariant reduces to
    2 u_x^2 + 2 v_y^2 = 4 cos^2 x cos^2 y with u_y + v_x = 0, giving
    P_k = 4 mu_t cos^2 x cos^2 y, r_k = e0 - P_k, and the epsilon source
    -(C1 P_k -+ C2 e0) e0/k0 (sign per flag).
    """
    k0, e0 = 0.2, 0.1
    mu_t = _MANUF_CONSTS.C_mu * k0**2 / e0
    mu_eff = _MANUF_CONSTS.mu + mu_t
    c1, c2 = _MANUF_CONSTS.C1, _MANUF_CONSTS.C2
    x, y = _manuf_points(n, seed)

    def state(xx, yy):
        shape = xx.shape
        return FlowState(
            u=np.sin(xx) * np.cos(yy),
            v=-np.cos(xx) * np.sin(yy),
            p=0.25 * (np.cos(2 * xx) + np.cos(2 * yy)),
            k=np.full(shape, k0),
            eps=np.full(shape, e0),
        )

    def derivs(xx, yy):
        d = _zero_derivs(xx.shape)
        sx, cx, sy, cy = np.sin(xx), np.cos(xx), np.sin(yy), np.cos(yy)
        d.u_x = cx * cy
        d.u_y = -sx * sy
        d.v_x = sx * sy
        d.v_y = -cx * cy
        d.p_x = -0.5 * np.sin(2 * xx)
        d.p_y = -0.5 * np.sin(2 * yy)
        d.u_xx = -sx * cy
        d.u_yy = -sx * cy
        d.v_xx = cx * sy
        d.v_yy = cx * sy
        return d

    def residuals(xx, yy, standard_sign):
        z = np.zeros(xx.shape)
        u = np.sin(xx) * np.cos(yy)
        v = -np.cos(xx) * np.sin(yy)
        pk = 4.0 * mu_t * np.cos(xx) ** 2 * np.cos(yy) ** 2
        c2s = c2 if standard_sign else -c2
        return {
            "r_cont": z,
            "r_mom_x": 2.0 * mu_eff * u,
            "r_mom_y": 2.0 * mu_eff * v,
            "r_k": e0 - pk,
            "r_eps": -(c1 * pk - c2s * e0) * e0 / k0,
        }

    u0, v0 = np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)
    dataset = CaseDataset(
        naca_code="0012", u_in=2.0, x=x, y=y,
        u=u0, v=v0, p=0.25 * (np.cos(2 * x) + np.cos(2 * y)),
        k=np.full(n, k0), eps=np.full(n, e0),
        provenance="manufactured",
    )
    return ManufacturedCase("taylor-green-like", dataset, state, derivs, residuals)


def _k_eps_balance_case(n: int, seed: int) -> ManufacturedCase:
    """Quiescent profile where k diffusion exactly balances the eps sink.

    With u = v = 0 and eps = (C_mu/nu0) k^2, the eddy viscosity C_mu k^2/eps
    is the constant nu0, so the k diffusion coefficient D_k = mu + nu0/sigma_k
    is constant too. The profile k(x) = A/(x + x0)^2 has k_xx = 6 A/(x+x0)^4
    while eps = (C_mu/nu0) A^2/(x+x0)^4, so D_k k_xx = eps holds pointwise
    exactly when A = 6 D_k nu0 / C_mu, making r_k identically zero with no
    production present. The only surviving residual is
    r_eps = -D_eps eps_xx + C2 eps^2 / k (standard sign; the destruction
    term flips sign under the printed model form).
    """
    nu0 = 0.01
    consts = _MANUF_CONSTS
    d_k = consts.mu + nu0 / consts.sigma_k
    d_eps = consts.mu + nu0 / consts.sigma_eps
    gain = consts.C_mu / nu0  # eps = gain * k^2
    a_coef = 6.0 * d_k / gain  # solves D_k * 6 A = gain * A^2 pointwise
    x0 = 2.0
    c2 = consts.C2
    x, y = _manuf_points(n, seed)

    def _k(xx):
        return a_coef / (xx + x0) ** 2

    def state(xx, yy):
        k = _k(xx)
        return FlowState(
            u=np.zeros(xx.shape), v=np.zeros(xx.shape), p=np.full(xx.shape, 0.6),
            k=k, eps=gain * k**2,
        )

    def derivs(xx, yy):
        d = _zero_derivs(xx.shape)
        k = _k(xx)
        r = xx + x0
        d.k_x = -2.0 * k / r
        d.k_xx = 6.0 * k / r**2
        d.eps_x = 2.0 * gain * k * d.k_x
        d.eps_xx = 2.0 * gain * (d.k_x**2 + k * d.k_xx)
        return d

    def residuals(xx, yy, standard_sign):
        z = np.zeros(xx.shape)
        k = _k(xx)
        r = xx + x0
        eps = gain * k**2
        eps_xx = 2.0 * gain * ((2.0 * k / r) ** 2 + k * 6.0 * k / r**2)
        destruction = c2 * eps**2 / k
        r_eps = -d_eps * eps_xx + (destruction if standard_sign else -destruction)
        return {"r_cont": z, "r_mom_x": z, "r_mom_y": z, "r_k": z, "r_eps": r_eps}

    k_col = _k(x)
    dataset = CaseDataset(
        naca_code="0012", u_in=2.0, x=x, y=y,
        u=np.zeros(n), v=np.zeros(n), p=np.full(n, 0.6),
        k=k_col, eps=gain * k_col**2,
        provenance="manufactured",
    )
    return ManufacturedCase("k-eps-balance", dataset, state, derivs, residuals)


_MANUFACTURED = {
    "uniform": _uniform_case,
    "couette": _couette_case,
    "taylor-green-like": _taylor_green_case,
    "k-eps-balance": _k_eps_balance_case,
}

MANUFACTURED_IDS = tuple(_MANUFACTURED)


def manufactured_case(case_id: str, n_points: int = 100, seed: int = 0) -> ManufacturedCase:
    """One of the documented verification cases; unknown ids raise."""
    try:
        builder = _MANUFACTURED[case_id]
    except KeyError:
        raise ValueError(f"unknown manufactured case {case_id!r}; choose from {MANUFACTURED_IDS}") from None
    return builder(n_points, seed)
