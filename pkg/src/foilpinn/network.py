"""The surrogate network: input layouts, forward pass, exact spatial
derivatives, initialization, and checkpoints.

Three input layouts share one fully-connected trunk:

  L   [x, y, sdf, u_in]               local geometry via signed distance
  G   [x, y, u_in, m, p, t]           global design digits only
  LG  [x, y, sdf, u_in, m, p, t]      L layout with the digits appended

Inputs are normalized to O(1) (coordinates by domain half-extents, inlet
speed mapped from its training range to [-1, 1], digits already fractions).
Outputs are in normalized form: velocities as fractions of u_in, pressure
as a fraction of the dynamic pressure 0.5 u_in^2; turbulence heads pass
through softplus plus a small floor so k and eps stay strictly positive.

Spatial derivatives are exact: first and second tangents in x and y are
propagated forward through every layer alongside the values. Because the
propagation is written with autodiff-aware ops, the same code yields plain
numpy results for prediction and a differentiable graph for training. The
sdf input is a precomputed feature and is held fixed (zero tangent) when
differentiating with respect to the coordinates.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from enum import Enum

import numpy as np

from . import autodiff as ad
from .geometry import AirfoilParams

__all__ = [
    "ModelVariant",
    "Normalization",
    "MlpConfig",
    "MlpParams",
    "FlowState",
    "FlowDerivs",
    "NumericError",
    "build_input",
    "init_params",
    "forward",
    "spatial_derivatives",
    "denormalize",
    "save_checkpoint",
    "load_checkpoint",
]

N_OUTPUTS = 5  # u, v, p, raw-k, raw-eps
CHECKPOINT_FORMAT = "foil-pinn-checkpoint"
CHECKPOINT_VERSION = 1


class NumericError(RuntimeError):
    """Non-finite values appeared during evaluation."""


class ModelVariant(Enum):
    L = "L"
    G = "G"
    LG = "LG"

    @property
    def input_dim(self) -> int:
        return {"L": 4, "G": 6, "LG": 7}[self.value]

    @property
    def uses_sdf(self) -> bool:
        return self is not ModelVariant.G

    @property
    def uses_digits(self) -> bool:
        return self is not ModelVariant.L


@dataclass(frozen=True)
class Normalization:
    """Input scaling constants; defaults match the default flow domain."""

    x_center: float = 1.0
    x_half: float = 3.0
    y_center: float = 0.0
    y_half: float = 2.0
    sdf_scale: float = 1.0
    u_lo: float = 2.0
    u_hi: float = 7.0

    @classmethod
    def from_domain(cls, domain, u_lo: float = 2.0, u_hi: float = 7.0) -> "Normalization":
        return cls(
            x_center=0.5 * (domain.x_min + domain.x_max),
            x_half=0.5 * (domain.x_max - domain.x_min),
            y_center=0.5 * (domain.y_min + domain.y_max),
            y_half=0.5 * (domain.y_max - domain.y_min),
            u_lo=u_lo,
            u_hi=u_hi,
        )


# activation -> (value, (value, first, second derivative)) builders; every
# entry must be at least C^2 so second-derivative residuals exist
def _tanh_full(a):
    h = ad.tanh(a)
    f1 = 1.0 - ad.square(h)
    return h, f1, -2.0 * h * f1


def _softplus_full(a):
    s = ad.sigmoid(a)
    return ad.softplus(a), s, s * (1.0 - s)


def _identity_full(a):
    one = np.ones_like(a.value if isinstance(a, ad.Tensor) else a)
    return a, one, np.zeros_like(one)


ACTIVATIONS = {
    "tanh": (ad.tanh, _tanh_full),
    "softplus": (ad.softplus, _softplus_full),
    "identity": (lambda a: a, _identity_full),  # for verification setups
}


@dataclass(frozen=True)
class MlpConfig:
    variant: ModelVariant
    hidden_layers: int = 6
    width: int = 64
    activation: str = "tanh"
    norm: Normalization = field(default_factory=Normalization)
    k_floor: float = 1e-8
    eps_floor: float = 1e-10

    def __post_init__(self):
        if self.hidden_layers < 1:
            raise ValueError("hidden_layers must be >= 1")
        if self.width < 4:
            raise ValueError("width must be >= 4")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"activation {self.activation!r} not in {sorted(ACTIVATIONS)} (must be C^2 smooth)"
            )
        if self.k_floor <= 0.0 or self.eps_floor <= 0.0:
            raise ValueError("k/eps floors must be positive")

    def layer_dims(self) -> list[int]:
        return [self.variant.input_dim] + [self.width] * self.hidden_layers + [N_OUTPUTS]

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["variant"] = self.variant.value
        d["norm"] = {f.name: getattr(self.norm, f.name) for f in fields(Normalization)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MlpConfig":
        d = dict(d)
        d["variant"] = ModelVariant(d["variant"])
        d["norm"] = Normalization(**d["norm"])
        return cls(**d)


@dataclass
class MlpParams:
    """Weights and biases, interleaved [W0, b0, W1, b1, ...]."""

    config: MlpConfig
    arrays: list[np.ndarray]

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.arrays)

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays])

    @classmethod
    def from_flat(cls, config: MlpConfig, vec: np.ndarray) -> "MlpParams":
        arrays = []
        off = 0
        for shape in _layout(config):
            size = int(np.prod(shape))
            arrays.append(vec[off : off + size].reshape(shape).copy())
            off += size
        if off != vec.size:
            raise ValueError(f"flat vector has {vec.size} entries, layout needs {off}")
        return cls(config=config, arrays=arrays)


def _layout(config: MlpConfig) -> list[tuple[int, ...]]:
    dims = config.layer_dims()
    shapes: list[tuple[int, ...]] = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        shapes.append((d_in, d_out))
        shapes.append((d_out,))
    return shapes


def init_params(config: MlpConfig, seed: int) -> MlpParams:
    """Uniform Glorot weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 77))))
    arrays = []
    for shape in _layout(config):
        if len(shape) == 2:
            bound = np.sqrt(6.0 / (shape[0] + shape[1]))
            arrays.append(rng.uniform(-bound, bound, size=shape))
        else:
            arrays.append(np.zeros(shape))
    return MlpParams(config=config, arrays=arrays)


def build_input(
    variant: ModelVariant,
    x,
    y,
    sdf=None,
    airfoil: AirfoilParams | None = None,
    u_in=None,
    norm: Normalization | None = None,
) -> np.ndarray:
    """Assemble the (n, input_dim) normalized input matrix for a variant.

    `u_in` may be a scalar or a per-row array (mixed-case batches). Raises
    if the variant's required arguments are missing or out of contract.
    """
    norm = norm or Normalization()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if u_in is None:
        raise ValueError("u_in is required")
    u = np.broadcast_to(np.asarray(u_in, dtype=float), x.shape)
    if np.any(u <= 0.0):
        raise ValueError("u_in must be positive")
    cols = [(x - norm.x_center) / norm.x_half, (y - norm.y_center) / norm.y_half]
    if variant.uses_sdf:
        if sdf is None:
            raise ValueError(f"variant {variant.value} requires an sdf input")
        s = np.broadcast_to(np.asarray(sdf, dtype=float), x.shape).copy()
        if np.any(s < -1e-9):
            raise ValueError("sdf inputs must be >= 0 (exterior or surface points)")
        cols.append(np.maximum(s, 0.0) / norm.sdf_scale)
    cols.append(2.0 * (u - norm.u_lo) / (norm.u_hi - norm.u_lo) - 1.0)
    if variant.uses_digits:
        if airfoil is None:
            raise ValueError(f"variant {variant.value} requires airfoil design digits")
        cols.extend(
            np.broadcast_to(v, x.shape) for v in (airfoil.m, airfoil.p, airfoil.t)
        )
    return np.column_stack(cols)


@dataclass
class FlowState:
    """Normalized flow quantities per point: u/u_in, v/u_in, p/(0.5 u_in^2),
    k/u_in^2, eps*chord/u_in^3 (physical units after `denormalize`)."""

    u: object
    v: object
    p: object
    k: object
    eps: object


@dataclass
class FlowDerivs:
    """First derivatives of all outputs and pure second derivatives of
    u, v, k, eps with respect to the physical coordinates."""

    u_x: object
    u_y: object
    v_x: object
    v_y: object
    p_x: object
    p_y: object
    k_x: object
    k_y: object
    eps_x: object
    eps_y: object
    u_xx: object
    u_yy: object
    v_xx: object
    v_yy: object
    k_xx: object
    k_yy: object
    eps_xx: object
    eps_yy: object


def _val(x) -> np.ndarray:
    return x.value if isinstance(x, ad.Tensor) else np.asarray(x)


def _check_finite(a, layer: int):
    if not np.all(np.isfinite(_val(a))):
        raise NumericError(f"non-finite activations in layer {layer}")


def _weight_pairs(params: MlpParams, weights):
    arrays = weights if weights is not None else params.arrays
    return list(zip(arrays[0::2], arrays[1::2]))


def forward(params: MlpParams, inputs, weights=None) -> FlowState:
    """Value-only evaluation of the surrogate on an (n, input_dim) batch.

    `weights` may override the parameter arrays with autodiff tensors of
    the same shapes, in which case the result fields are graph nodes.
    """
    cfg = params.config
    act = ACTIVATIONS[cfg.activation][0]
    z = np.atleast_2d(np.asarray(inputs, dtype=float)) if not isinstance(inputs, ad.Tensor) else inputs
    if _val(z).shape[1] != cfg.variant.input_dim:
        raise ValueError(
            f"input dim {_val(z).shape[1]} does not match variant {cfg.variant.value} "
            f"(expected {cfg.variant.input_dim})"
        )
    pairs = _weight_pairs(params, weights)
    for i, (w, b) in enumerate(pairs):
        z = z @ w + b
        _check_finite(z, i)
        if i < len(pairs) - 1:
            z = act(z)
    return _heads_to_state(z, cfg)


def _heads_to_state(raw, cfg: MlpConfig) -> FlowState:
    return FlowState(
        u=raw[:, 0],
        v=raw[:, 1],
        p=raw[:, 2],
        k=ad.softplus(raw[:, 3]) + cfg.k_floor,
        eps=ad.softplus(raw[:, 4]) + cfg.eps_floor,
    )


def spatial_derivatives(params: MlpParams, inputs, weights=None) -> tuple[FlowState, FlowDerivs]:
    """Exact first and second derivatives with respect to physical x and y.

    Tangents are seeded with the input-normalization chain factors and
    propagated forward through every layer together with the values, so the
    results are derivatives of the composed network-plus-output-transform.
    Second derivatives are the pure ones needed by the Laplacians; the sdf
    column is treated as a frozen feature (zero tangent).
    """
    cfg = params.config
    full_act = ACTIVATIONS[cfg.activation][1]
    x_mat = np.atleast_2d(_val(inputs))
    n, d = x_mat.shape
    if d != cfg.variant.input_dim:
        raise ValueError(
            f"input dim {d} does not match variant {cfg.variant.value} (expected {cfg.variant.input_dim})"
        )
    sx = np.zeros((n, d))
    sx[:, 0] = 1.0 / cfg.norm.x_half
    sy = np.zeros((n, d))
    sy[:, 1] = 1.0 / cfg.norm.y_half
    zero = np.zeros((n, d))

    z, zx, zy, zxx, zyy = (inputs if isinstance(inputs, ad.Tensor) else x_mat), sx, sy, zero, zero
    pairs = _weight_pairs(params, weights)
    for i, (w, b) in enumerate(pairs):
        a = z @ w + b
        ax, ay, axx, ayy = zx @ w, zy @ w, zxx @ w, zyy @ w
        _check_finite(a, i)
        if i < len(pairs) - 1:
            h, f1, f2 = full_act(a)
            z = h
            zx, zy = f1 * ax, f1 * ay
            zxx = f2 * ad.square(ax) + f1 * axx
            zyy = f2 * ad.square(ay) + f1 * ayy
        else:
            z, zx, zy, zxx, zyy = a, ax, ay, axx, ayy

    state = _heads_to_state(z, cfg)
    kr, er = z[:, 3], z[:, 4]
    sk, se = ad.sigmoid(kr), ad.sigmoid(er)
    dsk, dse = sk * (1.0 - sk), se * (1.0 - se)
    derivs = FlowDerivs(
        u_x=zx[:, 0], u_y=zy[:, 0],
        v_x=zx[:, 1], v_y=zy[:, 1],
        p_x=zx[:, 2], p_y=zy[:, 2],
        k_x=sk * zx[:, 3], k_y=sk * zy[:, 3],
        eps_x=se * zx[:, 4], eps_y=se * zy[:, 4],
        u_xx=zxx[:, 0], u_yy=zyy[:, 0],
        v_xx=zxx[:, 1], v_yy=zyy[:, 1],
        k_xx=dsk * ad.square(zx[:, 3]) + sk * zxx[:, 3],
        k_yy=dsk * ad.square(zy[:, 3]) + sk * zyy[:, 3],
        eps_xx=dse * ad.square(zx[:, 4]) + se * zxx[:, 4],
        eps_yy=dse * ad.square(zy[:, 4]) + se * zyy[:, 4],
    )
    return state, derivs


def denormalize(state: FlowState, derivs: FlowDerivs | None, u_in, chord: float = 1.0):
    """Convert normalized outputs (and derivatives) to physical units.

    u_in may be scalar or per-row; the scale factors are constants with
    respect to the coordinates, so derivatives scale by the same factors.
    """
    cu = u_in
    cp = 0.5 * np.asarray(u_in) ** 2
    ck = np.asarray(u_in) ** 2
    ce = np.asarray(u_in) ** 3 / chord
    phys_state = FlowState(u=state.u * cu, v=state.v * cu, p=state.p * cp, k=state.k * ck, eps=state.eps * ce)
    if derivs is None:
        return phys_state, None
    phys_derivs = FlowDerivs(
        u_x=derivs.u_x * cu, u_y=derivs.u_y * cu,
        v_x=derivs.v_x * cu, v_y=derivs.v_y * cu,
        p_x=derivs.p_x * cp, p_y=derivs.p_y * cp,
        k_x=derivs.k_x * ck, k_y=derivs.k_y * ck,
        eps_x=derivs.eps_x * ce, eps_y=derivs.eps_y * ce,
        u_xx=derivs.u_xx * cu, u_yy=derivs.u_yy * cu,
        v_xx=derivs.v_xx * cu, v_yy=derivs.v_yy * cu,
        k_xx=derivs.k_xx * ck, k_yy=derivs.k_yy * ck,
        eps_xx=derivs.eps_xx * ce, eps_yy=derivs.eps_yy * ce,
    )
    return phys_state, phys_derivs


def save_checkpoint(params: MlpParams, path: str, extra_meta: dict | None = None) -> None:
    """Write a self-describing textual checkpoint (atomic replace)."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": params.config.to_dict(),
        "layout": [list(s) for s in _layout(params.config)],
        "weights": params.flat().tolist(),
    }
    if extra_meta:
        payload["meta"] = extra_meta
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    os.replace(tmp, path)


def load_checkpoint(path: str) -> MlpParams:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    config = MlpConfig.from_dict(payload["config"])
    return MlpParams.from_flat(config, np.asarray(payload["weights"], dtype=float))
