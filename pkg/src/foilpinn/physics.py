"""RANS + k-epsilon residual operators and boundary-condition residuals.

All operators are pure per-point functions of a flow state and its spatial
derivatives, written so they accept plain numpy arrays or autodiff tensors
interchangeably. Residuals are in the equations' natural units and vanish
identically for an exact solution of the model equations.

Conventions implemented here:

* momentum as written with the effective viscosity outside the Laplacian,
  r = (U . grad) U + grad p - mu_eff laplacian(U);
* scalar convection expanded as U . grad(phi) + phi div(U), keeping the
  div(U) term instead of assuming continuity mid-training;
* diffusion coefficients treated as locally constant per point; the
  `full_divergence` flag adds the grad(mu) . grad(phi) corrections for all
  three diffused quantities;
* the epsilon source defaults to production C1 Pk eps/k minus destruction
  C2 eps^2/k (`standard_sign=True`); with `standard_sign=False` both terms
  enter with a plus sign, reproducing the printed model form whose epsilon
  growth is unbounded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .network import FlowDerivs, FlowState

__all__ = [
    "TurbulenceConstants",
    "Diagnostics",
    "ResidualVector",
    "effective_viscosity",
    "turbulent_viscosity",
    "continuity_residual",
    "momentum_residual",
    "production_term",
    "k_residual",
    "eps_residual",
    "residual_vector",
    "surface_bc_residual",
    "inlet_bc_residual",
    "outlet_bc_residual",
    "side_bc_residual",
    "inlet_turbulence_levels",
]

SURFACE_SDF_TOL = 1e-9


@dataclass(frozen=True)
class TurbulenceConstants:
    """Standard k-epsilon closure constants plus fluid properties.

    mu is the molecular viscosity in m^2/s at unit density; the default
    1e-5 with a unit chord maps inlet speeds 2..7 m/s onto Reynolds
    numbers 200k..700k.
    """

    C1: float = 1.44
    C2: float = 1.92
    sigma_k: float = 1.0
    sigma_eps: float = 1.3
    C_mu: float = 0.09
    mu: float = 1e-5
    rho: float = 1.0
    eps_floor: float = 1e-10
    k_floor: float = 1e-8

    def __post_init__(self):
        for name in ("C1", "C2", "sigma_k", "sigma_eps", "C_mu", "mu", "rho"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Diagnostics:
    """Counters for guarded numeric events."""

    eps_clamped: int = 0
    k_clamped: int = 0


@dataclass
class ResidualVector:
    """Per-point residuals of the five model equations."""

    r_cont: object
    r_mom_x: object
    r_mom_y: object
    r_k: object
    r_eps: object


def _floor(x, floor: float, counter: Diagnostics | None, attr: str):
    """Clamp plain arrays below `floor`; graph tensors are positive upstream."""
    if isinstance(x, ad.Tensor):
        return x
    x = np.asarray(x, dtype=float)
    low = x < floor
    if np.any(low):
        if counter is not None:
            setattr(counter, attr, getattr(counter, attr) + int(np.count_nonzero(low)))
        x = np.maximum(x, floor)
    return x


def turbulent_viscosity(k, eps, consts: TurbulenceConstants, diag: Diagnostics | None = None):
    """mu_t = C_mu k^2 / eps, with eps floored for raw array inputs."""
    eps = _floor(eps, consts.eps_floor, diag, "eps_clamped")
    return consts.C_mu * ad.square(k) / eps


def effective_viscosity(k, eps, consts: TurbulenceConstants, diag: Diagnostics | None = None):
    """mu_eff = mu + C_mu k^2 / eps (molecular plus turbulent)."""
    return consts.mu + turbulent_viscosity(k, eps, consts, diag)


def continuity_residual(derivs: FlowDerivs):
    """div U = du/dx + dv/dy."""
    return derivs.u_x + derivs.v_y


def momentum_residual(
    state: FlowState,
    derivs: FlowDerivs,
    consts: TurbulenceConstants,
    diag: Diagnostics | None = None,
    full_divergence: bool = False,
):
    """x and y momentum residuals with pointwise effective viscosity."""
    mu_eff = effective_viscosity(state.k, state.eps, consts, diag)
    r_x = state.u * derivs.u_x + state.v * derivs.u_y + derivs.p_x - mu_eff * (derivs.u_xx + derivs.u_yy)
    r_y = state.u * derivs.v_x + state.v * derivs.v_y + derivs.p_y - mu_eff * (derivs.v_xx + derivs.v_yy)
    if full_divergence:
        mx, my = _mu_t_gradient(state, derivs, consts, diag)
        r_x = r_x - (mx * derivs.u_x + my * derivs.u_y)
        r_y = r_y - (mx * derivs.v_x + my * derivs.v_y)
    return r_x, r_y


def production_term(derivs: FlowDerivs, mu_t):
    """P_k = mu_t (2 u_x^2 + 2 v_y^2 + (u_y + v_x)^2), the eddy-viscosity
    shear production of turbulent kinetic energy."""
    return mu_t * (
        2.0 * ad.square(derivs.u_x) + 2.0 * ad.square(derivs.v_y) + ad.square(derivs.u_y + derivs.v_x)
    )


def _mu_t_gradient(state, derivs, consts, diag):
    """Spatial gradient of mu_t = C_mu k^2/eps via the chain rule."""
    eps = _floor(state.eps, consts.eps_floor, diag, "eps_clamped")
    common = consts.C_mu * state.k / eps
    gx = common * (2.0 * derivs.k_x - state.k * derivs.eps_x / eps)
    gy = common * (2.0 * derivs.k_y - state.k * derivs.eps_y / eps)
    return gx, gy


def k_residual(
    state: FlowState,
    derivs: FlowDerivs,
    consts: TurbulenceConstants,
    diag: Diagnostics | None = None,
    full_divergence: bool = False,
):
    """Transport residual of turbulent kinetic energy:
    div(U k) - diffusion - P_k + eps."""
    mu_t = turbulent_viscosity(state.k, state.eps, consts, diag)
    conv = state.u * derivs.k_x + state.v * derivs.k_y + state.k * continuity_residual(derivs)
    diff = (consts.mu + mu_t / consts.sigma_k) * (derivs.k_xx + derivs.k_yy)
    if full_divergence:
        mx, my = _mu_t_gradient(state, derivs, consts, diag)
        diff = diff + (mx * derivs.k_x + my * derivs.k_y) / consts.sigma_k
    return conv - diff - production_term(derivs, mu_t) + state.eps


def eps_residual(
    state: FlowState,
    derivs: FlowDerivs,
    consts: TurbulenceConstants,
    diag: Diagnostics | None = None,
    standard_sign: bool = True,
    full_divergence: bool = False,
):
    """Transport residual of the dissipation rate.

    Default source: (C1 P_k - C2 eps) eps / k. `standard_sign=False` flips
    the destruction term to +C2 eps, the as-printed model form.
    """
    mu_t = turbulent_viscosity(state.k, state.eps, consts, diag)
    k = _floor(state.k, consts.k_floor, diag, "k_clamped")
    conv = state.u * derivs.eps_x + state.v * derivs.eps_y + state.eps * continuity_residual(derivs)
    diff = (consts.mu + mu_t / consts.sigma_eps) * (derivs.eps_xx + derivs.eps_yy)
    if full_divergence:
        mx, my = _mu_t_gradient(state, derivs, consts, diag)
        diff = diff + (mx * derivs.eps_x + my * derivs.eps_y) / consts.sigma_eps
    pk = production_term(derivs, mu_t)
    c2 = -consts.C2 if standard_sign else consts.C2
    source = (consts.C1 * pk + c2 * state.eps) * state.eps / k
    return conv - diff - source


def residual_vector(
    state: FlowState,
    derivs: FlowDerivs,
    consts: TurbulenceConstants,
    diag: Diagnostics | None = None,
    standard_sign: bool = True,
    full_divergence: bool = False,
) -> ResidualVector:
    """All five equation residuals at once."""
    r_x, r_y = momentum_residual(state, derivs, consts, diag, full_divergence)
    return ResidualVector(
        r_cont=continuity_residual(derivs),
        r_mom_x=r_x,
        r_mom_y=r_y,
        r_k=k_residual(state, derivs, consts, diag, full_divergence),
        r_eps=eps_residual(state, derivs, consts, diag, standard_sign, full_divergence),
    )


def surface_bc_residual(state: FlowState, sdf):
    """No-slip wall residual (u, v) at surface points (sdf == 0)."""
    s = np.asarray(sdf, dtype=float)
    if np.any(np.abs(s) > SURFACE_SDF_TOL):
        worst = float(np.max(np.abs(s)))
        raise ValueError(f"surface BC evaluated off the surface: max |sdf| = {worst:g}")
    return state.u, state.v


def inlet_bc_residual(state: FlowState, u_in):
    """Velocity-inlet residual (u - u_in, v)."""
    return state.u - u_in, state.v


def outlet_bc_residual(state: FlowState, p_ref: float = 0.0):
    """Pressure-outlet residual p - p_ref (reference pressure zero)."""
    return state.p - p_ref


def side_bc_residual(state: FlowState, u_in):
    """Free-stream side-wall residual (u - u_in, v)."""
    return state.u - u_in, state.v


def inlet_turbulence_levels(u_in, consts: TurbulenceConstants, intensity: float = 0.05, length_frac: float = 0.1, chord: float = 1.0):
    """Turbulence-intensity based inlet values:
    k_in = 1.5 (I u_in)^2 and eps_in = C_mu^0.75 k_in^1.5 / (length_frac * chord)."""
    u = np.asarray(u_in, dtype=float)
    k_in = 1.5 * (intensity * u) ** 2
    eps_in = consts.C_mu**0.75 * k_in**1.5 / (length_frac * chord)
    return k_in, eps_in
