"""Loss assembly and optimization of the surrogate.

Training follows a warm-start schedule: during the first
``warmstart_steps`` only the data misfit contributes to the gradient; the
PDE and boundary terms are neither evaluated nor applied, so their gradient
contribution is exactly zero by construction. After the switch the total
loss is the weighted sum of the data term, the mean-square equation
residuals at freshly sampled collocation points, and the mean-square
boundary residuals.

Residuals enter the loss nondimensionalized by default (continuity by
L/u_in, momentum by L/u_in^2, k by L/u_in^3, eps by L^2/u_in^4), so cases
at different inlet speeds carry comparable weight; the raw operators in
`physics` are untouched. Data and boundary losses are on normalized
outputs throughout.

Everything is deterministic: collocation minibatches are resampled every
step from counter-based streams keyed by (seed, step, family, case), data
minibatches are shuffled epochs from the same seed, and the optimizer is a
plain elementwise Adam update over the flattened parameter vector.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

import numpy as np

from . import autodiff as ad
from . import physics as phy
from .data import CaseDataset
from .geometry import Polyline, rotate_polyline, surface_polyline
from .network import (
    MlpConfig,
    MlpParams,
    NumericError,
    build_input,
    denormalize,
    forward,
    init_params,
    save_checkpoint,
    spatial_derivatives,
)
from .sampling import Domain, sample_inlet, sample_interior, sample_outlet, sample_sides, sample_surface
from .sdf import signed_distance

__all__ = [
    "LossWeights",
    "Schedule",
    "TrainRecord",
    "TrainSetup",
    "TrainingDiverged",
    "AdamState",
    "adam_step",
    "total_loss",
    "train",
    "write_log",
    "reynolds",
    "LOG_COLUMNS",
    "ALL_COMPONENTS",
]

CHORD = 1.0
DIVERGENCE_FACTOR = 1e6

PDE_COMPONENTS = ("cont", "mom_x", "mom_y", "k", "eps")
BC_COMPONENTS = ("bc_surface", "bc_inlet", "bc_outlet", "bc_side")
ALL_COMPONENTS = ("data",) + PDE_COMPONENTS + BC_COMPONENTS

LOG_COLUMNS = (
    ("step", "phase", "lr", "total")
    + tuple(f"loss_{c}" for c in ALL_COMPONENTS)
    + ("grad_data_norm", "grad_pde_norm")
)


class TrainingDiverged(RuntimeError):
    """Loss blew up; carries the last finite parameters."""

    def __init__(self, message: str, last_good: MlpParams):
        super().__init__(message)
        self.last_good = last_good


@dataclass(frozen=True)
class LossWeights:
    """Nonnegative weights of the loss families."""

    w_data: float = 1.0
    w_cont: float = 0.1
    w_mom: float = 0.1
    w_k: float = 0.1
    w_eps: float = 0.1
    w_bc_surface: float = 1.0
    w_bc_inlet: float = 1.0
    w_bc_outlet: float = 1.0
    w_bc_side: float = 1.0

    def __post_init__(self):
        values = [getattr(self, f.name) for f in fields(self)]
        if any(v < 0 for v in values):
            raise ValueError("loss weights must be nonnegative")
        if not any(v > 0 for v in values):
            raise ValueError("at least one loss weight must be positive")

    def of(self, component: str) -> float:
        """Weight applied to a named loss component (both momentum axes
        share w_mom)."""
        if component in ("mom_x", "mom_y"):
            return self.w_mom
        return getattr(self, f"w_{component}")


@dataclass(frozen=True)
class Schedule:
    """Step counts, learning-rate plan, batch sizes, and the run seed."""

    total_steps: int
    warmstart_steps: int | None = None  # defaults to 20% of total
    learning_rate: float = 1e-3
    lr_decay: float = 0.5
    plateau_patience: int = 500
    plateau_rtol: float = 1e-3
    plateau_smoothing: float = 0.05  # EMA coefficient; minibatch totals are noisy
    data_batch: int = 512
    colloc_per_case: int = 32
    surface_per_case: int = 16
    bc_per_case: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if self.warmstart_steps is None:
            object.__setattr__(self, "warmstart_steps", self.total_steps // 5)
        ws = self.warmstart_steps
        if ws < 0 or (self.total_steps > 0 and ws >= self.total_steps):
            raise ValueError("need 0 <= warmstart_steps < total_steps")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class TrainRecord:
    """Per-step log entry; component losses are unweighted mean squares."""

    step: int
    phase: str  # warmstart | full
    lr: float
    total: float
    components: dict[str, float]
    grad_data_norm: float
    grad_pde_norm: float

    def row(self) -> list[str]:
        vals = [str(self.step), self.phase, repr(self.lr), repr(self.total)]
        vals += [repr(self.components[c]) for c in ALL_COMPONENTS]
        vals += [repr(self.grad_data_norm), repr(self.grad_pde_norm)]
        return vals


@dataclass
class TrainSetup:
    """Everything one training run needs, resolved and explicit."""

    cases: list[CaseDataset]
    mlp: MlpConfig
    schedule: Schedule
    weights: LossWeights = field(default_factory=LossWeights)
    domain: Domain = field(default_factory=Domain)
    consts: phy.TurbulenceConstants = field(default_factory=phy.TurbulenceConstants)
    near_fraction: float = 0.4
    near_band: float = 0.25
    n_per_side: int = 200
    aoa_deg: float = 0.0
    standard_sign: bool = True
    full_divergence: bool = False
    nondim_residuals: bool = True
    constrain_inlet_keps: bool = True
    checkpoint_path: str | None = None
    checkpoint_every: int = 0
    initial_params: MlpParams | None = None

    def __post_init__(self):
        if not self.cases:
            raise ValueError("training needs at least one case")


def reynolds(u_in: float, chord: float = CHORD, consts: phy.TurbulenceConstants | None = None) -> float:
    """Re = rho u_in chord / mu."""
    consts = consts or phy.TurbulenceConstants()
    if u_in <= 0 or chord <= 0:
        raise ValueError("u_in and chord must be positive")
    return consts.rho * u_in * chord / consts.mu


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n))


def adam_step(theta: np.ndarray, grad: np.ndarray, state: AdamState, lr: float) -> np.ndarray:
    """One bias-corrected adaptive moment update; mutates `state`."""
    if theta.shape != grad.shape:
        raise ValueError("parameter/gradient shape mismatch")
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient in optimizer step")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    return theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)


# ---------------------------------------------------------------------------
# Per-case preprocessing
# ---------------------------------------------------------------------------


@dataclass
class _CaseContext:
    dataset: CaseDataset
    poly: Polyline
    inputs: np.ndarray  # normalized network inputs of all data rows
    targets: np.ndarray  # normalized targets, 3 or 5 columns
    bc_inputs: dict  # family -> static normalized inputs of boundary points


def _prepare_cases(setup: TrainSetup) -> tuple[list[_CaseContext], bool]:
    """Build static per-case tensors; k/eps data terms are used only when
    every case provides them.

    Boundary-condition batches are sampled once per run (seeded); only the
    interior collocation set is freshly resampled every step.
    """
    use_keps = all(case.has_turbulence for case in setup.cases)
    sched = setup.schedule
    contexts = []
    for ci, case in enumerate(setup.cases):
        poly = surface_polyline(case.airfoil(), setup.n_per_side)
        if setup.aoa_deg:
            poly = rotate_polyline(poly, setup.aoa_deg)
        setup.domain.check_margin(poly)
        sdf_vals = case.ensure_sdf(poly) if setup.mlp.variant.uses_sdf else None
        inputs = build_input(
            setup.mlp.variant,
            case.x,
            case.y,
            sdf=sdf_vals,
            airfoil=case.airfoil(),
            u_in=case.u_in,
            norm=setup.mlp.norm,
        )
        u_in = case.u_in
        cols = [case.u / u_in, case.v / u_in, case.p / (0.5 * u_in**2)]
        if use_keps:
            cols += [case.k / u_in**2, case.eps * CHORD / u_in**3]
        ctx = _CaseContext(
            dataset=case, poly=poly, inputs=inputs, targets=np.column_stack(cols), bc_inputs={}
        )
        surf = sample_surface(poly, sched.surface_per_case, seed=(sched.seed, 11, ci))
        ctx.bc_inputs["surface"] = _case_inputs(ctx, setup, surf, np.zeros(surf.shape[0]))
        for family, sampler in (("inlet", sample_inlet), ("outlet", sample_outlet), ("side", sample_sides)):
            pts = sampler(setup.domain, sched.bc_per_case, seed=(sched.seed, 12, ci))
            svals = signed_distance(pts, poly) if setup.mlp.variant.uses_sdf else None
            ctx.bc_inputs[family] = _case_inputs(ctx, setup, pts, svals)
        contexts.append(ctx)
    return contexts, use_keps


# ---------------------------------------------------------------------------
# Loss pieces (each returns unweighted mean-square components)
# ---------------------------------------------------------------------------


def _mean_sq(x):
    return ad.mean(ad.square(x))


def _case_inputs(ctx: _CaseContext, setup: TrainSetup, pts: np.ndarray, sdf_vals) -> np.ndarray:
    return build_input(
        setup.mlp.variant,
        pts[:, 0],
        pts[:, 1],
        sdf=sdf_vals,
        airfoil=ctx.dataset.airfoil(),
        u_in=ctx.dataset.u_in,
        norm=setup.mlp.norm,
    )


def _data_component(params, contexts, rows_per_case, use_keps, weights_t):
    """Unweighted data loss: sum over outputs of mean-square normalized misfit."""
    xs = [ctx.inputs[rows] for ctx, rows in zip(contexts, rows_per_case) if rows.size]
    ts = [ctx.targets[rows] for ctx, rows in zip(contexts, rows_per_case) if rows.size]
    if not xs:
        return ad.constant(0.0)
    x = np.vstack(xs)
    t = np.vstack(ts)
    state = forward(params, x, weights=weights_t)
    loss = _mean_sq(state.u - t[:, 0]) + _mean_sq(state.v - t[:, 1]) + _mean_sq(state.p - t[:, 2])
    if use_keps:
        loss = loss + _mean_sq(state.k - t[:, 3]) + _mean_sq(state.eps - t[:, 4])
    return loss


def _pde_components(params, contexts, setup: TrainSetup, step: int, weights_t) -> dict:
    """Mean-square equation residuals on freshly sampled interior points."""
    sched = setup.schedule
    xs, u_rows = [], []
    for ci, ctx in enumerate(contexts):
        pts = sample_interior(
            setup.domain,
            ctx.poly,
            sched.colloc_per_case,
            setup.near_fraction,
            setup.near_band,
            seed=(sched.seed, step, 10, ci),
        )
        svals = signed_distance(pts, ctx.poly) if setup.mlp.variant.uses_sdf else None
        xs.append(_case_inputs(ctx, setup, pts, svals))
        u_rows.append(np.full(pts.shape[0], ctx.dataset.u_in))
    x = np.vstack(xs)
    u_in = np.concatenate(u_rows)
    state_n, derivs_n = spatial_derivatives(params, x, weights=weights_t)
    state, derivs = denormalize(state_n, derivs_n, u_in, CHORD)
    res = phy.residual_vector(
        state,
        derivs,
        setup.consts,
        standard_sign=setup.standard_sign,
        full_divergence=setup.full_divergence,
    )
    if setup.nondim_residuals:
        s_c = CHORD / u_in
        s_m = CHORD / u_in**2
        s_k = CHORD / u_in**3
        s_e = CHORD**2 / u_in**4
    else:
        s_c = s_m = s_k = s_e = 1.0
    return {
        "cont": _mean_sq(res.r_cont * s_c),
        "mom_x": _mean_sq(res.r_mom_x * s_m),
        "mom_y": _mean_sq(res.r_mom_y * s_m),
        "k": _mean_sq(res.r_k * s_k),
        "eps": _mean_sq(res.r_eps * s_e),
    }


def _bc_components(params, contexts, setup: TrainSetup, weights_t) -> dict:
    """Mean-square boundary residuals on the static batches, normalized
    per family (velocities by u_in, pressure by the dynamic pressure)."""
    comps = {}

    def batched_state(family):
        xs = [ctx.bc_inputs[family] for ctx in contexts]
        u_in = np.concatenate(
            [np.full(x.shape[0], ctx.dataset.u_in) for x, ctx in zip(xs, contexts)]
        )
        state_n = forward(params, np.vstack(xs), weights=weights_t)
        state, _ = denormalize(state_n, None, u_in, CHORD)
        return state, u_in

    # no-slip surface
    state, u_in = batched_state("surface")
    ru, rv = phy.surface_bc_residual(state, np.zeros(u_in.shape[0]))
    comps["bc_surface"] = _mean_sq(ru / u_in) + _mean_sq(rv / u_in)

    # velocity inlet (optionally with turbulence-intensity k/eps targets)
    state, u_in = batched_state("inlet")
    ru, rv = phy.inlet_bc_residual(state, u_in)
    inlet = _mean_sq(ru / u_in) + _mean_sq(rv / u_in)
    if setup.constrain_inlet_keps:
        k_in, eps_in = phy.inlet_turbulence_levels(u_in, setup.consts, chord=CHORD)
        inlet = inlet + _mean_sq((state.k - k_in) / u_in**2)
        inlet = inlet + _mean_sq((state.eps - eps_in) * CHORD / u_in**3)
    comps["bc_inlet"] = inlet

    # pressure outlet
    state, u_in = batched_state("outlet")
    comps["bc_outlet"] = _mean_sq(phy.outlet_bc_residual(state) / (0.5 * u_in**2))

    # free-stream side walls
    state, u_in = batched_state("side")
    ru, rv = phy.side_bc_residual(state, u_in)
    comps["bc_side"] = _mean_sq(ru / u_in) + _mean_sq(rv / u_in)
    return comps


def _combine(components: dict, weights: LossWeights):
    """Weighted graph sum and the canonical float total (fixed order)."""
    graph = None
    total = 0.0
    for name in ALL_COMPONENTS:
        comp = components.get(name)
        if comp is None:
            continue
        w = weights.of(name)
        total += w * comp.item()
        if w > 0.0:
            term = w * comp
            graph = term if graph is None else graph + term
    return graph, total


def _step_losses(params, contexts, use_keps, setup, step, phase, rows_per_case, weights_t):
    """Data graph, PDE+BC graph (None during warm start), float components."""
    data_comp = _data_component(params, contexts, rows_per_case, use_keps, weights_t)
    comp_values = {name: 0.0 for name in ALL_COMPONENTS}
    comp_values["data"] = data_comp.item()
    data_graph = setup.weights.w_data * data_comp if setup.weights.w_data > 0 else None
    pde_graph = None
    if phase == "full":
        tensors = _pde_components(params, contexts, setup, step, weights_t)
        tensors.update(_bc_components(params, contexts, setup, weights_t))
        for name, tens in tensors.items():
            comp_values[name] = tens.item()
        pde_graph, _ = _combine(tensors, setup.weights)
    total = 0.0
    for name in ALL_COMPONENTS:
        total += setup.weights.of(name) * comp_values[name]
    return data_graph, pde_graph, comp_values, total


def total_loss(params: MlpParams, setup: TrainSetup, phase: str = "full", step: int = 0):
    """Weighted total loss and its per-component breakdown.

    During the warm-start phase the PDE and boundary families are treated
    as zero (and not evaluated). Raises NumericError naming the component
    if any piece is non-finite.
    """
    if phase not in ("warmstart", "full"):
        raise ValueError("phase must be 'warmstart' or 'full'")
    contexts, use_keps = _prepare_cases(setup)
    rows = [np.arange(len(ctx.dataset)) for ctx in contexts]
    _, _, comp_values, total = _step_losses(params, contexts, use_keps, setup, step, phase, rows, None)
    _check_components(comp_values, step)
    return total, comp_values


def _check_components(comp_values: dict, step: int):
    for name, value in comp_values.items():
        if not np.isfinite(value):
            raise NumericError(f"non-finite {name} loss at step {step}")


class _EpochStream:
    """Deterministic shuffled-epoch minibatches over all data rows."""

    def __init__(self, sizes: list[int], batch: int, seed: int):
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.total = int(self.offsets[-1])
        self.batch = min(batch, self.total)
        self.seed = seed
        self.epoch = 0
        self.pos = 0
        self.perm = self._permutation()

    def _permutation(self) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((self.seed, 500, self.epoch))))
        return rng.permutation(self.total)

    def next_rows(self) -> list[np.ndarray]:
        if self.pos + self.batch > self.total:
            self.epoch += 1
            self.perm = self._permutation()
            self.pos = 0
        take = self.perm[self.pos : self.pos + self.batch]
        self.pos += self.batch
        rows = []
        for ci in range(len(self.offsets) - 1):
            mine = take[(take >= self.offsets[ci]) & (take < self.offsets[ci + 1])]
            rows.append(np.sort(mine - self.offsets[ci]))
        return rows


def train(setup: TrainSetup) -> tuple[MlpParams, list[TrainRecord]]:
    """Run the warm-start schedule and return final parameters plus the
    full per-step record list.

    Aborts with TrainingDiverged (checkpointing the last finite state when
    a checkpoint path is configured) if the total loss exceeds 1e6 times
    its initial value.
    """
    sched = setup.schedule
    contexts, use_keps = _prepare_cases(setup)
    params = setup.initial_params or init_params(setup.mlp, sched.seed)
    records: list[TrainRecord] = []
    if sched.total_steps == 0:
        return params, records

    flat = params.flat()
    adam = AdamState.zeros(flat.size)
    lr = sched.learning_rate
    stream = _EpochStream([len(ctx.dataset) for ctx in contexts], sched.data_batch, sched.seed)
    initial_total = None
    best_smoothed = np.inf
    smoothed = None
    since_best = 0
    last_good = params

    for step in range(1, sched.total_steps + 1):
        phase = "warmstart" if step <= sched.warmstart_steps else "full"
        if step == sched.warmstart_steps + 1:
            # the total changes definition here; plateau state must not
            # compare full-phase losses against warm-start bests
            smoothed = None
            best_smoothed = np.inf
            since_best = 0
        weights_t = [ad.tensor(a) for a in params.arrays]
        rows = stream.next_rows()
        data_graph, pde_graph, comp_values, total = _step_losses(
            params, contexts, use_keps, setup, step, phase, rows, weights_t
        )
        _check_components(comp_values, step)

        if initial_total is None:
            initial_total = max(total, np.finfo(float).tiny)
        if total > DIVERGENCE_FACTOR * initial_total:
            if setup.checkpoint_path:
                save_checkpoint(last_good, setup.checkpoint_path, {"diverged_at_step": step})
            raise TrainingDiverged(
                f"loss {total:.3e} exceeded {DIVERGENCE_FACTOR:g} x initial {initial_total:.3e} at step {step}",
                last_good,
            )

        grad_data = ad.grad(data_graph, weights_t) if data_graph is not None else None
        grad_pde = ad.grad(pde_graph, weights_t) if pde_graph is not None else None
        gd = (
            np.concatenate([g.ravel() for g in grad_data])
            if grad_data is not None
            else np.zeros(flat.size)
        )
        gp = (
            np.concatenate([g.ravel() for g in grad_pde])
            if grad_pde is not None
            else np.zeros(flat.size)
        )
        flat = adam_step(flat, gd + gp, adam, lr)
        params = MlpParams.from_flat(setup.mlp, flat)
        last_good = params

        records.append(
            TrainRecord(
                step=step,
                phase=phase,
                lr=lr,
                total=total,
                components=comp_values,
                grad_data_norm=float(np.linalg.norm(gd)),
                grad_pde_norm=float(np.linalg.norm(gp)),
            )
        )

        # plateau detection on a smoothed total; raw minibatch totals are
        # noisy enough to fake improvements indefinitely
        smoothed = total if smoothed is None else (
            (1.0 - sched.plateau_smoothing) * smoothed + sched.plateau_smoothing * total
        )
        if smoothed < best_smoothed * (1.0 - sched.plateau_rtol):
            best_smoothed = smoothed
            since_best = 0
        else:
            since_best += 1
            if since_best >= sched.plateau_patience:
                lr *= sched.lr_decay
                since_best = 0

        if setup.checkpoint_path and setup.checkpoint_every and step % setup.checkpoint_every == 0:
            save_checkpoint(params, setup.checkpoint_path, {"step": step})

    if setup.checkpoint_path:
        save_checkpoint(params, setup.checkpoint_path, {"step": sched.total_steps})
    return params, records


def write_log(records: list[TrainRecord], path: str) -> None:
    """Training log as CSV, one row per step (atomic replace)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(LOG_COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(rec.row()) + "\n")
    os.replace(tmp, path)
