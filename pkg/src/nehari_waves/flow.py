"""Constrained gradient-flow solver for ground waves.

One flow iteration is an explicit Euler step tangential to the constraint
manifold followed by a radial correction:

    tangential:  W <- W - dtau * (grad action - lambda * grad constraint)
    radial:      W <- (1 + dtau * constraint(W)) * W        ("paper" mode)
                 W <- projection onto the manifold           ("exact" mode)

with the multiplier lambda chosen so the tangential step preserves the
constraint to first order.  The action decreases along the flow away from
stationary points; the solver enforces this discretely by rejecting any
step that raises the action and halving dtau (dtau never grows back).

Convergence means the projected gradient, the raw traveling-wave residual,
the multiplier and the constraint are all below their tolerances; at a
stationary point of the flow the multiplier and the raw gradient vanish
together with the projected gradient, so the extra gates only tighten the
stopping point, never change it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .averaging import OperatorMode, average_values
from .errors import DegenerateProfileError
from .functionals import (
    FunctionalValues,
    _abs_pow_sum,
    evaluate,
    gradient_pair,
    multiplier_from_gradients,
    psi,
)
from .grid import GridProfile, GridSpec, ModelParams, norm2_sq
from .nehari import (
    DEGENERATE_P,
    RayCoefficients,
    amplitude_threshold,
    project_to_nehari,
    ray_maximizer,
)

__all__ = [
    "ProjectionMode",
    "FlowConfig",
    "RunSummary",
    "FlowDiagnostics",
    "tangential_step",
    "radial_step",
    "solve",
    "continue_in_K",
    "tail_mass",
    "pad_profile",
    "align_profiles",
    "center_profile",
]

#: raw-residual and multiplier stopping gates, as multiples of tol_grad
STATIONARITY_FACTOR = 4.0

#: accepted per-step slack when checking monotone descent
DESCENT_SLACK = 1e-10

#: a profile is classified constant when its range is below this times max|W|
CONSTANT_RANGE_RTOL = 1e-8

#: clamp for the radial correction factor 1 + dtau * constraint
RADIAL_CLAMP = (0.5, 2.0)


def suggest_dtau(params: ModelParams, floor: float = 5e-4, cap: float = 0.02) -> float:
    """Stability-based step suggestion for one run.

    The explicit Euler step must resolve the stiffest curvature of the
    energy, estimated at 1.5x the constant-branch amplitude (a priori
    computable).  The returned value is clamped to [floor, cap]; the floor
    matches the reference setup's smallest step.
    """
    zbar = ray_maximizer(
        RayCoefficients(params.sigma2 / 2.0, 1.0, 1.0), params.p, params.q
    )
    a = 1.5 * max(zbar, amplitude_threshold(params))
    curvature = (
        2.0 * params.sigma2
        + params.p * (params.p - 1.0) * a ** (params.p - 2.0)
        + params.q * (params.q - 1.0) * a ** (params.q - 2.0)
    )
    return min(max(0.3 / curvature, floor), cap)


class ProjectionMode(enum.Enum):
    PAPER_RADIAL = "paper"
    EXACT_NEHARI = "exact"

    @classmethod
    def from_arg(cls, value) -> "ProjectionMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown projection mode {value!r}; "
                f"expected one of {[m.value for m in cls]}"
            ) from None


@dataclass
class FlowConfig:
    dtau: float = 5e-4
    max_iters: int = 2_000_000
    tol_grad: float = 1e-8
    tol_constraint: float = 1e-10
    operator_mode: OperatorMode = OperatorMode.QUADRATURE
    projection_mode: ProjectionMode = ProjectionMode.PAPER_RADIAL
    init: "str | GridProfile" = "gaussian"
    stall_detection: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.dtau > 0:
            raise ValueError("dtau must be positive")
        if not (self.tol_grad > 0 and self.tol_constraint > 0):
            raise ValueError("tolerances must be positive")
        self.operator_mode = OperatorMode.from_arg(self.operator_mode)
        self.projection_mode = ProjectionMode.from_arg(self.projection_mode)
        if isinstance(self.init, str):
            self.init = self.init.lower()
            if self.init not in ("gaussian", "constant"):
                raise ValueError(
                    f"init must be 'gaussian', 'constant' or a GridProfile, "
                    f"got {self.init!r}"
                )


@dataclass
class RunSummary:
    ell: float
    values: FunctionalValues
    residual: float
    raw_residual: float
    multiplier: float
    iterations: int
    amplitude: float
    converged: bool
    classification: str  # NonConstant | Constant | NotConverged
    sigma2: float
    p: float
    q: float
    K: float
    N: int
    dtau_final: float
    seed: int
    restarts: int = 0
    tail_mass: "float | None" = None

    def as_dict(self) -> dict:
        """Flat dict for the summary JSON."""
        return {
            "sigma2": self.sigma2,
            "p": self.p,
            "q": self.q,
            "K": self.K,
            "N": self.N,
            "dtau_final": self.dtau_final,
            "iterations": self.iterations,
            "action": self.ell,
            "Q": self.values.Q,
            "P": self.values.P,
            "kinetic": self.values.kinetic,
            "constraint": self.values.constraint,
            "residual": self.residual,
            "raw_residual": self.raw_residual,
            "multiplier": self.multiplier,
            "amplitude": self.amplitude,
            "classification": self.classification,
            "converged": self.converged,
            "seed": self.seed,
            "tail_mass": self.tail_mass,
        }


@dataclass(frozen=True)
class FlowDiagnostics:
    residual: float
    raw_residual: float
    multiplier: float
    values: FunctionalValues
    amplitude: float


def diagnostics(W, params, mode=OperatorMode.QUADRATURE) -> FlowDiagnostics:
    """Projected/raw residuals, multiplier and functional values of W."""
    grad_l, grad_f, values, aw = gradient_pair(W, params, mode)
    lam = multiplier_from_gradients(grad_l, grad_f)
    r = grad_l - lam * grad_f
    h = W.spec.h
    return FlowDiagnostics(
        residual=math.sqrt(h * float(np.dot(r, r))),
        raw_residual=math.sqrt(h * float(np.dot(grad_l, grad_l))),
        multiplier=lam,
        values=values,
        amplitude=float(np.max(np.abs(aw))),
    )


def tangential_step(W: GridProfile, params: ModelParams, cfg: FlowConfig) -> GridProfile:
    """One explicit Euler step along the constrained negative gradient."""
    grad_l, grad_f, _, _ = gradient_pair(W, params, cfg.operator_mode)
    lam = multiplier_from_gradients(grad_l, grad_f)
    return GridProfile(W.spec, W.values - cfg.dtau * (grad_l - lam * grad_f))


def radial_step(W: GridProfile, params: ModelParams, cfg: FlowConfig) -> GridProfile:
    """Radial correction pulling W back toward the constraint zero set."""
    if cfg.projection_mode is ProjectionMode.EXACT_NEHARI:
        return project_to_nehari(W, params, cfg.operator_mode)[0]
    f = evaluate(W, params, cfg.operator_mode).constraint
    factor = min(max(1.0 + cfg.dtau * f, RADIAL_CLAMP[0]), RADIAL_CLAMP[1])
    return GridProfile(W.spec, factor * W.values)


def initial_profile(spec: GridSpec, cfg: FlowConfig) -> GridProfile:
    if isinstance(cfg.init, GridProfile):
        if cfg.init.spec.N != spec.N or cfg.init.spec.K != spec.K:
            raise ValueError("custom initial profile lives on a different grid")
        return cfg.init
    phi = spec.points()
    if cfg.init == "constant":
        return GridProfile(spec, np.ones(spec.N))
    return GridProfile(spec, np.exp(-(phi**2)))


def _restart_profile(spec: GridSpec, cfg: FlowConfig) -> GridProfile:
    """Sign-randomized, noise-modulated bump used once if the flow lands on
    the constant branch from localized initial data."""
    rng = np.random.default_rng(cfg.seed)
    phi = spec.points()
    sign = rng.choice([-1.0, 1.0])
    center = rng.uniform(-spec.K / 2.0, spec.K / 2.0)
    noise = rng.standard_normal(spec.N)
    noise = average_values(noise, spec, OperatorMode.QUADRATURE)
    peak = np.max(np.abs(noise))
    if peak > 0:
        noise = noise / peak
    bump = np.exp(-((phi - center) ** 2))
    return GridProfile(spec, sign * bump * (1.0 + 0.5 * noise))


def _classify(values_arr: np.ndarray, converged: bool) -> str:
    if not converged:
        return "NotConverged"
    peak = float(np.max(np.abs(values_arr)))
    if peak == 0.0:
        return "Constant"
    spread = float(np.max(values_arr) - np.min(values_arr))
    return "Constant" if spread <= CONSTANT_RANGE_RTOL * peak else "NonConstant"


def center_profile(W: GridProfile, mode: OperatorMode = OperatorMode.QUADRATURE) -> GridProfile:
    """Shift periodically so the maximum of AW sits adjacent to phi = 0.

    Ties break toward the smallest index; on the midpoint grid phi = 0 is a
    cell boundary, so the peak lands on the first sample right of zero.
    """
    aw = average_values(W.values, W.spec, mode)
    i_max = int(np.argmax(aw))
    return W.rolled(W.spec.N // 2 - i_max)


def _flow_loop(params, spec, cfg, w0_values, trace=False):
    """Core iteration; returns (values array, stats dict)."""
    h = spec.h
    s2, p, q = params.sigma2, params.p, params.q
    mode = cfg.operator_mode
    exact_projection = cfg.projection_mode is ProjectionMode.EXACT_NEHARI
    dtau = cfg.dtau
    dtau_min = cfg.dtau * 2.0**-40
    gate = STATIONARITY_FACTOR * cfg.tol_grad

    w = np.array(w0_values, dtype=float)
    aw = average_values(w, spec, mode)
    n2 = h * float(np.dot(w, w))
    Q = h * _abs_pow_sum(aw, q)
    P = h * _abs_pow_sum(aw, p)

    hist = {"action": [], "constraint": [], "residual": []} if trace else None

    converged = False
    iterations = 0
    # Frozen-residual rescue: exponents below 2 make the potential slope
    # non-Lipschitz at zero, and tail cells whose window average hovers at
    # zero lock the explicit step into a period-2 cycle whose amplitude
    # scales with dtau.  Zero measured progress over a window therefore
    # triggers a dtau halving (which shrinks the cycle floor) instead of an
    # immediate stop; the run only gives up once dtau underflows.
    stall_window = 5_000
    best_res = math.inf
    best_res_iter = 0

    lam = 0.0
    res = math.inf
    raw = math.inf
    for it in range(cfg.max_iters + 1):
        kinetic = 0.5 * s2 * n2
        act = kinetic + Q - P
        constraint = s2 * n2 + q * Q - p * P

        sq = psi(aw, q)
        sp = psi(aw, p)
        asq = average_values(sq, spec, mode)
        asp = average_values(sp, spec, mode)
        grad_l = s2 * w + asq - asp
        grad_f = (2.0 * s2) * w + q * asq - p * asp
        den = float(np.dot(grad_f, grad_f))
        if den <= 0.0 or not np.isfinite(den):
            raise DegenerateProfileError("constraint gradient vanished during flow")
        lam = float(np.dot(grad_l, grad_f)) / den
        r = grad_l - lam * grad_f
        res = math.sqrt(h * float(np.dot(r, r)))
        raw = math.sqrt(h * float(np.dot(grad_l, grad_l)))

        if trace:
            hist["action"].append(act)
            hist["constraint"].append(constraint)
            hist["residual"].append(res)

        iterations = it
        if (
            res <= cfg.tol_grad
            and abs(constraint) <= cfg.tol_constraint
            and raw <= gate
            and abs(lam) <= gate
        ):
            converged = True
            break
        if it == cfg.max_iters:
            break

        if cfg.stall_detection:
            if res < best_res * (1.0 - 1e-8):
                best_res = res
                best_res_iter = it
            elif it - best_res_iter >= stall_window:
                dtau *= 0.5
                best_res = res
                best_res_iter = it
                if dtau < dtau_min:
                    break

        # step with rejection: halve dtau on any action increase
        while True:
            w_try = w - dtau * r
            aw_try = average_values(w_try, spec, mode)
            n2_try = h * float(np.dot(w_try, w_try))
            q_try = h * _abs_pow_sum(aw_try, q)
            p_try = h * _abs_pow_sum(aw_try, p)
            if exact_projection:
                if p_try < DEGENERATE_P:
                    raise DegenerateProfileError("flow iterate lost its window average")
                zeta = ray_maximizer(
                    RayCoefficients(0.5 * s2 * n2_try, q_try, p_try), p, q
                )
            else:
                f_try = s2 * n2_try + q * q_try - p * p_try
                zeta = min(max(1.0 + dtau * f_try, RADIAL_CLAMP[0]), RADIAL_CLAMP[1])
            zq = zeta**q
            zp = zeta**p
            act_new = 0.5 * s2 * zeta * zeta * n2_try + zq * q_try - zp * p_try
            if act_new <= act + DESCENT_SLACK:
                w = zeta * w_try
                aw = zeta * aw_try
                n2 = zeta * zeta * n2_try
                Q = zq * q_try
                P = zp * p_try
                break
            dtau *= 0.5
            if dtau < dtau_min:
                break
        if dtau < dtau_min:
            break

    stats = {
        "converged": converged,
        "iterations": iterations,
        "residual": res,
        "raw_residual": raw,
        "multiplier": lam,
        "dtau_final": dtau,
        "trace": hist,
    }
    return w, stats


def _summarize(params, spec, cfg, w_values, stats, restarts):
    prof = GridProfile(spec, w_values)
    aw = average_values(w_values, spec, cfg.operator_mode)
    values = evaluate(prof, params, cfg.operator_mode)
    classification = _classify(w_values, stats["converged"])
    return RunSummary(
        ell=values.action,
        values=values,
        residual=stats["residual"],
        raw_residual=stats["raw_residual"],
        multiplier=stats["multiplier"],
        iterations=stats["iterations"],
        amplitude=float(np.max(np.abs(aw))),
        converged=stats["converged"],
        classification=classification,
        sigma2=params.sigma2,
        p=params.p,
        q=params.q,
        K=spec.K,
        N=spec.N,
        dtau_final=stats["dtau_final"],
        seed=cfg.seed,
        restarts=restarts,
    )


def solve(params: ModelParams, spec: GridSpec, cfg: FlowConfig, trace: bool = False):
    """Run the constrained gradient flow to a ground-wave candidate.

    Returns (centered profile, RunSummary); with ``trace=True`` the summary
    gains a ``trace`` attribute holding per-iteration action, constraint
    and residual arrays.

    Initial data is projected onto the manifold once before the flow
    starts.  If localized initial data collapses onto the constant branch,
    the flow restarts once from a seeded sign-randomized bump and the
    lower-action converged result is kept.
    """
    w0 = project_to_nehari(initial_profile(spec, cfg), params, cfg.operator_mode)[0]
    w, stats = _flow_loop(params, spec, cfg, w0.values, trace=trace)
    restarts = 0
    summary = _summarize(params, spec, cfg, w, stats, restarts)

    wants_nonconstant = not (isinstance(cfg.init, str) and cfg.init == "constant")
    if summary.classification == "Constant" and wants_nonconstant:
        restarts = 1
        w0r = project_to_nehari(_restart_profile(spec, cfg), params, cfg.operator_mode)[0]
        w_r, stats_r = _flow_loop(params, spec, cfg, w0r.values, trace=False)
        summary_r = _summarize(params, spec, cfg, w_r, stats_r, restarts)
        if (
            summary_r.converged
            and summary_r.classification == "NonConstant"
            and summary_r.ell < summary.ell
        ):
            w, stats, summary = w_r, stats_r, summary_r
        else:
            summary = replace(summary, restarts=restarts)

    profile = center_profile(GridProfile(spec, w), cfg.operator_mode)
    tr = stats["trace"]
    summary.trace = {k: np.asarray(v) for k, v in tr.items()} if tr else None
    return profile, summary


def tail_mass(W: GridProfile) -> float:
    """L2 fraction of the profile living outside |phi| > K/2."""
    phi = W.spec.points()
    outside = np.abs(phi) > W.spec.K / 2.0
    total = float(np.dot(W.values, W.values))
    if total == 0.0:
        return 0.0
    return math.sqrt(float(np.dot(W.values[outside], W.values[outside])) / total)


def pad_profile(W: GridProfile, K_new: float) -> GridProfile:
    """Zero-embed a centered profile into a larger cell, keeping h fixed."""
    spec = W.spec
    if not K_new > spec.K:
        raise ValueError("K_new must exceed the current half-period")
    h = spec.h
    n_new = (2.0 * K_new) / h
    if abs(n_new - round(n_new)) > 1e-9:
        raise ValueError("K_new is not an integer number of cells at fixed h")
    n_new = int(round(n_new))
    offset = (K_new - spec.K) / h
    if abs(offset - round(offset)) > 1e-9:
        raise ValueError("cell offset between the grids is not integral")
    offset = int(round(offset))
    out = np.zeros(n_new)
    out[offset : offset + spec.N] = W.values
    return GridProfile(GridSpec(K=K_new, N=n_new), out)


def continue_in_K(
    params: ModelParams,
    cfg: FlowConfig,
    K_start: float,
    factor: float,
    steps: int,
    N_start: int,
):
    """Solve at K_start, then repeatedly enlarge the cell by ``factor``,
    re-seeding each run with the zero-padded previous wave.

    Returns one RunSummary per cell size (steps + 1 total), each carrying
    the tail mass of its converged profile.
    """
    if not factor > 1:
        raise ValueError("continuation factor must exceed 1")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    spec = GridSpec(K=K_start, N=N_start)
    spec.require_alignment()
    profile, summary = solve(params, spec, cfg)
    out = [replace(summary, tail_mass=tail_mass(profile))]
    for _ in range(steps):
        K_new = spec.K * factor
        padded = pad_profile(profile, K_new)
        spec = padded.spec
        spec.require_alignment()
        step_cfg = replace(cfg, init=padded)
        profile, summary = solve(params, spec, step_cfg)
        out.append(replace(summary, tail_mass=tail_mass(profile)))
    return out


def _fractional_roll(v: np.ndarray, delta: float) -> np.ndarray:
    """Periodic shift by a non-integer number of cells (spectral phase)."""
    n = len(v)
    ell = np.arange(n // 2 + 1)
    return np.fft.irfft(np.fft.rfft(v) * np.exp(-2j * np.pi * ell * delta / n), n=n)


def align_profiles(a: GridProfile, b: GridProfile, subcell: bool = True):
    """Best relative L2 distance between a and b over the symmetry group
    (periodic shifts, reflection, sign flip).

    Grid pinning lets two runs settle a fraction of a cell apart, so the
    best integer shift is refined by a sub-cell spectral shift located
    from the correlation peak (``subcell=False`` disables this).

    Returns (rel_l2, aligned b values).
    """
    if not a.same_grid(b):
        raise ValueError("profiles live on different grids")
    av = a.values
    n = len(av)
    fa = np.fft.rfft(av)
    na = float(np.linalg.norm(av)) or 1.0
    best = (math.inf, None)
    for flip in (False, True):
        bv = b.values[::-1] if flip else b.values
        corr = np.fft.irfft(fa * np.conj(np.fft.rfft(bv)), n=n)
        for sign in (1.0, -1.0):
            k = int(np.argmax(sign * corr))
            candidates = [sign * np.roll(bv, k)]
            if subcell:
                c_prev, c_mid, c_next = (
                    sign * corr[(k - 1) % n],
                    sign * corr[k],
                    sign * corr[(k + 1) % n],
                )
                curv = c_prev - 2.0 * c_mid + c_next
                if curv < 0.0:
                    delta = 0.5 * (c_prev - c_next) / curv
                    if abs(delta) < 1.0:
                        candidates.append(sign * _fractional_roll(bv, k + delta))
            for cand in candidates:
                rel = float(np.linalg.norm(av - cand)) / na
                if rel < best[0]:
                    best = (rel, cand)
    return best
