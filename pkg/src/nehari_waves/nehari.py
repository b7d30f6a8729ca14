"""Ray maximizer, projection onto the constraint manifold, and the
estimate suite that every manifold point must satisfy.

The restriction of the action to a ray z -> z*W is the tri-monomial

    lam_c(z) = c2 z^2 + cq z^q - cp z^p,
    c = (sigma2/2 ||W||^2, Q(W), P(W)) in R_+^3,

which has a unique positive maximizer zbar(c).  Scaling W by zbar(c)
projects it onto the manifold {constraint = 0}; the projection scale is
the unique positive zero of

    f_c(z) = z * lam_c'(z) = 2 c2 z^2 + q cq z^q - p cp z^p,

bracketed by

    max{(2 c2/(p cp))^(1/(p-2)), (q cq/(p cp))^(1/(p-q))}
        <= zbar <= max{(4 c2/(p cp))^(1/(p-2)), (2 q cq/(p cp))^(1/(p-q))}.

Bisection on this bracket is unconditionally convergent, which is why it
is used instead of Newton's method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .averaging import OperatorMode
from .errors import DegenerateProfileError
from .functionals import FunctionalValues, constraint_scale, evaluate, gradient_pair
from .grid import GridProfile, ModelParams, norm2_sq

__all__ = [
    "RayCoefficients",
    "ray_value",
    "ray_slope",
    "ray_bracket",
    "ray_maximizer",
    "project_to_nehari",
    "amplitude_threshold",
    "nehari_estimates",
    "EstimateCheck",
    "EstimateReport",
    "MEMBERSHIP_RTOL",
]

#: relative tolerance for manifold membership, |constraint| <= rtol * scale
MEMBERSHIP_RTOL = 1e-9

#: P(W) below this is treated as a vanishing window average (the projection
#: scale would blow up like P**(-1/(p-2)))
DEGENERATE_P = 1e-30


@dataclass(frozen=True)
class RayCoefficients:
    c2: float
    cq: float
    cp: float

    def __post_init__(self):
        if not (self.c2 > 0 and self.cq > 0 and self.cp > 0):
            raise ValueError(
                f"ray coefficients must be positive, got "
                f"({self.c2}, {self.cq}, {self.cp})"
            )

    @classmethod
    def from_values(cls, values: FunctionalValues) -> "RayCoefficients":
        return cls(c2=values.kinetic, cq=values.Q, cp=values.P)


def ray_value(c: RayCoefficients, p: float, q: float, z):
    """lam_c(z) = c2 z^2 + cq z^q - cp z^p (vectorized in z)."""
    z = np.asarray(z, dtype=float)
    return c.c2 * z**2 + c.cq * z**q - c.cp * z**p


def ray_slope(c: RayCoefficients, p: float, q: float, z):
    """f_c(z) = z lam_c'(z) = 2 c2 z^2 + q cq z^q - p cp z^p."""
    z = np.asarray(z, dtype=float)
    return 2.0 * c.c2 * z**2 + q * c.cq * z**q - p * c.cp * z**p


def ray_bracket(c: RayCoefficients, p: float, q: float):
    """Interval [lo, hi] guaranteed to contain the ray maximizer."""
    base2 = 2.0 * c.c2 / (p * c.cp)
    baseq = q * c.cq / (p * c.cp)
    lo = max(base2 ** (1.0 / (p - 2.0)), baseq ** (1.0 / (p - q)))
    hi = max((2.0 * base2) ** (1.0 / (p - 2.0)), (2.0 * baseq) ** (1.0 / (p - q)))
    return lo, hi


def ray_max_value(c: RayCoefficients, p: float, q: float, root: float) -> float:
    """lam_c at its maximizer, in the cancellation-free form obtained by
    eliminating the p-monomial through f_c(root) = 0."""
    return (1.0 - 2.0 / p) * c.c2 * root**2 + (1.0 - q / p) * c.cq * root**q


def ray_maximizer(c: RayCoefficients, p: float, q: float, tol: float = 1e-12) -> float:
    """Unique positive maximizer of lam_c, via bisection on f_c.

    The sign of f_c is evaluated in log space (the three monomials can
    dwarf each other by hundreds of orders of magnitude when q is close to
    p), and the iteration stops once |f_c| falls below ``tol`` relative to
    the magnitude of its terms, or the bracket collapses to rounding.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = ray_bracket(c, p, q)
    # log of (2 c2 z^2 + q cq z^q) minus log of (p cp z^p): same zero as
    # f_c, and |log_gap| ~ |f_c| / (p cp z^p) near it
    l2 = math.log(2.0 * c.c2)
    lq = math.log(q * c.cq)
    lp = math.log(p * c.cp)

    def log_gap(y):
        return np.logaddexp(l2 + 2.0 * y, lq + q * y) - (lp + p * y)

    y_lo, y_hi = math.log(lo), math.log(hi)
    s_lo, s_hi = log_gap(y_lo), log_gap(y_hi)
    if not (np.isfinite(s_lo) and np.isfinite(s_hi)) or s_lo < -1e-6 or s_hi > 1e-6:
        raise ValueError(
            f"bracket [{lo}, {hi}] does not straddle the sign change "
            f"(log-gap {s_lo} .. {s_hi}); check the coefficients"
        )
    if s_lo <= 0.0:  # root at lo within rounding
        y_root = y_lo
    elif s_hi >= 0.0:
        y_root = y_hi
    else:
        y_root = 0.5 * (y_lo + y_hi)
        for _ in range(200):
            y_root = 0.5 * (y_lo + y_hi)
            s_mid = log_gap(y_root)
            if abs(s_mid) <= tol:
                break
            if s_mid > 0.0:
                y_lo = y_root
            else:
                y_hi = y_root
            if y_hi - y_lo <= 4.0 * np.finfo(float).eps * max(1.0, abs(y_root)):
                y_root = 0.5 * (y_lo + y_hi)
                break
    root = float(math.exp(y_root))
    if not ray_max_value(c, p, q, root) > 0.0:
        raise ValueError(
            f"ray maximum is not positive at z={root}; inconsistent coefficients"
        )
    return root


def project_to_nehari(
    W: GridProfile,
    params: ModelParams,
    mode: OperatorMode = OperatorMode.QUADRATURE,
    tol: float = 1e-12,
):
    """Scale W onto the constraint manifold; returns (scaled profile, scale).

    Undefined when the window average of W vanishes (P numerically zero).
    """
    values = evaluate(W, params, mode)
    if values.P < DEGENERATE_P:
        raise DegenerateProfileError(
            "window average of the profile is numerically zero; "
            "projection onto the manifold is undefined"
        )
    c = RayCoefficients.from_values(values)
    z = ray_maximizer(c, params.p, params.q, tol=tol)
    return GridProfile(W.spec, z * W.values), z


def is_on_manifold(values: FunctionalValues, params: ModelParams,
                   rtol: float = MEMBERSHIP_RTOL) -> bool:
    return abs(values.constraint) <= rtol * constraint_scale(values, params)


def amplitude_threshold(params: ModelParams) -> float:
    """(q/p)**(1/(p-q)): lower bound for max|AW| on the manifold,
    independent of both the cell size and the wave speed."""
    return (params.q / params.p) ** (1.0 / (params.p - params.q))


@dataclass(frozen=True)
class EstimateCheck:
    name: str
    lhs: float
    rhs: float
    ok: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class EstimateReport:
    checks: tuple

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.ok]


def nehari_estimates(
    W: GridProfile,
    params: ModelParams,
    mode: OperatorMode = OperatorMode.QUADRATURE,
    slack: float = 1e-9,
) -> EstimateReport:
    """Check the manifold estimate suite with its explicit constants.

    The profile must already satisfy the membership tolerance; each check
    is reported as lhs <= rhs with a relative slack on the comparison.
    """
    grad_l, grad_f, values, aw = gradient_pair(W, params, mode)
    if not is_on_manifold(values, params):
        raise ValueError(
            f"profile is not on the manifold: constraint={values.constraint:g} "
            f"exceeds {MEMBERSHIP_RTOL:g} * scale"
        )
    p, q, s2 = params.p, params.q, params.sigma2
    h = W.spec.h
    n2 = norm2_sq(W)
    amp = float(np.max(np.abs(aw)))
    act = values.action
    thr = amplitude_threshold(params)
    action_coeff = s2 * (0.5 - 1.0 / p)  # action >= this * ||W||^2

    def le(name, lhs, rhs):
        return EstimateCheck(name, lhs, rhs, lhs <= rhs + slack * (abs(lhs) + abs(rhs)))

    checks = (
        le("norm_sq_lower", thr**2, n2),
        le("norm_sq_upper", n2, act / action_coeff),
        le("amplitude_lower", thr, amp),
        le("amplitude_upper", amp**2, act / action_coeff),
        le("action_lower", action_coeff * thr**2, act),
        le("p_part_lower", (s2 / p) * thr**2, values.P),
        le(
            "p_part_upper",
            values.P,
            (s2 * act / action_coeff + q * act / (1.0 - q / p)) / p,
        ),
        le("q_part_upper", values.Q, act / (1.0 - q / p)),
        le(
            "radial_transversality",
            h * float(np.dot(grad_f, W.values)),
            -(p - 2.0) * s2 * n2,
        ),
    )
    return EstimateReport(checks=checks)
