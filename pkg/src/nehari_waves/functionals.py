"""Action, partial energies, constraint functional and their gradients.

For a profile W on the periodicity cell the quantities are

    kinetic    = sigma2/2 * ||W||_2^2
    Q          = h * sum |AW|^q           (low-exponent potential part)
    P          = h * sum |AW|^p           (high-exponent potential part)
    action     = kinetic + Q - P
    constraint = sigma2 * ||W||_2^2 + q Q - p P

where A is the unit-window average.  The constraint is the radial
derivative d/dz action(z W) at z = 1, so its zero level set is the
manifold on which ground waves minimize the action.

Gradients in the h-weighted inner product:

    grad action     = sigma2 W + A psi_q(AW) - A psi_p(AW)
    grad constraint = 2 sigma2 W + q A psi_q(AW) - p A psi_p(AW)

with psi_r(w) = r sgn(w) |w|^(r-1), the derivative of w -> |w|^r.  The
window average is computed once per evaluation and shared by values and
gradients, and the same (self-adjoint) operator is used on both sides, so
these gradients are the exact discrete gradients of the Riemann sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .averaging import OperatorMode, average_values
from .errors import DegenerateProfileError
from .grid import GridProfile, ModelParams, norm2_sq

__all__ = [
    "psi",
    "FunctionalValues",
    "evaluate",
    "grad_action",
    "grad_constraint",
    "multiplier",
]


def psi(w, r: float):
    """Pointwise r * sgn(w) * |w|**(r-1) for r > 1; 0 at w = 0.

    Fast paths cover the exponents used by the double-well pairs
    (4, 3) and (3, 3/2) without calling the generic power.
    """
    if not r > 1:
        raise ValueError(f"psi needs r > 1, got r={r}")
    w = np.asarray(w, dtype=float)
    if r == 2.0:
        return 2.0 * w
    if r == 3.0:
        return 3.0 * w * np.abs(w)
    if r == 4.0:
        return 4.0 * w * w * w
    if r == 1.5:
        return 1.5 * np.sign(w) * np.sqrt(np.abs(w))
    return r * np.sign(w) * np.abs(w) ** (r - 1.0)


def _abs_pow_sum(a: np.ndarray, r: float) -> float:
    """sum |a|**r with the same fast paths as :func:`psi`."""
    if r == 2.0:
        return float(np.dot(a, a))
    if r == 3.0:
        t = np.abs(a)
        return float(np.sum(t * t * t))
    if r == 4.0:
        t = a * a
        return float(np.dot(t, t))
    if r == 1.5:
        t = np.abs(a)
        return float(np.sum(t * np.sqrt(t)))
    return float(np.sum(np.abs(a) ** r))


@dataclass(frozen=True)
class FunctionalValues:
    action: float
    kinetic: float
    Q: float
    P: float
    constraint: float

    @classmethod
    def from_parts(cls, n2: float, Q: float, P: float, params: ModelParams):
        kinetic = 0.5 * params.sigma2 * n2
        return cls(
            action=kinetic + Q - P,
            kinetic=kinetic,
            Q=Q,
            P=P,
            constraint=params.sigma2 * n2 + params.q * Q - params.p * P,
        )


def constraint_scale(values: FunctionalValues, params: ModelParams) -> float:
    """Natural magnitude of the constraint's constituent terms."""
    return 4.0 * values.kinetic + params.q * values.Q + params.p * values.P


def evaluate(
    W: GridProfile,
    params: ModelParams,
    mode: OperatorMode = OperatorMode.QUADRATURE,
) -> FunctionalValues:
    """All functional values of W in one pass (one window average)."""
    aw = average_values(W.values, W.spec, mode)
    h = W.spec.h
    return FunctionalValues.from_parts(
        n2=norm2_sq(W),
        Q=h * _abs_pow_sum(aw, params.q),
        P=h * _abs_pow_sum(aw, params.p),
        params=params,
    )


def gradient_pair(W, params, mode=OperatorMode.QUADRATURE):
    """(grad action, grad constraint, values, AW) sharing one average.

    Raw arrays are returned for the first, second and fourth slots; this
    is the work-horse for the flow loop and the public wrappers below.
    """
    spec = W.spec
    h = spec.h
    aw = average_values(W.values, spec, mode)
    sq = psi(aw, params.q)
    sp = psi(aw, params.p)
    # |a|^r = a * psi_r(a) / r pointwise, so Q and P come for free
    Q = h * float(np.dot(aw, sq)) / params.q
    P = h * float(np.dot(aw, sp)) / params.p
    asq = average_values(sq, spec, mode)
    asp = average_values(sp, spec, mode)
    s2 = params.sigma2
    grad_l = s2 * W.values + asq - asp
    grad_f = (2.0 * s2) * W.values + params.q * asq - params.p * asp
    values = FunctionalValues.from_parts(norm2_sq(W), Q, P, params)
    return grad_l, grad_f, values, aw


def grad_action(
    W: GridProfile,
    params: ModelParams,
    mode: OperatorMode = OperatorMode.QUADRATURE,
) -> GridProfile:
    """Gradient of the action; also the traveling-wave residual field."""
    grad_l, _, _, _ = gradient_pair(W, params, mode)
    return GridProfile(W.spec, grad_l)


def grad_constraint(
    W: GridProfile,
    params: ModelParams,
    mode: OperatorMode = OperatorMode.QUADRATURE,
) -> GridProfile:
    grad_l, grad_f, _, _ = gradient_pair(W, params, mode)
    return GridProfile(W.spec, grad_f)


def multiplier_from_gradients(grad_l: np.ndarray, grad_f: np.ndarray) -> float:
    """<grad action, grad constraint> / ||grad constraint||^2.

    The h weights cancel in the quotient.  Raises on a vanishing
    denominator (degenerate point off the manifold).
    """
    den = float(np.dot(grad_f, grad_f))
    if den <= 0.0 or not np.isfinite(den):
        raise DegenerateProfileError(
            "constraint gradient vanishes; multiplier undefined"
        )
    return float(np.dot(grad_l, grad_f)) / den


def multiplier(
    W: GridProfile,
    params: ModelParams,
    mode: OperatorMode = OperatorMode.QUADRATURE,
) -> float:
    grad_l, grad_f, _, _ = gradient_pair(W, params, mode)
    return multiplier_from_gradients(grad_l, grad_f)
