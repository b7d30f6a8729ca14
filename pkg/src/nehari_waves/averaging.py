"""The unit-window averaging operator and its difference derivative.

``average`` computes (AW)(phi) = integral of W over [phi - 1/2, phi + 1/2]
in one of two interchangeable discretizations:

* ``quadrature`` -- the exact unit-window integral of the piecewise-
  constant midpoint reading of the samples.  With m = N/(4K) window cells
  per half-unit, the window ends on the midpoints of cells i -+ m, so the
  two end cells enter with weight 1/2:

      (AW)_i = h * (W_{i-m}/2 + W_{i-m+1} + ... + W_{i+m-1} + W_{i+m}/2).

  The stencil is symmetric, hence exactly self-adjoint in the h-weighted
  inner product, and second-order accurate against the continuum symbol.

* ``spectral`` -- multiply Fourier mode l (wavenumber k_l = pi*l/K) by
  sin(k_l/2)/(k_l/2) and transform back; exact per mode, value 1 at l=0.
  Resonant zeros of the symbol are kept as exact zeros.

A left-closed variant ``average_left_closed`` (plain sum over the 2m cells
[i-m, i+m-1]) is retained for reference; it is only first-order accurate
and not self-adjoint, so it is not selectable as an operator mode.
"""

from __future__ import annotations

import enum

import numpy as np

from .grid import GridProfile, GridSpec

__all__ = [
    "OperatorMode",
    "average",
    "average_adjoint",
    "difference_derivative",
    "average_left_closed",
]


class OperatorMode(enum.Enum):
    QUADRATURE = "quadrature"
    SPECTRAL = "spectral"

    @classmethod
    def from_arg(cls, value) -> "OperatorMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown operator mode {value!r}; "
                f"expected one of {[m.value for m in cls]}"
            ) from None


def window_average_values(v: np.ndarray, m: int, h: float) -> np.ndarray:
    """Symmetric window quadrature on raw sample arrays (periodic)."""
    n = len(v)
    ext = np.concatenate((v[-m:], v, v[:m]))  # indices shifted by +m
    prefix = np.concatenate(([0.0], np.cumsum(ext)))
    full = prefix[2 * m + 1 : 2 * m + 1 + n] - prefix[:n]  # sum over i-m..i+m
    return h * (full - 0.5 * (ext[:n] + ext[2 * m : 2 * m + n]))


def spectral_average_values(v: np.ndarray, K: float) -> np.ndarray:
    """Fourier-symbol implementation on raw sample arrays; N must be even."""
    n = len(v)
    coeff = np.fft.rfft(v)
    ell = np.arange(n // 2 + 1)
    coeff *= np.sinc(ell / (2.0 * K))  # sin(k/2)/(k/2) at k = pi*l/K
    return np.fft.irfft(coeff, n=n)


def average_values(v: np.ndarray, spec: GridSpec, mode: OperatorMode) -> np.ndarray:
    """Array-in/array-out dispatch used by the hot solver loop."""
    mode = OperatorMode.from_arg(mode)
    if mode is OperatorMode.QUADRATURE:
        m = spec.require_alignment()
        return window_average_values(v, m, spec.h)
    if spec.N % 2 != 0:
        raise ValueError(f"spectral mode requires even N, got N={spec.N}")
    return spectral_average_values(v, spec.K)


def average(W: GridProfile, mode: OperatorMode = OperatorMode.QUADRATURE) -> GridProfile:
    """Apply the unit-window averaging operator."""
    return GridProfile(W.spec, average_values(W.values, W.spec, mode))


def average_adjoint(W: GridProfile, mode: OperatorMode = OperatorMode.QUADRATURE) -> GridProfile:
    """Adjoint of :func:`average` in the h-weighted inner product.

    The averaging kernel is even in both discretizations, so the adjoint
    coincides with the operator itself; kept as a separate entry point so
    gradient code states which role it relies on.
    """
    return average(W, mode)


def difference_derivative(W: GridProfile) -> GridProfile:
    """(DW)_i = W_{i+m} - W_{i-m}, the exact derivative of the averaged
    profile: (AW)'(phi) = W(phi + 1/2) - W(phi - 1/2).

    Needs the half-unit shift to land on the grid (N/(4K) integer).
    """
    m = W.spec.require_alignment()
    v = W.values
    return GridProfile(W.spec, np.roll(v, -m) - np.roll(v, m))


def average_left_closed(W: GridProfile) -> GridProfile:
    """Left-closed window sum h * (W_{i-m} + ... + W_{i+m-1}).

    Covers a unit window displaced by h/2, which makes it first-order
    accurate only and non-self-adjoint; see the module docstring.
    """
    m = W.spec.require_alignment()
    v = W.values
    n = len(v)
    ext = np.concatenate((v[-m:], v, v[:m]))
    prefix = np.concatenate(([0.0], np.cumsum(ext)))
    return GridProfile(W.spec, W.spec.h * (prefix[2 * m : 2 * m + n] - prefix[:n]))
