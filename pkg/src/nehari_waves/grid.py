"""Periodic midpoint grid, sampled profiles, discrete norms and CSV I/O.

The periodicity cell is the half-open interval (-K, K].  A profile is
sampled at the N cell midpoints

    phi_i = -K + (i + 1/2) h,        h = 2K / N,

and every integral is the plain Riemann sum with weight h.  Midpoint
sampling makes the unit averaging window [phi - 1/2, phi + 1/2] end
exactly on cell midpoints whenever N/(4K) is an integer, which keeps the
window quadrature exact for the piecewise-constant reading of the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CsvFormatError

__all__ = [
    "GridSpec",
    "GridProfile",
    "ModelParams",
    "norm2_sq",
    "norm_r",
    "inner",
    "write_profile_csv",
    "read_profile_csv",
]

#: header of the profile CSV format (bit-exact contract)
CSV_HEADER = "phi,W,AW"


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on (-K, K] with N midpoint samples."""

    K: float
    N: int

    def __post_init__(self):
        if not (self.K > 0 and math.isfinite(self.K)):
            raise ValueError(f"half-period K must be positive, got {self.K}")
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 1):
            raise ValueError(f"N must be a positive integer, got {self.N!r}")

    @property
    def h(self) -> float:
        """Grid spacing 2K/N."""
        return 2.0 * self.K / self.N

    def points(self) -> np.ndarray:
        """Midpoint sample locations phi_i = -K + (i + 1/2) h."""
        return -self.K + (np.arange(self.N) + 0.5) * self.h

    def window_cells(self):
        """N/(4K) if it is a positive integer (the half-unit window is an
        exact number of cells), else None."""
        m = self.N / (4.0 * self.K)
        m_int = int(round(m))
        if m_int >= 1 and abs(m - m_int) <= 1e-9 * max(1.0, m):
            return m_int
        return None

    def require_alignment(self) -> int:
        m = self.window_cells()
        if m is None:
            raise ValueError(
                f"grid K={self.K}, N={self.N} is not window-aligned: "
                "N/(4K) must be a positive integer"
            )
        return m


@dataclass
class GridProfile:
    """Real-valued profile sampled on a :class:`GridSpec`."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.spec.N,):
            raise ValueError(
                f"expected {self.spec.N} samples, got array of shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("profile contains non-finite samples")
        self.values = v

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> "GridProfile":
        return cls(spec, fn(spec.points()))

    def at(self, i: int) -> float:
        """Periodic sample access, valid for any integer index."""
        return float(self.values[i % self.spec.N])

    def rolled(self, k: int) -> "GridProfile":
        """Profile shifted by k grid cells (periodic)."""
        return GridProfile(self.spec, np.roll(self.values, k))

    def same_grid(self, other: "GridProfile") -> bool:
        return self.spec.N == other.spec.N and self.spec.K == other.spec.K


@dataclass(frozen=True)
class ModelParams:
    """Potential exponents (p, q) and squared wave speed sigma2."""

    p: float
    q: float
    sigma2: float

    def __post_init__(self):
        if not self.p > 2:
            raise ValueError(f"need p > 2, got p={self.p}")
        if not 1 < self.q < self.p:
            raise ValueError(f"need 1 < q < p, got q={self.q}, p={self.p}")
        if not self.sigma2 > 0:
            raise ValueError(f"need sigma2 > 0, got {self.sigma2}")


def _check_same_grid(W: GridProfile, V: GridProfile):
    if not W.same_grid(V):
        raise ValueError(
            f"grid mismatch: (K={W.spec.K}, N={W.spec.N}) vs "
            f"(K={V.spec.K}, N={V.spec.N})"
        )


def norm2_sq(W: GridProfile) -> float:
    """Squared discrete L2 norm, h * sum(values**2)."""
    return W.spec.h * float(np.dot(W.values, W.values))


def norm_r(W: GridProfile, r: float) -> float:
    """Discrete Lr norm (h * sum |values|**r)**(1/r); r = inf gives the max."""
    if math.isinf(r):
        return float(np.max(np.abs(W.values)))
    if r < 1:
        raise ValueError(f"norm order must satisfy r >= 1, got {r}")
    a = np.abs(W.values)
    return float((W.spec.h * np.sum(a**r)) ** (1.0 / r))


def inner(W: GridProfile, V: GridProfile) -> float:
    """Discrete L2 inner product h * sum(W_i V_i); grids must match."""
    _check_same_grid(W, V)
    return W.spec.h * float(np.dot(W.values, V.values))


# ---------------------------------------------------------------------------
# CSV serialization: header "phi,W,AW", one row per grid point in increasing
# phi, 17 significant digits (lossless round trip), LF line endings.
# ---------------------------------------------------------------------------


def write_profile_csv(path, W: GridProfile, AW: GridProfile):
    _check_same_grid(W, AW)
    phi = W.spec.points()
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for x, w, aw in zip(phi, W.values, AW.values):
            fh.write(f"{x:.17g},{w:.17g},{aw:.17g}\n")


def read_profile_csv(path):
    """Read a profile CSV back into (W, AW) grid profiles.

    Raises :class:`CsvFormatError` citing the 1-based line number of the
    first malformed row.
    """
    with open(path, "r", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvFormatError("empty file", line=1)
    if lines[0].strip() != CSV_HEADER:
        raise CsvFormatError(
            f"expected header {CSV_HEADER!r}, got {lines[0]!r}", line=1
        )
    rows = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw.strip() == "":
            continue
        parts = raw.split(",")
        if len(parts) != 3:
            raise CsvFormatError(
                f"expected 3 comma-separated fields, got {len(parts)}",
                line=lineno,
            )
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError:
            raise CsvFormatError(f"non-numeric field in {raw!r}", line=lineno)
    if len(rows) < 2:
        raise CsvFormatError("need at least 2 data rows", line=len(lines))
    data = np.asarray(rows, dtype=float)
    phi, w, aw = data[:, 0], data[:, 1], data[:, 2]
    n = len(phi)
    steps = np.diff(phi)
    h = float(np.median(steps))
    if h <= 0 or not np.allclose(steps, h, rtol=1e-9, atol=1e-12 * max(1.0, abs(h))):
        bad = int(np.argmax(np.abs(steps - h))) + 3  # first row after the jump
        raise CsvFormatError("grid points are not uniformly spaced", line=bad)
    K = h / 2.0 - phi[0]  # phi_0 = -K + h/2
    spec = GridSpec(K=K, N=n)
    expect = spec.points()
    if not np.allclose(phi, expect, rtol=0, atol=1e-9 * max(1.0, K)):
        raise CsvFormatError("grid points do not form a midpoint grid", line=2)
    return GridProfile(spec, w), GridProfile(spec, aw)
