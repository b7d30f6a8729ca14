"""Validation of computed waves against the atom-chain dynamics.

A profile W on the cell (-K, K] is turned into initial data for a
periodic chain of M = n_cells * 2K unit-mass atoms through the traveling
ansatz

    x_j(t) = r j + X(j - sigma t),      v_j(t) = -sigma X'(j - sigma t),

with r the grid mean of W and X the periodic antiderivative of W - r
(X is exactly piecewise linear for the piecewise-constant reading of the
samples, so linear interpolation of X is exact).  Newton's equations

    x_j'' = F'(x_{j+1} - x_j) - F'(x_j - x_{j-1}),
    F(w) = |w|^p - |w|^q,

are integrated with velocity Verlet, and the measured strain profile at
time T is compared against the transported window average AW shifted by
sigma T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .averaging import OperatorMode, average_values
from .errors import BlowupError
from .functionals import psi
from .grid import GridProfile, ModelParams

__all__ = [
    "ChainState",
    "WaveEmbedding",
    "DriftReport",
    "embed_wave",
    "integrate",
    "validate_wave",
    "hamiltonian",
    "total_momentum",
]

BLOWUP_GUARD = 1e12


@dataclass
class ChainState:
    positions: np.ndarray
    velocities: np.ndarray
    t: float
    period_length: float

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.shape != self.velocities.shape or self.positions.ndim != 1:
            raise ValueError("positions and velocities must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise ValueError("chain state contains non-finite entries")

    @property
    def M(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class WaveEmbedding:
    W: GridProfile
    r: float
    sigma: float


def _periodic_interp(values: np.ndarray, phi0: float, h: float, queries) -> np.ndarray:
    """Linear interpolation of uniformly spaced periodic samples.

    ``values[i]`` sits at phi0 + i*h and the data repeats with period n*h.
    """
    q = np.asarray(queries, dtype=float)
    n = len(values)
    t = (q - phi0) / h
    i0 = np.floor(t).astype(int)
    frac = t - i0
    return values[i0 % n] * (1.0 - frac) + values[(i0 + 1) % n] * frac


def strains(chain: ChainState) -> np.ndarray:
    """Nearest-neighbor strains x_{j+1} - x_j with periodic closure."""
    x = chain.positions
    s = np.empty_like(x)
    s[:-1] = x[1:] - x[:-1]
    s[-1] = x[0] + chain.period_length - x[-1]
    return s


def potential(w, params: ModelParams):
    a = np.abs(np.asarray(w, dtype=float))
    return a**params.p - a**params.q


def _forces(x: np.ndarray, period_length: float, params: ModelParams) -> np.ndarray:
    s = np.empty_like(x)
    s[:-1] = x[1:] - x[:-1]
    s[-1] = x[0] + period_length - x[-1]
    dphi = psi(s, params.p) - psi(s, params.q)
    return dphi - np.roll(dphi, 1)


def embed_wave(W: GridProfile, sigma2: float, n_cells: int = 4):
    """Initial chain data for the traveling ansatz; returns
    (WaveEmbedding, ChainState).

    The cell width 2K must be a positive integer so atoms tile it; the
    strain of the constructed chain at t = 0 reproduces the unit-window
    average of W up to the linear-interpolation error O(h^2).
    """
    if not sigma2 > 0:
        raise ValueError(f"need sigma2 > 0, got {sigma2}")
    spec = W.spec
    two_k = 2.0 * spec.K
    if abs(two_k - round(two_k)) > 1e-12 or round(two_k) < 1:
        raise ValueError(f"cell width 2K = {two_k} must be a positive integer")
    if n_cells < 1:
        raise ValueError("need at least one periodic cell of atoms")
    two_k = int(round(two_k))
    sigma = math.sqrt(sigma2)
    r = float(np.mean(W.values))
    h = spec.h

    # periodic antiderivative of W - r on the cell nodes -K, -K+h, ..., K
    x_nodes = np.concatenate(([0.0], np.cumsum(h * (W.values - r))))

    m = n_cells * two_k
    j = np.arange(m)
    # map integer phases into [0, 2K) measured from the node at -K
    phase = np.mod(j.astype(float) + spec.K, 2.0 * spec.K)
    node_grid = np.arange(spec.N + 1) * h
    x_wave = np.interp(phase, node_grid, x_nodes)
    positions = r * j + x_wave

    w_at_atoms = _periodic_interp(W.values, h / 2.0, h, phase)
    velocities = -sigma * (w_at_atoms - r)

    chain = ChainState(
        positions=positions,
        velocities=velocities,
        t=0.0,
        period_length=r * m,
    )
    return WaveEmbedding(W=W, r=r, sigma=sigma), chain


def integrate(chain: ChainState, params: ModelParams, dt: float, T: float) -> ChainState:
    """Velocity-Verlet integration over n = round(T/dt) steps of size dt.

    The returned state carries t = chain.t + n*dt.  Aborts with
    :class:`BlowupError` if any position or velocity passes 1e12.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(T / dt))
    x = chain.positions.copy()
    v = chain.velocities.copy()
    a = _forces(x, chain.period_length, params)
    half = 0.5 * dt
    for step in range(n_steps):
        v += half * a
        x += dt * v
        a = _forces(x, chain.period_length, params)
        v += half * a
        if step % 256 == 0 and (
            np.max(np.abs(x)) > BLOWUP_GUARD or np.max(np.abs(v)) > BLOWUP_GUARD
        ):
            raise BlowupError(
                f"integration blew up at t={chain.t + (step + 1) * dt:g} "
                f"(max |x|={np.max(np.abs(x)):.3g}, max |v|={np.max(np.abs(v)):.3g})"
            )
    if np.max(np.abs(x)) > BLOWUP_GUARD or np.max(np.abs(v)) > BLOWUP_GUARD:
        raise BlowupError("integration blew up at the final state")
    return ChainState(
        positions=x,
        velocities=v,
        t=chain.t + n_steps * dt,
        period_length=chain.period_length,
    )


def hamiltonian(chain: ChainState, params: ModelParams) -> float:
    s = strains(chain)
    return float(0.5 * np.dot(chain.velocities, chain.velocities)
                 + np.sum(potential(s, params)))


def total_momentum(chain: ChainState) -> float:
    return float(np.sum(chain.velocities))


@dataclass(frozen=True)
class DriftReport:
    T: float
    dt: float
    M: int
    drift_l2: float
    drift_sup: float
    energy_drift: float
    momentum_drift: float

    def as_dict(self) -> dict:
        return {
            "T": self.T,
            "dt": self.dt,
            "M": self.M,
            "drift_l2": self.drift_l2,
            "drift_sup": self.drift_sup,
            "energy_drift": self.energy_drift,
            "momentum_drift": self.momentum_drift,
        }


def validate_wave(
    W: GridProfile,
    params: ModelParams,
    dt: float,
    T: float,
    n_cells: int = 4,
    operator_mode: OperatorMode = OperatorMode.QUADRATURE,
) -> DriftReport:
    """Integrate the embedded wave to time T and report how far the
    measured strain profile drifted from the transported prediction."""
    embedding, chain = embed_wave(W, params.sigma2, n_cells=n_cells)
    h0 = hamiltonian(chain, params)
    p0 = total_momentum(chain)
    final = integrate(chain, params, dt, T)
    t_final = final.t

    aw = average_values(W.values, W.spec, operator_mode)
    j = np.arange(final.M)
    # strain j sits at phase j + 1/2 and travels with speed sigma
    query = j + 0.5 - embedding.sigma * t_final
    phase = np.mod(query + W.spec.K, 2.0 * W.spec.K) - W.spec.K
    predicted = _periodic_interp(aw, -W.spec.K + W.spec.h / 2.0, W.spec.h, phase)
    measured = strains(final)

    diff = measured - predicted
    ref = float(np.linalg.norm(predicted))
    sup_ref = float(np.max(np.abs(predicted)))
    h_final = hamiltonian(final, params)
    return DriftReport(
        T=t_final,
        dt=dt,
        M=final.M,
        drift_l2=float(np.linalg.norm(diff)) / ref if ref > 0 else float(np.linalg.norm(diff)),
        drift_sup=float(np.max(np.abs(diff))) / sup_ref if sup_ref > 0 else float(np.max(np.abs(diff))),
        energy_drift=abs(h_final - h0) / abs(h0) if h0 != 0 else abs(h_final - h0),
        momentum_drift=abs(total_momentum(final) - p0),
    )
