import numpy as np
import pytest

from nehari_waves import FlowConfig, GridProfile, GridSpec, ModelParams
from nehari_waves.flow import solve


def random_profile(spec, rng, scale=1.0):
    return GridProfile(spec, scale * rng.standard_normal(spec.N))


def smooth_profile(spec, rng, modes=6, scale=1.0):
    """Random low-frequency trigonometric profile (band-limited)."""
    phi = spec.points()
    v = np.zeros(spec.N)
    for ell in range(1, modes + 1):
        k = np.pi * ell / spec.K
        v += rng.standard_normal() * np.cos(k * phi) + rng.standard_normal() * np.sin(k * phi)
    v += rng.standard_normal()
    return GridProfile(spec, scale * v / modes)


@pytest.fixture(scope="session")
def spec240():
    # K=6, N=240 gives m = N/(4K) = 10
    return GridSpec(K=6.0, N=240)


@pytest.fixture(scope="session")
def params43():
    return ModelParams(p=4.0, q=3.0, sigma2=1.0)


@pytest.fixture(scope="session")
def small_wave(spec240, params43):
    """Converged non-constant wave at desk scale, shared by flow/lattice tests."""
    cfg = FlowConfig(dtau=0.02, max_iters=200_000, tol_grad=1e-9, tol_constraint=1e-12)
    profile, summary = solve(params43, spec240, cfg)
    assert summary.converged and summary.classification == "NonConstant"
    return profile, summary
