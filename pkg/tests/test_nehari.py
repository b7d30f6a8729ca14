import math

import numpy as np
import pytest

from nehari_waves import (
    DegenerateProfileError,
    GridProfile,
    GridSpec,
    ModelParams,
    OperatorMode,
    amplitude_threshold,
    evaluate,
    nehari_estimates,
    project_to_nehari,
    ray_maximizer,
)
from nehari_waves.nehari import (
    MEMBERSHIP_RTOL,
    RayCoefficients,
    is_on_manifold,
    ray_bracket,
    ray_slope,
    ray_value,
)

from conftest import random_profile, smooth_profile


def random_coefficients(rng):
    c = RayCoefficients(*np.exp(rng.uniform(-3, 3, size=3)))
    p = rng.uniform(2.05, 6.0)
    q = rng.uniform(1.01, p - 0.02)
    return c, p, q


class TestRayMaximizer:
    def test_quartic_closed_form(self):
        assert ray_maximizer(RayCoefficients(1, 1, 1), 4, 2) == pytest.approx(1.0, rel=1e-10)

    def test_quadratic_closed_form(self):
        expected = (3 + math.sqrt(41)) / 8
        assert ray_maximizer(RayCoefficients(1, 1, 1), 4, 3) == pytest.approx(
            expected, rel=1e-10
        )

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            c, p, q = random_coefficients(rng)
            a = float(np.exp(rng.uniform(-4, 4)))
            scaled = RayCoefficients(a * c.c2, a * c.cq, a * c.cp)
            assert ray_maximizer(scaled, p, q) == pytest.approx(
                ray_maximizer(c, p, q), rel=1e-9
            )

    def test_inside_bracket(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            c, p, q = random_coefficients(rng)
            lo, hi = ray_bracket(c, p, q)
            root = ray_maximizer(c, p, q)
            assert lo * (1 - 1e-12) <= root <= hi * (1 + 1e-12)
            assert float(ray_value(c, p, q, root)) > 0.0

    def test_brute_force_scan(self):
        # independent oracle: dense scan of the ray values over the bracket
        rng = np.random.default_rng(2)
        for _ in range(50):
            c, p, q = random_coefficients(rng)
            lo, hi = ray_bracket(c, p, q)
            z = np.linspace(lo, hi, 200_001)
            scan = z[int(np.argmax(ray_value(c, p, q, z)))]
            assert ray_maximizer(c, p, q) == pytest.approx(scan, rel=1e-4)

    def test_continuity_in_coefficients(self):
        c = RayCoefficients(1.7, 0.4, 2.2)
        base = ray_maximizer(c, 3.6, 1.9)
        for delta in (1e-5, 1e-7):
            moved = ray_maximizer(
                RayCoefficients(c.c2 * (1 + delta), c.cq, c.cp), 3.6, 1.9
            )
            assert abs(moved - base) < 10 * delta * base

    def test_slope_signs_on_bracket(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            c, p, q = random_coefficients(rng)
            lo, hi = ray_bracket(c, p, q)
            assert float(ray_slope(c, p, q, lo)) >= -1e-12
            assert float(ray_slope(c, p, q, hi)) <= 1e-12

    def test_invalid_coefficients(self):
        with pytest.raises(ValueError):
            RayCoefficients(-1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            RayCoefficients(1.0, 0.0, 1.0)


class TestProjection:
    def test_constant_one_already_on_manifold(self):
        spec = GridSpec(K=6.0, N=2400)
        params = ModelParams(p=4, q=2, sigma2=2.0)
        W = GridProfile(spec, np.ones(2400))
        proj, z = project_to_nehari(W, params)
        assert z == pytest.approx(1.0, rel=1e-9)
        assert np.allclose(proj.values, W.values, rtol=1e-9)

    def test_constant_two_rescaled(self):
        spec = GridSpec(K=6.0, N=2400)
        params = ModelParams(p=4, q=2, sigma2=2.0)
        W = GridProfile(spec, 2.0 * np.ones(2400))
        _, z = project_to_nehari(W, params)
        assert z == pytest.approx(0.5, rel=1e-9)

    def test_projection_lands_on_manifold(self):
        rng = np.random.default_rng(4)
        spec = GridSpec(K=6.0, N=240)
        params = ModelParams(p=4, q=3, sigma2=1.0)
        for _ in range(50):
            W = random_profile(spec, rng)
            proj, _ = project_to_nehari(W, params)
            assert is_on_manifold(evaluate(proj, params), params, rtol=1e-8)

    def test_idempotent_on_manifold(self):
        rng = np.random.default_rng(5)
        spec = GridSpec(K=6.0, N=240)
        params = ModelParams(p=4, q=3, sigma2=1.0)
        W, _ = project_to_nehari(smooth_profile(spec, rng), params)
        _, z = project_to_nehari(W, params)
        assert z == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_profile_rejected(self):
        # cos(2*pi*phi) sits exactly in the kernel of the spectral operator
        spec = GridSpec(K=6.0, N=2400)
        params = ModelParams(p=4, q=3, sigma2=1.0)
        W = GridProfile.from_function(spec, lambda x: np.cos(2 * np.pi * x))
        with pytest.raises(DegenerateProfileError):
            project_to_nehari(W, params, OperatorMode.SPECTRAL)

    def test_ray_maximality(self):
        rng = np.random.default_rng(6)
        spec = GridSpec(K=6.0, N=240)
        params = ModelParams(p=4, q=3, sigma2=1.0)
        for _ in range(20):
            W, _ = project_to_nehari(smooth_profile(spec, rng), params)
            act = evaluate(W, params).action
            for z in (0.5, 0.9, 1.1, 2.0):
                scaled = evaluate(GridProfile(spec, z * W.values), params).action
                assert scaled <= act + 1e-10

    def test_scale_continuity_under_perturbation(self):
        rng = np.random.default_rng(7)
        spec = GridSpec(K=6.0, N=240)
        params = ModelParams(p=4, q=3, sigma2=1.0)
        W, _ = project_to_nehari(smooth_profile(spec, rng), params)
        _, z0 = project_to_nehari(W, params)  # ~1 on the manifold
        delta = 1e-6
        bump = random_profile(spec, rng)
        bump_scale = delta * math.sqrt((np.dot(W.values, W.values)) / np.dot(bump.values, bump.values))
        _, z1 = project_to_nehari(
            GridProfile(spec, W.values + bump_scale * bump.values), params
        )
        assert abs(z1 - z0) < 100 * delta


class TestEstimates:
    @pytest.mark.parametrize(
        "p,q,expected",
        [(4.0, 3.0, 0.75), (3.0, 1.5, 0.5 ** (2.0 / 3.0))],
    )
    def test_amplitude_threshold_constants(self, p, q, expected):
        params = ModelParams(p=p, q=q, sigma2=1.0)
        assert amplitude_threshold(params) == pytest.approx(expected, rel=1e-14)

    def test_constant_wave_passes(self):
        spec = GridSpec(K=6.0, N=2400)
        params = ModelParams(p=4, q=2, sigma2=2.0)
        report = nehari_estimates(GridProfile(spec, np.ones(2400)), params)
        assert report.all_ok, report.failed()

    def test_projected_profiles_pass(self):
        rng = np.random.default_rng(8)
        spec = GridSpec(K=6.0, N=240)
        params = ModelParams(p=4, q=3, sigma2=1.0)
        for _ in range(20):
            W, _ = project_to_nehari(smooth_profile(spec, rng), params)
            report = nehari_estimates(W, params)
            assert report.all_ok, report.failed()

    def test_off_manifold_rejected(self):
        spec = GridSpec(K=6.0, N=240)
        params = ModelParams(p=4, q=3, sigma2=1.0)
        W = GridProfile(spec, 2.0 * np.ones(240))
        with pytest.raises(ValueError, match="manifold"):
            nehari_estimates(W, params)

    def test_membership_tolerance_matches_scale(self):
        spec = GridSpec(K=6.0, N=240)
        params = ModelParams(p=4, q=3, sigma2=1.0)
        W, _ = project_to_nehari(GridProfile(spec, np.ones(240)), params)
        v = evaluate(W, params)
        scale = 4 * v.kinetic + params.q * v.Q + params.p * v.P
        assert abs(v.constraint) <= MEMBERSHIP_RTOL * scale
