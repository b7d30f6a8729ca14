import math

import numpy as np
import pytest

from nehari_waves import (
    CsvFormatError,
    GridProfile,
    GridSpec,
    ModelParams,
    inner,
    norm2_sq,
    norm_r,
    read_profile_csv,
    write_profile_csv,
)

from conftest import random_profile


class TestGridSpec:
    def test_spacing_identity(self):
        spec = GridSpec(K=6.0, N=2400)
        assert spec.h * spec.N == pytest.approx(2 * spec.K, rel=1e-15)

    def test_figure_grid_alignment(self):
        assert GridSpec(K=6.0, N=2400).window_cells() == 100

    def test_misaligned_grid(self):
        assert GridSpec(K=6.0, N=250).window_cells() is None
        with pytest.raises(ValueError, match="aligned"):
            GridSpec(K=6.0, N=250).require_alignment()

    @pytest.mark.parametrize("K,N", [(-1.0, 10), (0.0, 10), (2.0, 0), (2.0, -4)])
    def test_invalid_spec(self, K, N):
        with pytest.raises(ValueError):
            GridSpec(K=K, N=N)

    def test_midpoints(self):
        spec = GridSpec(K=1.0, N=4)
        assert np.allclose(spec.points(), [-0.75, -0.25, 0.25, 0.75])


class TestModelParams:
    def test_valid(self):
        ModelParams(p=4.0, q=3.0, sigma2=1.0)
        ModelParams(p=3.0, q=1.5, sigma2=0.01)

    @pytest.mark.parametrize(
        "p,q,s2",
        [(2.0, 1.5, 1.0), (4.0, 1.0, 1.0), (4.0, 4.5, 1.0), (4.0, 3.0, 0.0), (4.0, 3.0, -1.0)],
    )
    def test_invalid(self, p, q, s2):
        with pytest.raises(ValueError):
            ModelParams(p=p, q=q, sigma2=s2)


class TestNorms:
    def test_zero_profile(self):
        spec = GridSpec(K=6.0, N=2400)
        W = GridProfile(spec, np.zeros(spec.N))
        assert norm2_sq(W) == 0.0

    def test_constant_norm2(self):
        spec = GridSpec(K=6.0, N=2400)
        W = GridProfile(spec, np.ones(spec.N))
        assert norm2_sq(W) == pytest.approx(12.0, rel=1e-14)

    def test_single_sample(self):
        spec = GridSpec(K=6.0, N=2400)
        v = np.zeros(spec.N)
        v[17] = 3.5
        assert norm2_sq(GridProfile(spec, v)) == pytest.approx(spec.h * 3.5**2, rel=1e-14)

    def test_norm_inf_constant(self):
        spec = GridSpec(K=2.0, N=16)
        W = GridProfile(spec, -0.7 * np.ones(16))
        assert norm_r(W, math.inf) == pytest.approx(0.7)

    def test_norm4_constant(self):
        spec = GridSpec(K=6.0, N=2400)
        W = GridProfile(spec, np.ones(spec.N))
        assert norm_r(W, 4) == pytest.approx(12.0**0.25, rel=1e-14)

    def test_norm1_constant(self):
        spec = GridSpec(K=1.0, N=8)
        W = GridProfile(spec, -2.0 * np.ones(8))
        assert norm_r(W, 1) == pytest.approx(4.0, rel=1e-14)

    def test_norm_rejects_r_below_one(self):
        spec = GridSpec(K=1.0, N=8)
        W = GridProfile(spec, np.ones(8))
        with pytest.raises(ValueError):
            norm_r(W, 0.5)

    def test_norm_scaling(self):
        rng = np.random.default_rng(7)
        spec = GridSpec(K=3.0, N=120)
        W = random_profile(spec, rng)
        for r in (1, 2, 4, math.inf):
            for t in (0.0, 0.3, 2.5):
                scaled = GridProfile(spec, t * W.values)
                assert norm_r(scaled, r) == pytest.approx(t * norm_r(W, r), abs=1e-13)


class TestInner:
    def test_with_zero(self):
        spec = GridSpec(K=1.0, N=4)
        W = GridProfile(spec, np.array([1.0, -2.0, 3.0, 0.5]))
        Z = GridProfile(spec, np.zeros(4))
        assert inner(W, Z) == 0.0

    def test_consistency_with_norm(self):
        rng = np.random.default_rng(3)
        spec = GridSpec(K=2.0, N=64)
        W = random_profile(spec, rng)
        assert inner(W, W) == pytest.approx(norm2_sq(W), rel=1e-14)

    def test_constants(self):
        spec = GridSpec(K=1.0, N=4)
        W = GridProfile(spec, np.ones(4))
        V = GridProfile(spec, 3.0 * np.ones(4))
        assert inner(W, V) == pytest.approx(6.0, rel=1e-14)

    def test_grid_mismatch(self):
        W = GridProfile(GridSpec(K=1.0, N=4), np.ones(4))
        V = GridProfile(GridSpec(K=2.0, N=4), np.ones(4))
        with pytest.raises(ValueError, match="mismatch"):
            inner(W, V)

    def test_cauchy_schwarz(self):
        rng = np.random.default_rng(11)
        spec = GridSpec(K=3.0, N=96)
        for _ in range(200):
            W = random_profile(spec, rng)
            V = random_profile(spec, rng)
            assert abs(inner(W, V)) <= math.sqrt(norm2_sq(W) * norm2_sq(V)) + 1e-12


class TestProfile:
    def test_periodic_indexing(self):
        spec = GridSpec(K=1.0, N=8)
        rng = np.random.default_rng(0)
        W = random_profile(spec, rng)
        for i in range(-16, 24):
            assert W.at(i + 8) == W.at(i)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            GridProfile(GridSpec(K=1.0, N=8), np.ones(7))

    def test_nonfinite_rejected(self):
        v = np.ones(8)
        v[3] = np.nan
        with pytest.raises(ValueError):
            GridProfile(GridSpec(K=1.0, N=8), v)


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(21)
        spec = GridSpec(K=6.0, N=240)
        W = random_profile(spec, rng)
        AW = random_profile(spec, rng)
        path = tmp_path / "profile.csv"
        write_profile_csv(path, W, AW)
        W2, AW2 = read_profile_csv(path)
        assert np.array_equal(W.values, W2.values)
        assert np.array_equal(AW.values, AW2.values)
        assert W2.spec.N == spec.N
        assert W2.spec.K == pytest.approx(spec.K, rel=1e-14)

    def test_header_and_line_endings(self, tmp_path):
        spec = GridSpec(K=1.0, N=4)
        W = GridProfile(spec, np.ones(4))
        path = tmp_path / "p.csv"
        write_profile_csv(path, W, W)
        raw = path.read_bytes()
        assert raw.startswith(b"phi,W,AW\n")
        assert b"\r" not in raw

    def test_truncated_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("phi,W,AW\n-0.75,1.0,1.0\n-0.25,2.0\n")
        with pytest.raises(CsvFormatError) as err:
            read_profile_csv(path)
        assert err.value.line == 3

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("phi,W,AW\n-0.75,1.0,1.0\n-0.25,xyz,1.0\n")
        with pytest.raises(CsvFormatError) as err:
            read_profile_csv(path)
        assert err.value.line == 3

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y,z\n1,2,3\n")
        with pytest.raises(CsvFormatError) as err:
            read_profile_csv(path)
        assert err.value.line == 1
