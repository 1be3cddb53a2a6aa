"""Covariance, samplers and the local nondeterminism diagnostic."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbmclt.errors import RegimeError
from fbmclt.gaussian_core import (
    FbmPathPair,
    ModelParams,
    TimeGrid,
    covariance_matrix,
    fbm_covariance,
    field_increment,
    increment_autocovariance,
    lnd_diagnostic,
    sample_fbm,
    sample_fbm_cholesky,
    sample_fbm_circulant,
    sample_path_pair,
)
from fbmclt.rng import stream


class TestModelParams:
    def test_regime_flags(self):
        p = ModelParams(0.75, 2, 1.0, 1.0)
        assert p.lt_valid and p.clt_valid
        assert p.beta == pytest.approx(2 / 3)

    @pytest.mark.parametrize("H,d,lt,clt", [(0.9, 3, False, False), (0.55, 3, True, True),
                                            (0.6, 2, True, False), (0.5, 1, True, False),
                                            (0.95, 1, True, False)])
    def test_flag_table(self, H, d, lt, clt):
        p = ModelParams(H, d, 1.0, 1.0)
        assert (p.lt_valid, p.clt_valid) == (lt, clt)

    def test_require_messages_cite_inequalities(self):
        with pytest.raises(RegimeError, match="Hd < 2"):
            ModelParams(0.9, 3, 1, 1).require_clt()
        with pytest.raises(RegimeError, match=r"2/\(d\+1\) < H < 2/d"):
            ModelParams(0.6, 2, 1, 1).require_clt()

    @pytest.mark.parametrize("kw", [dict(H=0.0), dict(H=1.0), dict(d=0), dict(d=1.5),
                                    dict(t1=0.0), dict(t2=-1.0)])
    def test_invalid(self, kw):
        base = dict(H=0.75, d=2, t1=1.0, t2=1.0)
        base.update(kw)
        with pytest.raises(ValueError):
            ModelParams(**base)


class TestTimeGrid:
    def test_uniform(self):
        g = TimeGrid(2.0, 8)
        assert g.times[0] == 0.0 and g.times[-1] == pytest.approx(2.0, rel=1e-15)
        np.testing.assert_allclose(np.diff(g.times), 0.25, rtol=1e-12)

    def test_with_max_step_is_coarsest(self):
        g = TimeGrid.with_max_step(1.0, 1 / 256)
        assert g.n_points == 256
        assert TimeGrid.with_max_step(1.0, 0.3).n_points == 4

    def test_invalid(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 4)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0)


class TestCovariance:
    def test_brownian_case(self):
        assert fbm_covariance(0.3, 0.7, 0.5) == pytest.approx(0.3)

    def test_variance(self):
        assert fbm_covariance(2.0, 2.0, 0.75) == pytest.approx(2.0**1.5)

    @given(s=st.floats(0, 10), t=st.floats(0, 10), H=st.floats(0.01, 0.99))
    @settings(max_examples=200, deadline=None)
    def test_symmetric_and_nonnegative(self, s, t, H):
        a, b = fbm_covariance(s, t, H), fbm_covariance(t, s, H)
        assert a == b
        assert a >= -1e-12 * max(1.0, s, t) ** (2 * H)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            fbm_covariance(-1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            fbm_covariance(1.0, 1.0, 1.0)

    def test_matrix_positive_definite(self):
        c = covariance_matrix(TimeGrid(1.0, 64), 0.9)
        assert np.linalg.eigvalsh(c).min() > 0

    def test_increment_autocovariance_from_covariance(self):
        H, step = 0.3, 0.1
        k = np.arange(5)
        t = step * np.arange(8)
        direct = [fbm_covariance(t[1], t[j + 1], H) - fbm_covariance(t[1], t[j], H)
                  - fbm_covariance(t[0], t[j + 1], H) + fbm_covariance(t[0], t[j], H)
                  for j in k + 1]
        # increment 0 against increment j equals the lag-j autocovariance
        np.testing.assert_allclose(increment_autocovariance(k, H, step),
                                   [fbm_covariance(step, step, H)] + direct[:-1], rtol=1e-12)


def _empirical_cov(sampler, grid, H, draws, seed):
    rng = stream(seed, "cov-test")
    paths = np.concatenate([sampler(grid, H, 2, rng)[:, 1:] for _ in range(draws)])
    return paths.T @ paths / paths.shape[0]


class TestSamplers:
    @pytest.mark.parametrize("sampler", [sample_fbm_cholesky, sample_fbm_circulant])
    @pytest.mark.parametrize("H", [0.3, 0.75])
    def test_covariance_matches(self, sampler, H):
        grid = TimeGrid(1.0, 16)
        emp = _empirical_cov(sampler, grid, H, 4000, 1)
        exact = covariance_matrix(grid, H)
        # 8000 coordinate draws: entry SE is at most ~ sqrt(2/8000) of the variance scale
        assert np.max(np.abs(emp - exact)) < 5 * np.sqrt(2 / 8000)

    def test_shape_and_origin(self):
        x = sample_fbm(TimeGrid(1.0, 10), 0.6, 3, stream(0, "s"))
        assert x.shape == (3, 11)
        assert np.all(x[:, 0] == 0)

    def test_circulant_step_scaling(self):
        # Same noise, grid stretched by c -> path scaled by c^H exactly.
        g = TimeGrid(1.0, 32)
        a = sample_fbm_circulant(g, 0.7, 2, stream(4, "c"))
        b = sample_fbm_circulant(g.scaled(3.0), 0.7, 2, stream(4, "c"))
        np.testing.assert_allclose(b, 3.0**0.7 * a, rtol=1e-12, atol=1e-14)

    def test_cholesky_cap(self):
        with pytest.raises(ValueError, match="cap"):
            sample_fbm_cholesky(TimeGrid(1.0, 20), 0.5, 1, 0, cap=10)

    def test_auto_switches_to_circulant(self):
        x = sample_fbm(TimeGrid(1.0, 5000), 0.75, 2, stream(0, "big"))
        assert x.shape == (2, 5001)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            sample_fbm(TimeGrid(1.0, 4), 0.5, 1, 0, method="spectral")

    def test_pair_streams_disjoint(self):
        p = ModelParams(0.75, 2, 1.0, 1.0)
        g = TimeGrid(1.0, 32)
        pair = sample_path_pair(p, g, g, stream(0, "a"), stream(0, "b"))
        assert not np.array_equal(pair.path1, pair.path2)
        np.testing.assert_array_equal(field_increment(pair, 3, 5),
                                      pair.path1[:, 3] - pair.path2[:, 5])
        with pytest.raises(IndexError):
            field_increment(pair, 40, 0)


class TestPathPair:
    def test_validates_shape_and_origin(self):
        p = ModelParams(0.75, 2, 1.0, 1.0)
        g = TimeGrid(1.0, 4)
        with pytest.raises(ValueError, match="shape"):
            FbmPathPair(p, g, g, np.zeros((2, 4)), np.zeros((2, 5)))
        bad = np.zeros((2, 5))
        bad[0, 0] = 1.0
        with pytest.raises(ValueError, match="origin"):
            FbmPathPair(p, g, g, bad, np.zeros((2, 5)))


class TestLND:
    def test_single_segment_is_exact(self):
        out = lnd_diagnostic(0.75, 1, 200, stream(0, "lnd"))
        assert out["ratio_min"] == pytest.approx(1.0, rel=1e-10)
        assert out["ratio_max"] == pytest.approx(1.0, rel=1e-10)

    @pytest.mark.parametrize("H", [0.3, 0.5, 0.75])
    def test_two_sided_bounds(self, H):
        out = lnd_diagnostic(H, 4, 2000, stream(1, "lnd", int(100 * H)))
        assert 0 < out["ratio_min"] <= out["ratio_max"] <= 4.0

    def test_brownian_increments_orthogonal(self):
        out = lnd_diagnostic(0.5, 5, 300, stream(2, "lnd"))
        assert out["ratio_min"] == pytest.approx(1.0, rel=1e-9)
        assert out["ratio_max"] == pytest.approx(1.0, rel=1e-9)

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            lnd_diagnostic(0.5, 0, 10, 0)
        with pytest.raises(ValueError):
            lnd_diagnostic(0.5, 2, 0, 0)
