"""Test-function library, admissibility checks and the energy norm.

Oracles: for f = exp(-r^2/2) - 2^{d/2} exp(-r^2),
-int int f(x) f(y) |x-y|^b dx dy has the closed form below (each pair of
Gaussians gives a Gaussian difference vector whose |.|^b moment is known).
"""

import math

import numpy as np
import pytest
from scipy import integrate, special

from fbmclt.errors import MembershipError, UnsupportedTransformError
from fbmclt.testfuncs import (
    beta_norm_direct,
    beta_norm_fourier,
    certify_zero_integral,
    load_tabulated_csv,
    make_gaussian_density,
    make_gaussian_derivative,
    make_gaussian_difference,
    make_tabulated,
    make_test_function,
    sphere_area,
    spherical_mean_power,
    tightness_weight,
    weighted_l1,
    zero_integral_value,
)


def gaussian_difference_norm2(d, b):
    c = (2 * math.pi) ** (d / 2)
    m = 2 ** (b / 2) * math.gamma((d + b) / 2) / math.gamma(d / 2)
    return c * c * m * (-(2 ** (b / 2)) + 2 * 1.5 ** (b / 2) - 1)


def gaussian_derivative_norm2(d, b):
    # C(b, d) |S^{d-1}| (2 pi)^d int k^{3-b} e^{-k^2} dk
    C = -(2.0**b) * math.pi ** (-d / 2) * math.gamma((d + b) / 2) / math.gamma(-b / 2)
    return C * sphere_area(d) * (2 * math.pi) ** d * 0.5 * math.gamma((4 - b) / 2)


# Frozen from the closed form above.
NORM2_GOLDEN = [(2, 2 / 3, 1.310617689714842), (3, 2 / 0.55 - 3, 9.36071201686757),
                (1, 1 / 3, 0.0935602469556654)]


class TestLibrary:
    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("maker", [make_gaussian_difference, make_gaussian_derivative])
    def test_zero_integral(self, maker, d):
        f = maker(d)
        assert abs(certify_zero_integral(f)) < 1e-12

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_density_integrates_to_one(self, d):
        f = make_gaussian_density(d, 0.5)
        assert zero_integral_value(f) == pytest.approx(1.0, rel=1e-10)
        with pytest.raises(MembershipError):
            certify_zero_integral(f)

    def test_evaluation_on_points(self):
        f = make_gaussian_difference(2)
        x = np.array([[0.0, 0.0], [1.0, 0.0]])
        np.testing.assert_allclose(f(x), [1 - 2.0, math.exp(-0.5) - 2 * math.exp(-1)])

    def test_lookup(self):
        assert make_test_function("gaussian_derivative", 3).kind == "gaussian_derivative"
        with pytest.raises(ValueError, match="unknown"):
            make_test_function("sinc", 2)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_fourier_at_zero_vanishes(self, d):
        for f in (make_gaussian_difference(d), make_gaussian_derivative(d)):
            assert f.fourier(np.array(0.0)) == pytest.approx(0.0, abs=1e-15)


class TestSphericalMean:
    @pytest.mark.parametrize("x", [0.0, 0.3, 0.9, 1.0])
    def test_d2_against_angle_quadrature(self, x):
        b = 2 / 3
        val, _ = integrate.quad(lambda t: (1 + x * x - 2 * x * math.cos(t)) ** (b / 2), 0, math.pi)
        assert spherical_mean_power(x, b, 2) == pytest.approx(val / math.pi, rel=1e-10)

    @pytest.mark.parametrize("x", [0.2, 0.7, 1.0])
    def test_d3_closed_form(self, x):
        b = 0.63636
        exact = ((1 + x) ** (b + 2) - (1 - x) ** (b + 2)) / (2 * x * (b + 2))
        assert spherical_mean_power(x, b, 3) == pytest.approx(exact, rel=1e-12)


class TestBetaNorm:
    @pytest.mark.parametrize("d,b,golden", NORM2_GOLDEN)
    def test_golden_values(self, d, b, golden):
        assert gaussian_difference_norm2(d, b) == pytest.approx(golden, rel=1e-13)
        f = make_gaussian_difference(d)
        assert beta_norm_direct(f, b) ** 2 == pytest.approx(golden, rel=1e-10)
        assert beta_norm_fourier(f, b) ** 2 == pytest.approx(golden, rel=1e-10)

    @pytest.mark.parametrize("d,b", [(2, 2 / 3), (3, 2 / 0.55 - 3), (2, 1.5)])
    def test_derivative_family(self, d, b):
        f = make_gaussian_derivative(d)
        exact = gaussian_derivative_norm2(d, b)
        assert beta_norm_direct(f, b) ** 2 == pytest.approx(exact, rel=1e-9)
        assert beta_norm_fourier(f, b) ** 2 == pytest.approx(exact, rel=1e-9)

    def test_homogeneity_under_scaling(self):
        f = make_gaussian_difference(2)
        b = 2 / 3
        assert beta_norm_direct(f.scaled(3.0), b) == pytest.approx(3.0 * beta_norm_direct(f, b),
                                                                    rel=1e-12)

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_dilation_exponent(self, lam):
        # f(lam x) has squared norm lam^{-2d-b} times that of f
        d, b = 2, 2 / 3
        f = make_gaussian_difference(d)
        base = beta_norm_fourier(f, b) ** 2
        assert beta_norm_direct(f.dilated(lam), b) ** 2 == pytest.approx(
            lam ** (-2 * d - b) * base, rel=1e-9)
        assert beta_norm_fourier(f.dilated(lam), b) ** 2 == pytest.approx(
            lam ** (-2 * d - b) * base, rel=1e-9)

    def test_positive_function_is_rejected(self):
        with pytest.raises(MembershipError):
            beta_norm_direct(make_gaussian_density(2), 2 / 3)

    @pytest.mark.parametrize("b", [0.0, -1.0])
    def test_nonpositive_beta(self, b):
        with pytest.raises(ValueError):
            beta_norm_direct(make_gaussian_difference(2), b)

    def test_large_beta_warns_then_rejects(self):
        # above 2 the double integral changes sign
        with pytest.warns(RuntimeWarning), pytest.raises(MembershipError):
            beta_norm_fourier(make_gaussian_difference(2), 2.5)

    def test_fourier_needs_transform(self):
        f = make_gaussian_difference(2)
        from dataclasses import replace
        with pytest.raises(UnsupportedTransformError):
            beta_norm_fourier(replace(f, fourier=None), 2 / 3)


class TestWeights:
    def test_weighted_l1_density(self):
        # E|Z|^b for Z standard normal in R^2 is 2^{b/2} Gamma(1 + b/2)
        f = make_gaussian_density(2)
        assert weighted_l1(f, 0.5) == pytest.approx(2**0.25 * math.gamma(1.25), rel=1e-9)

    def test_tightness_weight_factorizes(self):
        f = make_gaussian_difference(2)
        assert tightness_weight(f, 2 / 3) == pytest.approx(
            weighted_l1(f, 0.0) * weighted_l1(f, 2 / 3), rel=1e-14)

    def test_heavy_tail_detected(self):
        r = np.linspace(0, 1, 5)
        f = make_tabulated(r, np.zeros(5), 2)
        from dataclasses import replace
        heavy = replace(f, profile=lambda r2: (1 + r2) ** -1.2, support_radius=10.0)
        with pytest.raises(MembershipError):
            weighted_l1(heavy, 1.0)


def _balanced_table(d, n=41):
    r = np.linspace(0.0, 8.0, n)
    v = make_gaussian_difference(d).radial(r)
    probe = make_tabulated(r, v, d, tol=np.inf)
    tent = np.interp(r, [0, 0.5, 1.0], [1, 1, 0], right=0.0)
    tent_int = zero_integral_value(make_tabulated(r, tent, d, tol=np.inf))
    return r, v - zero_integral_value(probe) / tent_int * tent


class TestTabulated:
    def test_certificate_enforced(self):
        r = np.linspace(0, 2, 11)
        with pytest.raises(MembershipError):
            make_tabulated(r, np.exp(-r * r), 2)

    def test_bad_tables(self):
        with pytest.raises(ValueError):
            make_tabulated([0.1, 1.0], [0.0, 0.0], 2)
        with pytest.raises(ValueError):
            make_tabulated([0.0, 1.0, 1.0], [0.0, 0.0, 0.0], 2)

    def test_norm_close_to_analytic_family(self):
        d, b = 2, 2 / 3
        r, v = _balanced_table(d)
        f = make_tabulated(r, v, d)
        exact = gaussian_difference_norm2(d, b)
        direct = beta_norm_direct(f, b) ** 2
        assert direct == pytest.approx(beta_norm_fourier(f, b) ** 2, rel=1e-9)
        # 41-point table: linear interpolation error dominates
        assert direct == pytest.approx(exact, rel=3e-2)

    def test_csv_roundtrip(self, tmp_path):
        r, v = _balanced_table(2, 201)
        path = tmp_path / "bump.csv"
        lines = ["# tabulated bump", "dimension,2", "r,value"]
        lines += [f"{float(a)!r},{float(b)!r}" for a, b in zip(r, v)]
        path.write_text("\n".join(lines))
        f = load_tabulated_csv(path)
        assert f.d == 2 and f.f_id == "bump"
        np.testing.assert_allclose(f.radial(r[::10]), v[::10], rtol=1e-14)

    def test_csv_needs_dimension(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("r,value\n0,1\n1,0\n")
        with pytest.raises(ValueError, match="dimension"):
            load_tabulated_csv(path)
