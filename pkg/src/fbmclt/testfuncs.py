"""Radial test functions with zero total integral, and their energy norms.

The energy norm of f at exponent beta is

    ||f||_beta^2 = - int int f(x) f(y) |x - y|^beta dx dy,

which is non-negative for zero-integral f when 0 < beta < 2 because
-|z|^beta is conditionally positive definite there.  Two independent routes
are provided: a direct double integral in spherical coordinates and a
Fourier-side integral against |xi|^(-beta-d).

All shipped functions are radial, so every d-dimensional integral reduces to
one or two radial variables.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from . import _quadrature as quad
from .errors import MembershipError, QuadratureError, UnsupportedTransformError

__all__ = [
    "TestFunction",
    "make_gaussian_difference",
    "make_gaussian_derivative",
    "make_gaussian_density",
    "make_tabulated",
    "load_tabulated_csv",
    "make_test_function",
    "sphere_area",
    "radial_integral",
    "zero_integral_value",
    "certify_zero_integral",
    "weighted_l1",
    "tightness_weight",
    "beta_norm_direct",
    "beta_norm_fourier",
    "riesz_constant",
    "spherical_mean_power",
]

ZERO_INTEGRAL_TOL = 1e-8
K_MAX_STEPS = 20.0


@dataclass(frozen=True)
class TestFunction:
    """A radial function f(x) = profile(|x|^2) on R^d.

    ``fourier`` evaluates the transform int f(x) exp(-i xi.x) dx as a function
    of |xi|^2 when it is known.  ``support_radius`` bounds the region where
    the profile is non-negligible; quadratures truncate there.
    """

    __test__ = False  # not a pytest class

    kind: str
    d: int
    profile: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    fourier: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    support_radius: float = 12.0
    params: dict = field(default_factory=dict, compare=False)
    f_id: str = ""
    zero_integral: bool = True

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"expected points in R^{self.d}, got shape {x.shape}")
        return self.profile(np.sum(x * x, axis=-1))

    def radial(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.profile(r * r)

    def scaled(self, lam: float) -> "TestFunction":
        """x -> lam * f(x)."""
        prof, four = self.profile, self.fourier
        return replace(
            self,
            profile=lambda r2: lam * prof(r2),
            fourier=None if four is None else (lambda k2: lam * four(k2)),
            params={**self.params, "amplitude": lam * self.params.get("amplitude", 1.0)},
            f_id=f"{self.f_id}*{lam:g}",
        )

    def dilated(self, lam: float) -> "TestFunction":
        """x -> f(lam * x)."""
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        prof, four, d = self.profile, self.fourier, self.d
        return replace(
            self,
            profile=lambda r2: prof(lam * lam * r2),
            fourier=None if four is None else (lambda k2: lam**-d * four(k2 / (lam * lam))),
            support_radius=self.support_radius / lam,
            params={**self.params, "dilation": lam * self.params.get("dilation", 1.0)},
            f_id=f"{self.f_id}@{lam:g}",
        )


def make_gaussian_difference(d: int) -> TestFunction:
    """f(x) = exp(-|x|^2/2) - 2^{d/2} exp(-|x|^2).

    Both terms integrate to (2 pi)^{d/2}, so the total integral is exactly 0.
    """
    amp = 2.0 ** (d / 2)
    c = (2 * np.pi) ** (d / 2)

    def profile(r2):
        e = np.exp(-0.5 * r2)
        return e - amp * e * e

    def fourier(k2):
        return c * (np.exp(-0.5 * k2) - np.exp(-0.25 * k2))

    return TestFunction("gaussian_difference", d, profile, fourier, 12.0,
                        {}, f_id="gaussian_difference")


def make_gaussian_derivative(d: int) -> TestFunction:
    """f = -Laplacian of exp(-|x|^2/2), i.e. (d - |x|^2) exp(-|x|^2/2)."""
    c = (2 * np.pi) ** (d / 2)

    def profile(r2):
        return (d - r2) * np.exp(-0.5 * r2)

    def fourier(k2):
        return c * k2 * np.exp(-0.5 * k2)

    return TestFunction("gaussian_derivative", d, profile, fourier, 14.0,
                        {}, f_id="gaussian_derivative")


def make_gaussian_density(d: int, variance: float = 1.0) -> TestFunction:
    """Centered Gaussian density; integrates to 1, so it is *not* in H_0."""
    norm = (2 * np.pi * variance) ** (-d / 2)

    def profile(r2):
        return norm * np.exp(-0.5 * r2 / variance)

    def fourier(k2):
        return np.exp(-0.5 * variance * k2)

    return TestFunction("gaussian_density", d, profile, fourier,
                        12.0 * math.sqrt(variance), {"variance": variance},
                        f_id="gaussian_density", zero_integral=False)


def make_test_function(f_id: str, d: int) -> TestFunction:
    """Library lookup by identifier."""
    makers = {
        "gaussian_difference": make_gaussian_difference,
        "gaussian_derivative": make_gaussian_derivative,
        "gaussian_density": make_gaussian_density,
    }
    if f_id not in makers:
        raise ValueError(f"unknown test function {f_id!r}; choose from {sorted(makers)}")
    return makers[f_id](d)


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def _hankel(radii: np.ndarray, values: np.ndarray, d: int) -> Callable:
    # Transform of the piecewise-linear radial profile, via Gauss-Legendre on
    # each table interval.
    g, gw = np.polynomial.legendre.leggauss(24)
    a, b = radii[:-1, None], radii[1:, None]
    r = (0.5 * (b - a) * g + 0.5 * (b + a)).ravel()
    w = (0.5 * (b - a) * gw).ravel()
    fr = np.interp(r, radii, values)
    nu = d / 2 - 1
    c = (2 * np.pi) ** (d / 2)

    def fourier(k2):
        k = np.sqrt(np.asarray(k2, dtype=float))
        flat = k.ravel()
        out = np.empty_like(flat)
        small = flat < 1e-12
        # k -> 0 limit of k^{-nu} J_nu(k r) is r^nu / (2^nu Gamma(nu + 1)).
        out[small] = c * np.dot(w, fr * r ** (d - 1)) / (2**nu * math.gamma(nu + 1))
        kk = flat[~small, None]
        jn = special.jv(nu, kk * r[None, :])
        out[~small] = c * kk[:, 0] ** (-nu) * ((jn * (fr * r ** (d / 2))[None, :]) @ w)
        return out.reshape(k.shape)

    return fourier


def make_tabulated(radii, values, d: int, f_id: str = "custom_tabulated",
                   tol: float = ZERO_INTEGRAL_TOL) -> TestFunction:
    """Radial profile given on a table, linearly interpolated, zero beyond.

    The zero-integral certificate is enforced at construction.
    """
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if radii.ndim != 1 or radii.shape != values.shape or radii.size < 2:
        raise ValueError("radii and values must be 1-D arrays of equal length >= 2")
    if radii[0] != 0.0 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must start at 0 and increase strictly")
    r_max = float(radii[-1])

    def profile(r2):
        r = np.sqrt(np.asarray(r2, dtype=float))
        return np.interp(r, radii, values, right=0.0)

    f = TestFunction("custom_tabulated", d, profile, _hankel(radii, values, d),
                     r_max, {"radii": radii, "values": values}, f_id=f_id)
    certify_zero_integral(f, tol)
    return f


def load_tabulated_csv(path, tol: float = ZERO_INTEGRAL_TOL) -> TestFunction:
    """Read a radial table from CSV.

    The first data row declares the dimension as ``dimension,<d>``; every
    following row is ``r,value``.  Lines starting with ``#`` are ignored.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            rows.append([cell.strip() for cell in row])
    if not rows or rows[0][0].lower() != "dimension":
        raise ValueError(f"{path}: first row must be 'dimension,<d>'")
    d = int(rows[0][1])
    body = rows[1:]
    if body and body[0][0].lower() in ("r", "radius"):
        body = body[1:]
    table = np.array([[float(r), float(v)] for r, v in body])
    return make_tabulated(table[:, 0], table[:, 1], d, f_id=path.stem, tol=tol)


def radial_integral(g: Callable[[np.ndarray], np.ndarray], d: int, r_max: float,
                    breakpoints=None) -> float:
    """int_{|x| < r_max} g(|x|) dx by adaptive quadrature in the radius."""
    pts = [0.0] + sorted(p for p in (breakpoints if breakpoints is not None else ())
                         if 0.0 < p < r_max) + [r_max]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(lambda r: r ** (d - 1) * g(r), a, b,
                                epsabs=1e-14, epsrel=1e-12, limit=400)
        total += val
    return sphere_area(d) * total


def _breaks(f: TestFunction):
    radii = f.params.get("radii")
    if radii is None:
        return np.linspace(0.0, f.support_radius, 13)[1:-1]
    return radii[1:-1]


def zero_integral_value(f: TestFunction) -> float:
    """int_{R^d} f(x) dx."""
    return radial_integral(lambda r: float(f.radial(r)), f.d, f.support_radius, _breaks(f))


def certify_zero_integral(f: TestFunction, tol: float = ZERO_INTEGRAL_TOL) -> float:
    """Return the total integral, raising MembershipError if it exceeds ``tol``."""
    val = zero_integral_value(f)
    if abs(val) > tol:
        raise MembershipError(f"{f.f_id}: total integral {val:.3e} exceeds {tol:g}")
    return val


def weighted_l1(f: TestFunction, beta: float) -> float:
    """int |f(x)| |x|^beta dx, checked for convergence under domain extension."""
    if beta < 0:
        raise ValueError("weighted_l1 needs beta >= 0")
    g = lambda r: abs(float(f.radial(r))) * r**beta  # noqa: E731
    radius = f.support_radius
    total = radial_integral(g, f.d, radius, _breaks(f))
    increments = []
    for _ in range(4):
        inc = radial_integral(g, f.d, 2 * radius, [radius]) - radial_integral(g, f.d, radius)
        increments.append(inc)
        total += inc
        radius *= 2
    if increments[-1] > 1e-8 * max(total, 1e-300) and increments[-1] >= 0.5 * increments[-2]:
        raise MembershipError(
            f"{f.f_id}: int |f||x|^{beta:g} does not settle under domain extension")
    return total


def tightness_weight(f: TestFunction, beta: float) -> float:
    """int int |f(x) f(y)| |y|^beta dx dy, which factorizes."""
    return weighted_l1(f, 0.0) * weighted_l1(f, beta)


def spherical_mean_power(x, beta: float, d: int) -> np.ndarray:
    """Average of |e_1 - x w|^beta over unit vectors w, for 0 <= x <= 1."""
    x = np.asarray(x, dtype=float)
    if d == 1:
        return 0.5 * ((1 + x) ** beta + (1 - x) ** beta)
    return special.hyp2f1(-beta / 2, -beta / 2 - (d - 2) / 2, d / 2, x * x)


def _check_beta(beta: float) -> None:
    if not beta > 0:
        raise ValueError(f"energy norm needs beta > 0, got {beta}")
    if beta >= 2:
        warnings.warn(f"beta = {beta:g} lies outside (0, 2); the energy norm "
                      "need not be non-negative there", RuntimeWarning, stacklevel=3)


def _finish(integral: float, quad_tol: float, f: TestFunction) -> float:
    # integral approximates int int f f |x-y|^beta, which must be <= 0.
    if integral > quad_tol:
        raise MembershipError(
            f"{f.f_id}: double integral {integral:.3e} is positive; "
            "f is not in the admissible class or quadrature failed")
    return math.sqrt(max(-integral, 0.0))


def beta_norm_direct(f: TestFunction, beta: float, quad_tol: float = 1e-10,
                     max_level: int = 10) -> float:
    """||f||_beta from the double integral in spherical coordinates.

    With x = r w1, y = rho w2 and r < rho, the angular part is
    rho^beta * spherical_mean_power(r/rho), leaving a 2-D integral over
    (r/rho, rho) that is symmetrized to the triangle r < rho.
    """
    _check_beta(beta)
    if "radii" in f.params:
        return _finish(_direct_tabulated(f, beta, max_level), quad_tol, f)
    d = f.d
    R = f.support_radius
    area = sphere_area(d)

    def integrand(x, cx, y, cy):
        rho = R * y
        inner = x ** (d - 1) * f.radial(x * rho) * spherical_mean_power(x, beta, d)
        return inner * (rho ** (2 * d - 1 + beta) * f.radial(rho)) * R

    def at_level(level):
        return 2.0 * area**2 * quad.integrate_2d(integrand, level, (False, True), (True, False))

    try:
        res = quad.refine(at_level, rel_tol=1e-11, abs_tol=1e-15, max_level=max_level)
    except QuadratureError as exc:
        raise QuadratureError(f"beta_norm_direct did not converge for {f.f_id}",
                              exc.history) from exc
    return _finish(res.value, quad_tol, f)


def _direct_tabulated(f: TestFunction, beta: float, max_level: int) -> float:
    # Panels aligned with the table so every kink sits on a panel edge.
    # Cost grows like (table size * order)^2.
    d = f.d
    radii = f.params["radii"]
    a, b = radii[:-1, None], radii[1:, None]
    n_cells = radii.size - 1

    def at_level(level):
        order = 6 + 4 * level
        g, gw = np.polynomial.legendre.leggauss(order)
        r = (0.5 * (b - a) * g + 0.5 * (b + a)).ravel()
        w = (0.5 * (b - a) * gw).ravel() * r ** (d - 1) * f.radial(r)
        cell = np.repeat(np.arange(n_cells), order)
        below = cell[:, None] < cell[None, :]
        x = np.where(below, r[:, None] / r[None, :], 0.0)
        kern = np.where(below, r[None, :] ** beta * spherical_mean_power(x, beta, d), 0.0)
        total = w @ kern @ w
        # Triangles r < rho inside a single cell: r = lo + (rho - lo) s.
        rule = quad.graded_rule(level, left=False, right=True)
        for k in range(n_cells):
            lo = radii[k]
            rho = r[k * order:(k + 1) * order, None]
            wr = w[k * order:(k + 1) * order, None]
            span = rho - lo
            rr = lo + span * rule.x[None, :]
            xx = np.minimum(rr / rho, 1.0)
            inner = rr ** (d - 1) * f.radial(rr) * rho**beta * spherical_mean_power(xx, beta, d)
            total += float(np.sum(wr * span * inner * rule.w[None, :]))
        return 2.0 * sphere_area(d) ** 2 * total

    try:
        res = quad.refine(at_level, rel_tol=1e-10, abs_tol=1e-15, max_level=max_level)
    except QuadratureError as exc:
        raise QuadratureError(f"beta_norm_direct did not converge for {f.f_id}",
                              exc.history) from exc
    return res.value


def riesz_constant(beta: float, d: int) -> float:
    """C with -int int f f |x-y|^beta = C int |f^(xi)|^2 |xi|^{-beta-d} dxi.

    Valid for zero-integral radial f and 0 < beta < 4, beta != 2.
    """
    return -(2.0**beta) * math.pi ** (-d / 2) * math.gamma((d + beta) / 2) / math.gamma(-beta / 2)


def beta_norm_fourier(f: TestFunction, beta: float, quad_tol: float = 1e-10,
                      max_level: int = 10) -> float:
    """||f||_beta from the transform side, C int |f^(k)|^2 k^{-beta-1} dk."""
    _check_beta(beta)
    if f.fourier is None:
        raise UnsupportedTransformError(f"no Fourier transform available for {f.kind}")
    d = f.d
    radii = f.params.get("radii")

    def integrand(q, cq):
        k, jac = quad.semi_infinite(q, cq)
        fh = f.fourier(k * k)
        return fh * fh * k ** (-beta - 1) * jac

    def at_level(level):
        return quad.integrate_1d(integrand, level)

    if radii is not None:
        # A piecewise-linear profile has |f^|^2 ~ k^{-d-3}; past K_MAX_STEPS / dr
        # the tail is below 1e-10 of the total and the Hankel rule stops
        # resolving the oscillation, so the k-integral is truncated there.
        k_max = K_MAX_STEPS / float(np.max(np.diff(radii)))
        n_panels = math.ceil(k_max * radii[-1] / math.pi)
        edges = np.linspace(0.0, k_max, n_panels + 1)

        def at_level(level):  # noqa: F811
            g, gw = np.polynomial.legendre.leggauss(8 + 4 * level)
            lo, hi = edges[:-1, None], edges[1:, None]
            k = (0.5 * (hi - lo) * g + 0.5 * (hi + lo)).ravel()
            w = (0.5 * (hi - lo) * gw).ravel()
            fh = f.fourier(k * k)
            return float(np.dot(w, fh * fh * k ** (-beta - 1)))

    try:
        res = quad.refine(at_level, rel_tol=1e-11, abs_tol=1e-15, max_level=max_level)
    except QuadratureError as exc:
        raise QuadratureError(f"beta_norm_fourier did not converge for {f.f_id}",
                              exc.history) from exc
    norm2 = riesz_constant(beta, d) * sphere_area(d) * res.value
    return _finish(-norm2, quad_tol, f)
