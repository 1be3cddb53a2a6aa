"""Occupation functionals of the difference field on a path pair.

All functionals are double sums over the product grid of a path pair.  Each
grid cell (tau_{i-1}, tau_i] x (tau_{j-1}, tau_j] is represented by its upper
corner, so the pinned origin never enters a sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionError
from .gaussian_core import FbmPathPair, ModelParams, TimeGrid
from .testfuncs import TestFunction

__all__ = [
    "FunctionalSample",
    "LocalTimeEstimate",
    "KAPPA_DEFAULT",
    "functional_grid",
    "local_time_grid",
    "pair_sum",
    "evaluate_F",
    "evaluate_F_unscaled",
    "estimate_local_time",
    "lln_functional",
    "expected_F_discrete",
]

KAPPA_DEFAULT = 4.0
ROW_BLOCK = 256
_SLACK = 1.0 + 1e-12


@dataclass(frozen=True)
class FunctionalSample:
    value: float
    n: int
    grid_step: float
    f_id: str
    seed_info: tuple = field(default=())


@dataclass(frozen=True)
class LocalTimeEstimate:
    value: float
    epsilon: float
    grid_step: float


def functional_grid(t: float, n: int, kappa: float = KAPPA_DEFAULT) -> TimeGrid:
    """Coarsest grid on [0, t] meeting the step <= 1/(kappa n) rule."""
    return TimeGrid.with_max_step(t, 1.0 / (kappa * n))


def local_time_grid(t: float, eps: float, H: float) -> TimeGrid:
    """Coarsest grid on [0, t] meeting the step <= eps^{1/H}/4 rule."""
    return TimeGrid.with_max_step(t, eps ** (1.0 / H) / 4.0)


def pair_sum(path1: np.ndarray, path2: np.ndarray, profile, scale2: float = 1.0,
             block: int = ROW_BLOCK) -> float:
    """sum_{i, j >= 1} profile(scale2 * |path1[:, i] - path2[:, j]|^2).

    Works in fixed row blocks so the summation order never depends on the
    caller, which keeps results bit-reproducible.
    """
    a_all = path1[:, 1:]
    b = path2[:, 1:]
    n1 = a_all.shape[1]
    partial = []
    for start in range(0, n1, block):
        a = a_all[:, start:start + block]
        r2 = np.subtract.outer(a[0], b[0])
        r2 *= r2
        for k in range(1, a.shape[0]):
            diff = np.subtract.outer(a[k], b[k])
            diff *= diff
            r2 += diff
        if scale2 != 1.0:
            r2 *= scale2
        partial.append(float(np.sum(profile(r2))))
    return math.fsum(partial)


def _check_dims(pair: FbmPathPair, f: TestFunction) -> None:
    if f.d != pair.params.d:
        raise ValueError(f"test function lives in R^{f.d} but paths in R^{pair.params.d}")


def _check_step(pair: FbmPathPair, max_step: float, what: str) -> None:
    step = max(pair.grid1.step, pair.grid2.step)
    if step > max_step * _SLACK:
        raise ResolutionError(
            f"grid step {step:.4g} too coarse for {what}; need <= {max_step:.4g}",
            required_step=max_step)


def evaluate_F(pair: FbmPathPair, f: TestFunction, n: int,
               kappa: float = KAPPA_DEFAULT, seed_info: tuple = ()) -> FunctionalSample:
    """n^{(2+Hd)/2} int_0^{t1} int_0^{t2} f(n^H (B1_u - B2_v)) du dv on the grid."""
    _check_dims(pair, f)
    _check_step(pair, 1.0 / (kappa * n), f"n={n}, kappa={kappa:g}")
    H, d = pair.params.H, pair.params.d
    cell = pair.grid1.step * pair.grid2.step
    total = pair_sum(pair.path1, pair.path2, f.profile, float(n) ** (2 * H))
    value = float(n) ** ((2 + H * d) / 2) * total * cell
    return FunctionalSample(value, n, pair.grid1.step, f.f_id, tuple(seed_info))


def evaluate_F_unscaled(pair: FbmPathPair, f: TestFunction, n: int,
                        kappa: float = KAPPA_DEFAULT, seed_info: tuple = ()) -> FunctionalSample:
    """n^{(Hd-2)/2} int_0^{n t1} int_0^{n t2} f(B1_u - B2_v) du dv.

    ``pair`` must live on the stretched horizons [0, n t1] x [0, n t2].  In
    law this equals ``evaluate_F`` on [0, t1] x [0, t2].
    """
    _check_dims(pair, f)
    _check_step(pair, 1.0 / kappa, f"unscaled route with kappa={kappa:g}")
    H, d = pair.params.H, pair.params.d
    cell = pair.grid1.step * pair.grid2.step
    total = pair_sum(pair.path1, pair.path2, f.profile)
    value = float(n) ** ((H * d - 2) / 2) * total * cell
    return FunctionalSample(value, n, pair.grid1.step, f.f_id, tuple(seed_info))


def estimate_local_time(pair: FbmPathPair, epsilon: float,
                        enforce_resolution: bool = True) -> LocalTimeEstimate:
    """Mollified intersection local time sum p_eps(B1_u - B2_v) du dv.

    p_eps is the centered Gaussian density with standard deviation
    ``epsilon`` in every coordinate.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    params = pair.params
    params.require_local_time()
    if enforce_resolution:
        _check_step(pair, epsilon ** (1.0 / params.H) / 4.0, f"epsilon={epsilon:g}")
    d = params.d
    norm = (2 * np.pi * epsilon * epsilon) ** (-d / 2)

    def kernel(r2):
        return np.exp(-0.5 * r2)

    cell = pair.grid1.step * pair.grid2.step
    total = pair_sum(pair.path1, pair.path2, kernel, 1.0 / (epsilon * epsilon))
    return LocalTimeEstimate(norm * total * cell, epsilon, pair.grid1.step)


def lln_functional(pair: FbmPathPair, g: TestFunction, n: int,
                   kappa: float = KAPPA_DEFAULT) -> float:
    """n^{Hd} sum g(n^H X) du dv, which tends to alpha(t1, t2) * int g."""
    _check_dims(pair, g)
    _check_step(pair, 1.0 / (kappa * n), f"n={n}, kappa={kappa:g}")
    H, d = pair.params.H, pair.params.d
    cell = pair.grid1.step * pair.grid2.step
    total = pair_sum(pair.path1, pair.path2, g.profile, float(n) ** (2 * H))
    return float(n) ** (H * d) * total * cell


def _gaussian_smoothed_profile(f: TestFunction, variances: np.ndarray) -> np.ndarray:
    # E f(sqrt(v) Z) for Z standard normal in R^d, via the radial integral.
    from .testfuncs import sphere_area

    d = f.d
    g, gw = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(0.0, f.support_radius, 9)
    a, b = edges[:-1, None], edges[1:, None]
    r = (0.5 * (b - a) * g + 0.5 * (b + a)).ravel()
    w = (0.5 * (b - a) * gw).ravel() * sphere_area(d) * r ** (d - 1) * f.radial(r)
    v = variances.ravel()[:, None]
    dens = (2 * np.pi * v) ** (-d / 2) * np.exp(-0.5 * r[None, :] ** 2 / v)
    return (dens @ w).reshape(variances.shape)


def expected_F_discrete(params: ModelParams, f: TestFunction, n: int,
                        kappa: float = KAPPA_DEFAULT) -> float:
    """Exact mean of the grid version of F_n (no sampling).

    Each summand is E f(n^H X) with X ~ N(0, (u^{2H} + v^{2H}) I), so the
    mean is a deterministic double sum.  This is the finite-n bias that
    the odd-moment checks see.
    """
    g1 = functional_grid(params.t1, n, kappa)
    g2 = functional_grid(params.t2, n, kappa)
    H, d = params.H, params.d
    s1 = g1.times[1:] ** (2 * H)
    s2 = g2.times[1:] ** (2 * H)
    var = float(n) ** (2 * H) * (s1[:, None] + s2[None, :])
    if f.kind == "gaussian_difference":
        vals = (1 + var) ** (-d / 2) - 2.0 ** (d / 2) * (1 + 2 * var) ** (-d / 2)
    else:
        vals = _gaussian_smoothed_profile(f, var)
    return float(n) ** ((2 + H * d) / 2) * float(vals.sum()) * g1.step * g2.step
