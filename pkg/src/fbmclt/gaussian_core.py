"""Fractional Brownian motion: covariance, exact samplers, two-parameter field.

A d-dimensional fBm is represented as d independent scalar paths on a shared
uniform grid, stored as an array of shape ``(d, n_points + 1)`` whose first
column is the origin.  Two samplers are provided:

* Cholesky factorization of the covariance of ``B_{tau_1}, ..., B_{tau_N}``
  (exact, O(N^3) once per grid, cached).
* Circulant embedding of the fractional Gaussian noise covariance
  (exact in distribution, O(N log N) per path).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import EmbeddingError, RegimeError
from .rng import as_generator

__all__ = [
    "ModelParams",
    "TimeGrid",
    "FbmPathPair",
    "fbm_covariance",
    "covariance_matrix",
    "increment_autocovariance",
    "sample_fbm_cholesky",
    "sample_fbm_circulant",
    "sample_fbm",
    "sample_path_pair",
    "field_increment",
    "lnd_diagnostic",
    "CHOLESKY_CAP",
]

CHOLESKY_CAP = 4096
EIGEN_TOL = 1e-9
MAX_DOUBLINGS = 3


def _check_hurst(H: float) -> None:
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst index must lie in (0, 1), got {H}")


@dataclass(frozen=True)
class ModelParams:
    """Hurst index, dimension and the two time horizons."""

    H: float
    d: int
    t1: float
    t2: float

    def __post_init__(self):
        _check_hurst(self.H)
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        object.__setattr__(self, "d", int(self.d))
        if not (self.t1 > 0 and self.t2 > 0):
            raise ValueError(f"time horizons must be positive, got ({self.t1}, {self.t2})")

    @property
    def hd(self) -> float:
        return self.H * self.d

    @property
    def beta(self) -> float:
        """Exponent 2/H - d of the energy norm entering the limit law."""
        return 2.0 / self.H - self.d

    @property
    def lt_valid(self) -> bool:
        return self.hd < 2.0

    @property
    def clt_valid(self) -> bool:
        return 2.0 / (self.d + 1) < self.H < 2.0 / self.d

    def require_local_time(self) -> None:
        if not self.lt_valid:
            raise RegimeError(
                f"intersection local time requires Hd < 2 (got H*d = {self.hd:g})")

    def require_clt(self) -> None:
        self.require_local_time()
        if not self.clt_valid:
            raise RegimeError(
                f"limit theorem requires 2/(d+1) < H < 2/d "
                f"(got H = {self.H:g}, d = {self.d}: "
                f"interval ({2 / (self.d + 1):.6g}, {2 / self.d:.6g}))")

    def scaled(self, c: float) -> "ModelParams":
        return ModelParams(self.H, self.d, c * self.t1, c * self.t2)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = tau_0 < ... < tau_N = t_max."""

    t_max: float
    n_points: int

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if int(self.n_points) != self.n_points or self.n_points < 1:
            raise ValueError(f"n_points must be a positive integer, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))

    @classmethod
    def with_max_step(cls, t_max: float, max_step: float) -> "TimeGrid":
        """Coarsest uniform grid on [0, t_max] whose step is at most ``max_step``."""
        n = math.ceil(t_max / max_step * (1 - 1e-12))
        return cls(t_max, max(n, 1))

    @property
    def step(self) -> float:
        return self.t_max / self.n_points

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.n_points + 1, dtype=float)

    def scaled(self, c: float) -> "TimeGrid":
        return TimeGrid(c * self.t_max, self.n_points)


@dataclass(frozen=True)
class FbmPathPair:
    """Two independent d-dimensional fBm paths, one per time grid."""

    params: ModelParams
    grid1: TimeGrid
    grid2: TimeGrid
    path1: np.ndarray
    path2: np.ndarray

    def __post_init__(self):
        d = self.params.d
        for path, grid in ((self.path1, self.grid1), (self.path2, self.grid2)):
            if path.shape != (d, grid.n_points + 1):
                raise ValueError(f"path shape {path.shape} does not match "
                                 f"(d, n_points + 1) = {(d, grid.n_points + 1)}")
            if np.any(path[:, 0] != 0.0):
                raise ValueError("fBm paths must start at the origin")


def fbm_covariance(s, t, H: float):
    """E[B_s B_t] = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2 for scalar fBm.

    Accepts scalars or broadcastable arrays.
    """
    _check_hurst(H)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("fbm_covariance is defined for non-negative times only")
    h2 = 2.0 * H
    out = 0.5 * (t**h2 + s**h2 - np.abs(t - s) ** h2)
    return float(out) if out.ndim == 0 else out


def _positive_times(grid_or_times) -> np.ndarray:
    if isinstance(grid_or_times, TimeGrid):
        return grid_or_times.times[1:]
    times = np.asarray(grid_or_times, dtype=float).ravel()
    times = times[times > 0]
    if times.size == 0:
        raise ValueError("covariance_matrix needs at least one positive time")
    return times


def covariance_matrix(grid, H: float) -> np.ndarray:
    """Covariance of the path at the positive times of ``grid``.

    ``grid`` may be a TimeGrid or an array of times; zero times are dropped
    because the process is pinned there.
    """
    t = _positive_times(grid)
    return fbm_covariance(t[:, None], t[None, :], H)


def increment_autocovariance(k, H: float, step: float = 1.0) -> np.ndarray:
    """Autocovariance at lag ``k`` of increments over a grid with ``step``."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * H
    return 0.5 * step**h2 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


@lru_cache(maxsize=32)
def _cholesky_factor(t_max: float, n_points: int, H: float) -> np.ndarray:
    cov = covariance_matrix(TimeGrid(t_max, n_points), H)
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - valid inputs never get here
        raise RuntimeError(
            f"covariance matrix not positive definite (H={H}, n_points={n_points})") from exc
    factor.setflags(write=False)
    return factor


def sample_fbm_cholesky(grid: TimeGrid, H: float, d: int, rng,
                        cap: int = CHOLESKY_CAP) -> np.ndarray:
    """Exact draw of d independent fBm coordinates on ``grid``.

    Returns an array of shape ``(d, n_points + 1)`` with a zero first column.
    """
    _check_hurst(H)
    if grid.n_points > cap:
        raise ValueError(f"n_points={grid.n_points} exceeds the Cholesky cap {cap}; "
                         "use sample_fbm_circulant")
    rng = as_generator(rng)
    factor = _cholesky_factor(grid.t_max, grid.n_points, H)
    z = rng.standard_normal((grid.n_points, d))
    out = np.zeros((d, grid.n_points + 1))
    out[:, 1:] = (factor @ z).T
    return out


@lru_cache(maxsize=32)
def _circulant_sqrt_eigs(n_points: int, H: float) -> np.ndarray:
    # Unit-step embedding; the grid step enters as a factor step**H later.
    size = 1 << max(1, (2 * n_points - 1).bit_length())
    for _ in range(MAX_DOUBLINGS + 1):
        half = size // 2
        lags = np.arange(half + 1)
        gamma = increment_autocovariance(lags, H)
        row = np.concatenate([gamma, gamma[-2:0:-1]])
        eigs = np.fft.fft(row).real
        if eigs.min() >= -EIGEN_TOL * eigs.max():
            root = np.sqrt(np.clip(eigs, 0.0, None) / size)
            root.setflags(write=False)
            return root
        size *= 2
    raise EmbeddingError(
        f"circulant embedding has negative eigenvalues after {MAX_DOUBLINGS} doublings "
        f"(H={H}, n_points={n_points})")


def sample_fbm_circulant(grid: TimeGrid, H: float, d: int, rng) -> np.ndarray:
    """fBm via circulant embedding of fractional Gaussian noise.

    Each complex FFT yields two independent exact noise sequences (real and
    imaginary parts), so ceil(d/2) transforms cover all coordinates.
    """
    _check_hurst(H)
    rng = as_generator(rng)
    root = _circulant_sqrt_eigs(grid.n_points, H)
    size = root.size
    n_fft = (d + 1) // 2
    z = rng.standard_normal((n_fft, 2, size))
    w = root * (z[:, 0] + 1j * z[:, 1])
    y = np.fft.fft(w, axis=-1)[:, : grid.n_points]
    noise = np.concatenate([y.real, y.imag])[:d] * grid.step**H
    out = np.zeros((d, grid.n_points + 1))
    np.cumsum(noise, axis=1, out=out[:, 1:])
    return out


def sample_fbm(grid: TimeGrid, H: float, d: int, rng, method: str = "auto") -> np.ndarray:
    """Dispatch to the Cholesky sampler up to CHOLESKY_CAP points, circulant above."""
    if method == "auto":
        method = "cholesky" if grid.n_points <= CHOLESKY_CAP else "circulant"
    if method == "cholesky":
        return sample_fbm_cholesky(grid, H, d, rng)
    if method == "circulant":
        return sample_fbm_circulant(grid, H, d, rng)
    raise ValueError(f"unknown sampler {method!r}")


def sample_path_pair(params: ModelParams, grid1: TimeGrid, grid2: TimeGrid,
                     rng1, rng2, method: str = "auto") -> FbmPathPair:
    """Draw the two independent fBms from two separate streams."""
    p1 = sample_fbm(grid1, params.H, params.d, rng1, method)
    p2 = sample_fbm(grid2, params.H, params.d, rng2, method)
    return FbmPathPair(params, grid1, grid2, p1, p2)


def field_increment(pair: FbmPathPair, i: int, j: int) -> np.ndarray:
    """X(tau_i, tau_j) = B^1(tau_i) - B^2(tau_j) as a d-vector."""
    n1, n2 = pair.path1.shape[1], pair.path2.shape[1]
    if not (0 <= i < n1 and 0 <= j < n2):
        raise IndexError(f"grid indices ({i}, {j}) out of range ({n1}, {n2})")
    return pair.path1[:, i] - pair.path2[:, j]


def _increment_covariance(s: np.ndarray, H: float) -> np.ndarray:
    # s has shape (trials, n+1) with s[:, 0] = 0; returns (trials, n, n).
    r = fbm_covariance(s[:, :, None], s[:, None, :], H)
    return r[:, 1:, 1:] - r[:, 1:, :-1] - r[:, :-1, 1:] + r[:, :-1, :-1]


def lnd_diagnostic(H: float, n_segments: int, n_trials: int, rng, d: int = 2,
                   min_gap: float = 1e-9) -> dict:
    """Empirical range of Var(sum x_i . increment_i) / sum |x_i|^2 gap_i^{2H}.

    Times 0 < s_1 < ... < s_n <= 1 are uniform order statistics and the x_i
    are uniform in the unit ball of R^d.  The variance is evaluated exactly
    from the increment covariance; no paths are sampled.  Configurations
    with a gap below ``min_gap`` are redrawn.
    """
    _check_hurst(H)
    if not 1 <= n_segments <= 8:
        raise ValueError("n_segments must lie in [1, 8]")
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    rng = as_generator(rng)

    s = np.empty((0, n_segments + 1))
    while s.shape[0] < n_trials:
        need = n_trials - s.shape[0]
        draw = np.sort(rng.uniform(0.0, 1.0, (need, n_segments)), axis=1)
        draw = np.concatenate([np.zeros((need, 1)), draw], axis=1)
        ok = np.diff(draw, axis=1).min(axis=1) > min_gap
        s = np.concatenate([s, draw[ok]])

    direction = rng.standard_normal((n_trials, n_segments, d))
    direction /= np.linalg.norm(direction, axis=2, keepdims=True)
    radius = rng.uniform(0.0, 1.0, (n_trials, n_segments, 1)) ** (1.0 / d)
    x = direction * radius

    cov = _increment_covariance(s, H)
    var = np.einsum("tik,tij,tjk->t", x, cov, x)
    gaps = np.diff(s, axis=1)
    denom = np.einsum("tik,tik,ti->t", x, x, gaps ** (2 * H))
    ratio = var / denom
    return {"ratio_min": float(ratio.min()), "ratio_max": float(ratio.max())}
