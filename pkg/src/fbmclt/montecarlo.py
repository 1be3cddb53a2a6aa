"""Replicated simulation of F_n, sampling of the mixed-normal limit law and
the moment / KS comparison between the two.

Random streams are keyed ``(master_seed, family, n, replication, path)``.
The F_n family and the limit-law families never share a key, so the two
samples are independent by construction.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import __version__
from ._io import config_hash, write_csv, write_json
from .constants import QuadratureSpec, alpha_moment, compute_D
from .functionals import (
    KAPPA_DEFAULT,
    estimate_local_time,
    evaluate_F,
    evaluate_F_unscaled,
    expected_F_discrete,
    functional_grid,
    local_time_grid,
)
from .gaussian_core import ModelParams, TimeGrid, sample_path_pair
from .rng import stream
from .testfuncs import beta_norm_direct, make_test_function

__all__ = [
    "ExperimentConfig",
    "MomentRow",
    "MomentReport",
    "P_MAX",
    "CSV_COLUMNS",
    "functional_samples",
    "local_time_samples",
    "sample_limit_law",
    "limit_constants",
    "predicted_moments",
    "raw_moments",
    "two_sample_compare",
    "ks_critical_value",
    "run_clt_experiment",
    "resolve_threads",
]

log = logging.getLogger(__name__)

P_MAX = 6
CHUNK = 64
THREADS_ENV = "FBMCLT_THREADS"
CSV_COLUMNS = ("n", "p", "empirical", "se", "predicted", "z", "ks", "ks_critical")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines the numbers in a report.

    ``output_path`` and ``threads`` affect where and how fast results are
    produced, never their values, so they are left out of the hash.
    """

    params: ModelParams
    f_id: str
    n_values: tuple
    replications: int
    master_seed: int
    kappa: float = KAPPA_DEFAULT
    epsilon_schedule: tuple = (0.1, 0.05, 0.025)
    output_path: str = "fbmclt-out"
    threads: int = 1
    limit_draws: Optional[int] = None
    sampler: str = "auto"
    qmc_points: int = 2**16
    qmc_replicates: int = 16

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "epsilon_schedule", tuple(float(e) for e in self.epsilon_schedule))
        if self.replications < 2:
            raise ValueError("replications must be at least 2")
        if not self.n_values:
            raise ValueError("n_values must be nonempty")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])) or self.n_values[0] < 1:
            raise ValueError("n_values must be positive and strictly increasing")
        if self.kappa < 4:
            raise ValueError("kappa must be at least 4")
        if not self.epsilon_schedule or min(self.epsilon_schedule) <= 0:
            raise ValueError("epsilon_schedule must hold positive values")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ValueError("threads must be positive")
        if self.limit_draws is not None and self.limit_draws < 2:
            raise ValueError("limit_draws must be at least 2")

    @property
    def epsilon(self) -> float:
        """Finest mollifier bandwidth, used for the limit-law mixing variable."""
        return min(self.epsilon_schedule)

    @property
    def draws(self) -> int:
        return self.limit_draws if self.limit_draws is not None else self.replications

    def hash_payload(self) -> dict:
        p = self.params
        return {
            "H": p.H, "d": p.d, "t1": p.t1, "t2": p.t2,
            "f_id": self.f_id, "n_values": list(self.n_values),
            "replications": self.replications, "master_seed": self.master_seed,
            "kappa": self.kappa, "epsilon_schedule": list(self.epsilon_schedule),
            "limit_draws": self.draws, "sampler": self.sampler,
            "qmc_points": self.qmc_points, "qmc_replicates": self.qmc_replicates,
        }

    @property
    def hash(self) -> str:
        return config_hash(self.hash_payload())

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def resolve_threads(requested: Optional[int] = None) -> int:
    """Explicit request, else the FBMCLT_THREADS variable, else 1."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def _map_chunks(task, count: int, threads: int) -> np.ndarray:
    # Fixed chunk boundaries; results land by index, so scheduling is irrelevant.
    bounds = [(s, min(s + CHUNK, count)) for s in range(0, count, CHUNK)]
    out = np.empty(count)
    if threads <= 1 or len(bounds) == 1:
        for lo, hi in bounds:
            out[lo:hi] = task(lo, hi)
        return out
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for (lo, hi), vals in zip(bounds, pool.map(lambda b: task(*b), bounds)):
            out[lo:hi] = vals
    return out


def functional_samples(cfg: ExperimentConfig, n: int, route: str = "scaled",
                       count: Optional[int] = None) -> np.ndarray:
    """M independent draws of F_n.

    route "scaled" simulates on [0, t] with the n^H-scaled integrand;
    route "unscaled" simulates on [0, n t] and uses its own stream family.
    """
    p = cfg.params
    p.require_clt()
    f = make_test_function(cfg.f_id, p.d)
    count = cfg.replications if count is None else count
    if route == "scaled":
        g1, g2 = functional_grid(p.t1, n, cfg.kappa), functional_grid(p.t2, n, cfg.kappa)
        pair_params, family, evaluate = p, "F", evaluate_F
    elif route == "unscaled":
        g1 = TimeGrid.with_max_step(n * p.t1, 1.0 / cfg.kappa)
        g2 = TimeGrid.with_max_step(n * p.t2, 1.0 / cfg.kappa)
        pair_params, family, evaluate = p.scaled(n), "F-unscaled", evaluate_F_unscaled
    else:
        raise ValueError(f"unknown route {route!r}")

    def task(lo, hi):
        vals = np.empty(hi - lo)
        for k, rep in enumerate(range(lo, hi)):
            pair = sample_path_pair(pair_params, g1, g2,
                                    stream(cfg.master_seed, family, n, rep, 1),
                                    stream(cfg.master_seed, family, n, rep, 2), cfg.sampler)
            vals[k] = evaluate(pair, f, n, cfg.kappa).value
        return vals

    return _map_chunks(task, count, cfg.threads)


def local_time_samples(cfg: ExperimentConfig, draws: int, epsilon: Optional[float] = None,
                       family: str = "limit-alpha") -> np.ndarray:
    """``draws`` mollified local times alpha_eps(t1, t2) from fresh path pairs."""
    p = cfg.params
    p.require_local_time()
    eps = cfg.epsilon if epsilon is None else float(epsilon)
    g1, g2 = local_time_grid(p.t1, eps, p.H), local_time_grid(p.t2, eps, p.H)

    def task(lo, hi):
        vals = np.empty(hi - lo)
        for k, rep in enumerate(range(lo, hi)):
            pair = sample_path_pair(p, g1, g2,
                                    stream(cfg.master_seed, family, 0, rep, 1),
                                    stream(cfg.master_seed, family, 0, rep, 2), cfg.sampler)
            vals[k] = estimate_local_time(pair, eps).value
        return vals

    return _map_chunks(task, draws, cfg.threads)


def limit_constants(cfg: ExperimentConfig, spec: QuadratureSpec = QuadratureSpec()) -> dict:
    """D, ||f||_beta and the local-time moment predictions for m = 1..3."""
    p = cfg.params
    p.require_clt()
    f = make_test_function(cfg.f_id, p.d)
    moments = [alpha_moment(p, m, spec, rng=stream(cfg.master_seed, "alpha-qmc", m),
                            n_points=cfg.qmc_points, replicates=cfg.qmc_replicates)
               for m in (1, 2, 3)]
    return {"D": compute_D(p.H, p.d, spec), "beta_norm": beta_norm_direct(f, p.beta),
            "alpha_moments": moments}


def sample_limit_law(cfg: ExperimentConfig, draws: Optional[int] = None, constants=None,
                     return_alpha: bool = False):
    """Draws of sqrt(D alpha_eps) ||f|| zeta at the finest scheduled eps.

    alpha_eps and zeta come from disjoint stream families.
    """
    cfg.params.require_clt()
    draws = cfg.draws if draws is None else draws
    c = limit_constants(cfg) if constants is None else constants
    alpha = local_time_samples(cfg, draws)
    zeta = stream(cfg.master_seed, "limit-zeta", 0).standard_normal(draws)
    values = np.sqrt(c["D"] * alpha) * c["beta_norm"] * zeta
    return (values, alpha) if return_alpha else values


def predicted_moments(constants: dict) -> tuple[np.ndarray, np.ndarray]:
    """Limit moments p = 1..6 and their numerical uncertainty.

    E[(sqrt(D alpha) ||f|| zeta)^{2m}] = D^m ||f||^{2m} E[(sqrt(alpha) zeta)^{2m}];
    odd orders are exactly zero.
    """
    value, err = np.zeros(P_MAX), np.zeros(P_MAX)
    scale = constants["D"] * constants["beta_norm"] ** 2
    for mp in constants["alpha_moments"]:
        m = mp.order // 2
        value[mp.order - 1] = scale**m * mp.value
        err[mp.order - 1] = scale**m * mp.error_estimate
    return value, err


def raw_moments(x: np.ndarray, p_max: int = P_MAX) -> tuple[np.ndarray, np.ndarray]:
    """Raw moments E[x^p], p = 1..p_max, with delete-one jackknife SEs."""
    x = np.asarray(x, dtype=float)
    m = x.size
    if m < 2:
        raise ValueError("need at least two samples")
    powers = x[None, :] ** np.arange(1, p_max + 1)[:, None]
    total = powers.sum(axis=1)
    est = total / m
    loo = (total[:, None] - powers) / (m - 1)
    se = np.sqrt((m - 1) / m * ((loo - loo.mean(axis=1, keepdims=True)) ** 2).sum(axis=1))
    return est, se


def ks_critical_value(n: int, m: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value c(alpha) sqrt((n+m)/(nm))."""
    return math.sqrt(-0.5 * math.log(alpha / 2)) * math.sqrt((n + m) / (n * m))


def two_sample_compare(a, b, alpha: float = 0.01) -> dict:
    """Two-sample KS distance, its asymptotic critical value and the verdict."""
    a, b = np.asarray(a, dtype=float).ravel(), np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    ks = float(stats.ks_2samp(a, b).statistic)
    crit = ks_critical_value(a.size, b.size, alpha)
    return {"ks": ks, "critical_1pct": crit, "decision": ks < crit}


@dataclass
class MomentRow:
    n: int
    empirical: np.ndarray
    se: np.ndarray
    predicted: np.ndarray
    predicted_err: np.ndarray
    ks: float
    ks_critical: float
    ks_decision: bool
    exact_mean: float

    @property
    def z(self) -> np.ndarray:
        return (self.empirical - self.predicted) / np.sqrt(self.se**2 + self.predicted_err**2)


@dataclass
class MomentReport:
    """Empirical moments of F_n per n next to the limit-law predictions."""

    config_hash: str
    params: ModelParams
    f_id: str
    replications: int
    limit_draws: int
    epsilon: float
    D: float
    beta_norm: float
    alpha_moments: list
    limit_empirical: np.ndarray
    limit_se: np.ndarray
    rows: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def row(self, n: int) -> MomentRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)

    def csv_rows(self):
        for r in self.rows:
            z = r.z
            for p in range(P_MAX):
                yield (r.n, p + 1, float(r.empirical[p]), float(r.se[p]), float(r.predicted[p]),
                       float(z[p]), r.ks, r.ks_critical)

    def to_dict(self) -> dict:
        p = self.params
        return {
            "version": __version__,
            "params": {"H": p.H, "d": p.d, "t1": p.t1, "t2": p.t2},
            "f_id": self.f_id,
            "replications": self.replications,
            "limit_draws": self.limit_draws,
            "epsilon": self.epsilon,
            "D": self.D,
            "beta_norm": self.beta_norm,
            "alpha_moments": [{"order": a.order, "value": a.value, "method": a.method,
                               "error_estimate": a.error_estimate} for a in self.alpha_moments],
            "limit_sample": {"empirical": self.limit_empirical.tolist(),
                             "se": self.limit_se.tolist()},
            "rows": [{"n": r.n, "empirical": r.empirical.tolist(), "se": r.se.tolist(),
                      "predicted": r.predicted.tolist(), "predicted_err": r.predicted_err.tolist(),
                      "z": r.z.tolist(), "ks": r.ks, "ks_critical": r.ks_critical,
                      "ks_decision": r.ks_decision, "exact_mean": r.exact_mean}
                     for r in self.rows],
        }

    def write(self, out_dir, stem: str = "moments") -> list:
        """Write ``<stem>.csv`` and ``<stem>.json``; timings are kept out of both."""
        csv_path = write_csv(os.path.join(out_dir, stem + ".csv"), self.config_hash,
                             CSV_COLUMNS, self.csv_rows())
        json_path = write_json(os.path.join(out_dir, stem + ".json"), self.config_hash,
                               self.to_dict())
        return [csv_path, json_path]


def run_clt_experiment(cfg: ExperimentConfig, constants=None, limit_sample=None) -> MomentReport:
    """Full moment and KS comparison for every n in ``cfg.n_values``.

    ``constants`` and ``limit_sample`` may be passed in to reuse earlier
    work; they must come from the same config.
    """
    p = cfg.params
    p.require_clt()
    timings = {}
    t0 = time.perf_counter()
    c = limit_constants(cfg) if constants is None else constants
    timings["constants"] = time.perf_counter() - t0
    pred, pred_err = predicted_moments(c)

    t0 = time.perf_counter()
    limit = sample_limit_law(cfg, constants=c) if limit_sample is None else np.asarray(limit_sample)
    timings["limit_sample"] = time.perf_counter() - t0
    lim_est, lim_se = raw_moments(limit)
    log.info("limit sample: %d draws at eps=%g", limit.size, cfg.epsilon)

    f = make_test_function(cfg.f_id, p.d)
    report = MomentReport(cfg.hash, p, cfg.f_id, cfg.replications, int(limit.size), cfg.epsilon,
                          c["D"], c["beta_norm"], list(c["alpha_moments"]), lim_est, lim_se,
                          timings=timings)
    for n in cfg.n_values:
        t0 = time.perf_counter()
        x = functional_samples(cfg, n)
        est, se = raw_moments(x)
        cmp = two_sample_compare(x, limit)
        report.rows.append(MomentRow(n, est, se, pred, pred_err, cmp["ks"], cmp["critical_1pct"],
                                     cmp["decision"], expected_F_discrete(p, f, n, cfg.kappa)))
        timings[f"n={n}"] = time.perf_counter() - t0
        log.info("n=%d: m1=%.4g m2=%.4g ks=%.4g (%.1fs)", n, est[0], est[1], cmp["ks"],
                 timings[f"n={n}"])
    return report


def second_moment_curve(cfg: ExperimentConfig, n_values: Sequence[int]) -> dict:
    """Empirical E[F_n^2] with SE for each n (no limit sample needed)."""
    out = {}
    for n in n_values:
        est, se = raw_moments(functional_samples(cfg, n), 2)
        out[int(n)] = (float(est[1]), float(se[1]))
    return out
