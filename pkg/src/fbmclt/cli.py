"""``fbmclt`` command line.

Subcommands: constants, simulate, limit-sample, compare, verify.

Exit codes: 0 success, 1 bad config or arguments, 2 regime violation,
3 a verification check failed.  Statistical outcomes of ``simulate`` never
change the exit code.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._io import config_hash, write_csv, write_json
from .config import ConfigError, RunConfig, load_config
from .constants import compute_D, compute_D_qmc, d_constant, verify_lemma_a1, verify_lemma_a2
from .errors import FbmCltError, RegimeError
from .gaussian_core import lnd_diagnostic
from .montecarlo import (
    limit_constants,
    resolve_threads,
    run_clt_experiment,
    sample_limit_law,
    two_sample_compare,
)
from .rng import stream
from .testfuncs import beta_norm_direct, beta_norm_fourier, make_test_function

log = logging.getLogger("fbmclt")

EXIT_OK, EXIT_CONFIG, EXIT_REGIME, EXIT_VERIFY = 0, 1, 2, 3

# Pass thresholds used by ``verify``.
A1_SCALE_TOL = 1e-6
A1_SATURATION_TOL = 0.05
A2_SIGMAS = 3.0
BETA_NORM_TOL = 1e-6
D_QMC_SIGMAS = 4.0


class _Run:
    """Collects outputs and timings for the manifest."""

    def __init__(self, name: str, out_dir: Path, cfg_hash: str):
        self.name, self.out_dir, self.hash = name, out_dir, cfg_hash
        self.created_out = not out_dir.exists()
        out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs, self.timings = [], {}
        self.start = time.perf_counter()

    def add(self, *paths):
        self.outputs += [Path(p) for p in paths]

    def manifest(self) -> Path:
        self.timings[self.name] = time.perf_counter() - self.start
        path = self.out_dir / f"manifest-{self.name}.json"
        payload = {
            "tool_version": __version__,
            "config_hash": self.hash,
            "subcommand": self.name,
            "platform": {"python": platform.python_version(), "system": platform.platform(),
                         "machine": platform.machine(), "numpy": np.__version__,
                         "scipy": scipy.__version__},
            "wall_clock": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "timings": self.timings,
            "output_dir_created": self.created_out,
            "outputs": [str(p) for p in self.outputs],
        }
        return write_json(path, self.hash, payload)


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError([f"--seed must be an unsigned 64-bit integer, got {args.seed}"])
        cfg.values["master_seed"] = args.seed
    return cfg


def _threads(args) -> int:
    return resolve_threads(args.threads)


def cmd_constants(args) -> int:
    cfg = _load(args)
    p = cfg.params
    p.require_clt()
    spec = cfg.quadrature
    exp = cfg.experiment(str(args.out), _threads(args))
    run = _Run("constants", Path(args.out), config_hash(cfg.hash_payload()))
    c = limit_constants(exp, spec)
    mesh = d_constant(p.H, p.d, spec)
    payload = {
        "H": p.H, "d": p.d, "t1": p.t1, "t2": p.t2, "f_id": exp.f_id,
        "D": c["D"], "beta": p.beta, "beta_norm": c["beta_norm"],
        "alpha_moments": [{"m": a.order // 2, "value": a.value, "method": a.method,
                           "error_estimate": a.error_estimate} for a in c["alpha_moments"]],
        "tolerances": {"rel_tol": spec.rel_tol, "abs_tol": spec.abs_tol,
                       "max_subdivisions": spec.max_subdivisions,
                       "substitution": spec.substitution},
        "mesh": {"D_history": list(mesh.history), "D_error_estimate": mesh.error_estimate},
    }
    run.add(write_json(run.out_dir / "constants.json", run.hash, payload))
    print(json.dumps({"D": c["D"], "beta_norm": c["beta_norm"],
                      "alpha_m1": c["alpha_moments"][0].value}))
    run.manifest()
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    cfg.params.require_clt()
    exp = cfg.experiment(str(args.out), _threads(args))
    run = _Run("simulate", Path(args.out), exp.hash)
    report = run_clt_experiment(exp)
    run.add(*report.write(run.out_dir))
    run.timings.update(report.timings)
    for r in report.rows:
        print(f"n={r.n}: m1={r.empirical[0]:.4g} (z={r.z[0]:+.2f}) "
              f"m2={r.empirical[1]:.4g} (pred {r.predicted[1]:.4g}, z={r.z[1]:+.2f}) "
              f"ks={r.ks:.4f} crit={r.ks_critical:.4f}")
    run.manifest()
    return EXIT_OK


def cmd_limit_sample(args) -> int:
    cfg = _load(args)
    cfg.params.require_clt()
    exp = cfg.experiment(str(args.out), _threads(args))
    run = _Run("limit-sample", Path(args.out), exp.hash)
    values, alpha = sample_limit_law(exp, args.draws, return_alpha=True)
    rows = zip(range(values.size), map(float, alpha), map(float, values))
    run.add(write_csv(run.out_dir / "limit_sample.csv", run.hash,
                      ("index", "alpha_eps", "value"), rows))
    run.manifest()
    return EXIT_OK


def _read_column(path: Path) -> np.ndarray:
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines()
             if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ConfigError([f"{path}: no data"])
    head = lines[0].split(",")
    col = head.index("value") if "value" in head else len(head) - 1
    start = 1 if any(c.strip() and not _is_number(c) for c in head) else 0
    try:
        return np.array([float(ln.split(",")[col]) for ln in lines[start:]])
    except (ValueError, IndexError) as exc:
        raise ConfigError([f"{path}: unreadable sample column: {exc}"]) from exc


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def cmd_compare(args) -> int:
    a, b = _read_column(Path(args.a)), _read_column(Path(args.b))
    if a.size == 0 or b.size == 0:
        raise ConfigError(["both samples must be nonempty"])
    res = two_sample_compare(a, b)
    cfg_hash = config_hash({"a": str(args.a), "b": str(args.b)})
    run = _Run("compare", Path(args.out), cfg_hash)
    payload = {"a": str(args.a), "b": str(args.b), "size_a": int(a.size),
               "size_b": int(b.size), **res}
    run.add(write_json(run.out_dir / "compare.json", cfg_hash, payload))
    print(json.dumps(res))
    run.manifest()
    return EXIT_OK


def _check(name: str, passed: bool, detail: dict) -> dict:
    return {"check": name, "passed": bool(passed), **detail}


def _run_checks(cfg: RunConfig) -> list:
    p = cfg.params
    spec = cfg.quadrature
    seed = cfg["master_seed"]
    checks = []

    # Rectangle bound: exact scaling on the diagonal and saturation in b.
    pairs = list(cfg["a1_pairs"])
    res = verify_lemma_a1(p.H, p.d, pairs, spec)
    r = dict(zip(map(tuple, pairs), res["ratios"]))
    diag = [v for (a, b), v in r.items() if a == b]
    scale_ok = len(diag) < 2 or (max(diag) - min(diag)) <= A1_SCALE_TOL * max(diag)
    checks.append(_check("lemma_a1_diagonal_scaling", scale_ok,
                         {"ratios": res["ratios"], "tolerance": A1_SCALE_TOL}))
    far = sorted((b / a, v) for (a, b), v in r.items() if b / a >= 1e3)
    sat_ok = len(far) < 2 or abs(far[-1][1] - far[0][1]) <= A1_SATURATION_TOL * far[0][1]
    checks.append(_check("lemma_a1_saturation", sat_ok and math.isfinite(res["max_ratio"]),
                         {"max_ratio": res["max_ratio"], "tolerance": A1_SATURATION_TOL}))

    # Oscillatory bound: ratio invariant across (n, |y|).
    a2 = []
    for k, (n, ynorm) in enumerate(cfg["a2_points"]):
        y = np.zeros(p.d)
        y[0] = ynorm
        out = verify_lemma_a2(p.H, p.d, y, int(n), cfg["a2_draws"], stream(seed, "verify-a2", k))
        a2.append((int(n), ynorm, out["ratio"], out["se"]))
    worst = max(abs(r1 - r2) / math.hypot(s1, s2)
                for i, (_, _, r1, s1) in enumerate(a2) for (_, _, r2, s2) in a2[i + 1:])
    checks.append(_check("lemma_a2_invariance", worst <= A2_SIGMAS,
                         {"points": [list(x) for x in a2], "max_sigmas": worst,
                          "tolerance_sigmas": A2_SIGMAS}))

    # Local nondeterminism: exact variance ratios bounded away from 0 and by n.
    lnd = lnd_diagnostic(p.H, cfg["lnd_segments"], cfg["trials"], stream(seed, "verify-lnd"),
                         d=p.d)
    lnd_ok = lnd["ratio_min"] > 0 and lnd["ratio_max"] <= cfg["lnd_segments"] * (1 + 1e-9)
    checks.append(_check("lnd_bounds", lnd_ok, {"ratio_min": lnd["ratio_min"],
                                                "ratio_max": lnd["ratio_max"],
                                                "upper_bound": cfg["lnd_segments"]}))

    # Energy norm: two independent evaluations.
    beta = p.beta if cfg["beta"] is None else cfg["beta"]
    f = make_test_function(cfg["f_id"], p.d)
    try:
        direct, fourier = beta_norm_direct(f, beta), beta_norm_fourier(f, beta)
        rel = abs(direct - fourier) / max(abs(fourier), 1e-300)
        checks.append(_check("beta_norm_cross", rel <= BETA_NORM_TOL,
                             {"beta": beta, "direct": direct, "fourier": fourier,
                              "relative_difference": rel, "tolerance": BETA_NORM_TOL}))
    except (ValueError, ArithmeticError, FbmCltError) as exc:
        checks.append(_check("beta_norm_cross", False, {"beta": beta, "error": str(exc)}))

    # Limit constant: quadrature against randomized QMC.
    d_quad = compute_D(p.H, p.d, spec)
    d_qmc, d_se = compute_D_qmc(p.H, p.d, n_points=2**16, replicates=8,
                                rng=stream(seed, "verify-dqmc"))
    checks.append(_check("D_quadrature_vs_qmc", abs(d_quad - d_qmc) <= D_QMC_SIGMAS * d_se,
                         {"quadrature": d_quad, "qmc": d_qmc, "qmc_se": d_se,
                          "tolerance_sigmas": D_QMC_SIGMAS}))
    return checks


def cmd_verify(args) -> int:
    cfg = _load(args)
    cfg.params.require_clt()
    run = _Run("verify", Path(args.out), config_hash(cfg.hash_payload()))
    checks = _run_checks(cfg)
    ok = all(c["passed"] for c in checks)
    run.add(write_json(run.out_dir / "verify.json", run.hash,
                       {"passed": ok, "checks": checks}))
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']}")
    run.manifest()
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="override master_seed")
    common.add_argument("--threads", type=int, help="worker threads (else $FBMCLT_THREADS)")
    common.add_argument("--out", default="fbmclt-out", type=Path, help="output directory")

    parser = argparse.ArgumentParser(prog="fbmclt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fbmclt {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="limit constants as JSON"
                   ).set_defaults(func=cmd_constants)
    sub.add_parser("simulate", parents=[common], help="moment report for F_n"
                   ).set_defaults(func=cmd_simulate)
    ls = sub.add_parser("limit-sample", parents=[common], help="draws from the limit law")
    ls.add_argument("--draws", type=int, help="number of draws (default: limit_draws)")
    ls.set_defaults(func=cmd_limit_sample)
    cmp = sub.add_parser("compare", help="two-sample KS comparison of CSV samples")
    cmp.add_argument("a", help="CSV with a 'value' column (or a single column)")
    cmp.add_argument("b")
    cmp.add_argument("--out", default="fbmclt-out", type=Path)
    cmp.set_defaults(func=cmd_compare)
    sub.add_parser("verify", parents=[common], help="integral bounds and cross-checks"
                   ).set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if getattr(args, "draws", None) is not None and args.draws < 2:
            raise ConfigError(["--draws must be at least 2"])
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"fbmclt: config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"fbmclt: regime violation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (ValueError, OSError) as exc:
        print(f"fbmclt: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
