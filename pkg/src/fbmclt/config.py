"""Plain-text ``key = value`` run configuration.

H, d, t1 and t2 have no defaults and must be given explicitly.  ``#``
starts a comment; lists are comma separated.  Example::

    H  = 0.75        # Hurst index
    d  = 2           # spatial dimension
    t1 = 1.0         # time horizon, abstract time units
    t2 = 1.0
    n_values = 16, 64
    replications = 10000
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .constants import SUBSTITUTIONS, QuadratureSpec
from .gaussian_core import ModelParams
from .montecarlo import ExperimentConfig

REQUIRED = ("H", "d", "t1", "t2")


class ConfigError(ValueError):
    """Malformed or invalid configuration; carries one line per problem."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s):
    return tuple(_int(x) for x in s.split(",") if x.strip())


def _pairs(s):
    # "1:1, 1:10" -> ((1.0, 1.0), (1.0, 10.0))
    out = []
    for item in s.split(","):
        if item.strip():
            a, b = item.split(":")
            out.append((float(a), float(b)))
    return tuple(out)


def _str(s):
    return s.strip()


# key -> (parser, default); None default with key in REQUIRED means mandatory.
SCHEMA = {
    "H": (_float, None),
    "d": (_int, None),
    "t1": (_float, None),
    "t2": (_float, None),
    "f_id": (_str, "gaussian_difference"),
    "n_values": (_ints, (16, 32, 64)),
    "replications": (_int, 1000),
    "master_seed": (_int, 0),
    "kappa": (_float, 4.0),
    "epsilon_schedule": (_floats, (0.1, 0.05, 0.025)),
    "limit_draws": (_int, None),
    "sampler": (_str, "auto"),
    "qmc_points": (_int, 2**16),
    "qmc_replicates": (_int, 16),
    "rel_tol": (_float, 1e-10),
    "abs_tol": (_float, 1e-14),
    "max_subdivisions": (_int, 12),
    "substitution": (_str, "power_2H"),
    "beta": (_float, None),
    "trials": (_int, 2000),
    "lnd_segments": (_int, 4),
    "a1_pairs": (_pairs, ((1.0, 1.0), (2.0, 2.0), (1.0, 1e3), (1.0, 1e6))),
    "a2_draws": (_int, 20000),
    "a2_points": (_pairs, ((1.0, 1.0), (4.0, 1.0), (1.0, 5.0))),
}


@dataclass
class RunConfig:
    values: dict
    source: str = ""
    problems: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def params(self) -> ModelParams:
        v = self.values
        return ModelParams(v["H"], v["d"], v["t1"], v["t2"])

    @property
    def quadrature(self) -> QuadratureSpec:
        v = self.values
        return QuadratureSpec(v["rel_tol"], v["abs_tol"], v["max_subdivisions"], v["substitution"])

    def experiment(self, output_path: str = "fbmclt-out", threads: int = 1) -> ExperimentConfig:
        v = self.values
        return ExperimentConfig(self.params, v["f_id"], v["n_values"], v["replications"],
                                v["master_seed"], v["kappa"], v["epsilon_schedule"],
                                output_path, threads, v["limit_draws"], v["sampler"],
                                v["qmc_points"], v["qmc_replicates"])

    def hash_payload(self) -> dict:
        return {k: (list(x) if isinstance(x, tuple) else x) for k, x in sorted(self.values.items())}


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    """Parse and validate; every problem is collected before raising."""
    raw, problems = {}, []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {line!r}")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
        elif key in raw:
            problems.append(f"{source}:{lineno}: duplicate key {key!r}")
        else:
            raw[key] = (lineno, value)

    values = {}
    for key, (parser, default) in SCHEMA.items():
        if key not in raw:
            if key in REQUIRED:
                problems.append(f"{source}: missing required key {key!r}")
            values[key] = default
            continue
        lineno, value = raw[key]
        try:
            values[key] = parser(value)
        except ValueError as exc:
            problems.append(f"{source}:{lineno}: bad value for {key!r}: {exc}")

    if not problems:
        problems += _validate(values, source)
    if problems:
        raise ConfigError(problems)
    return RunConfig(values, source)


def _validate(v: dict, source: str) -> list:
    out = []

    def need(cond, msg):
        if not cond:
            out.append(f"{source}: {msg}")

    need(0 < v["H"] < 1, "H must lie in (0, 1)")
    need(v["d"] >= 1, "d must be a positive integer")
    need(v["t1"] > 0 and v["t2"] > 0, "t1 and t2 must be positive")
    need(v["replications"] >= 2, "replications must be at least 2")
    need(len(v["n_values"]) > 0 and all(n >= 1 for n in v["n_values"])
         and all(b > a for a, b in zip(v["n_values"], v["n_values"][1:])),
         "n_values must be positive and strictly increasing")
    need(v["kappa"] >= 4, "kappa must be at least 4")
    need(len(v["epsilon_schedule"]) > 0 and min(v["epsilon_schedule"], default=0) > 0,
         "epsilon_schedule must hold positive values")
    need(0 <= v["master_seed"] < 2**64, "master_seed must be an unsigned 64-bit integer")
    need(v["limit_draws"] is None or v["limit_draws"] >= 2, "limit_draws must be at least 2")
    need(v["trials"] >= 1, "trials must be at least 1")
    need(1 <= v["lnd_segments"] <= 8, "lnd_segments must lie in [1, 8]")
    need(v["a2_draws"] >= 2, "a2_draws must be at least 2")
    need(v["qmc_points"] >= 2 and v["qmc_replicates"] >= 2, "QMC sizes must be at least 2")
    need(v["rel_tol"] > 0 and v["abs_tol"] > 0, "tolerances must be positive")
    need(v["max_subdivisions"] >= 1, "max_subdivisions must be at least 1")
    need(v["substitution"] in SUBSTITUTIONS, f"substitution must be one of {SUBSTITUTIONS}")
    need(v["sampler"] in ("auto", "cholesky", "circulant"),
         "sampler must be auto, cholesky or circulant")
    need(all(a > 0 and b > 0 for a, b in v["a1_pairs"]), "a1_pairs must be positive")
    need(all(n >= 1 and y > 0 for n, y in v["a2_points"]), "a2_points need n >= 1 and |y| > 0")
    return out


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    return parse_config_text(text, str(path))
