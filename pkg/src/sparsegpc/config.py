"""Experiment configuration: a flat-table TOML file with field-precise errors."""
from __future__ import annotations

import hashlib
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .measures import MeasureSpec
from .multiindex import WeightFamily
from .pde import ParametricProblem


@dataclass
class MeasureConfig:
    kind: str = "gamma"
    shape: float = 2.0


@dataclass
class ProblemConfig:
    n_elems: int = 128
    f: float = 1.0
    c: float = 0.05
    tau: float = 2.0
    d: int = 4
    allow_large_b: bool = False


@dataclass
class WeightsConfig:
    mode: str = "b"
    p: float = 0.5
    r: int | None = None
    theta: float = 0.0
    lam: float = 0.0
    rho: list | None = None      # None: rho_j = kappa / (d b_j)
    kappa: float = 1.0
    b: list | None = None        # None: b_j = ||psi_j||_inf
    C0: float = 1.0
    C1: float = 1.0
    C2: float = 1.0


@dataclass
class StudyConfig:
    xi: list | None = None
    xi0: float = 16.0
    n_xi: int = 5
    n_ladder: list = field(default_factory=lambda: [50, 100, 200, 400, 800])
    rule_constant: float = 10.0
    mc_samples: int = 400
    seed: int = 0


@dataclass
class OracleConfig:
    level: int = 8
    node_cap: int = 10**7


@dataclass
class OutputConfig:
    dir: str = "results"
    cache_dir: str = ".sparsegpc-cache"


@dataclass
class ExperimentConfig:
    measure: MeasureConfig = field(default_factory=MeasureConfig)
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    weights: WeightsConfig = field(default_factory=WeightsConfig)
    study: StudyConfig = field(default_factory=StudyConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    source: str = ""

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("source")
        return out

    def digest(self) -> str:
        """Hash of everything that affects results (output paths excluded)."""
        data = self.to_dict()
        data.pop("output")
        blob = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def spec(self) -> MeasureSpec:
        m = self.measure
        return MeasureSpec.gamma(m.shape) if m.kind == "gamma" else MeasureSpec.gaussian()

    def problem_obj(self) -> ParametricProblem:
        p = self.problem
        return ParametricProblem.sine_family(p.d, p.c, p.tau, p.n_elems, self.spec, p.f,
                                             allow_large_b=p.allow_large_b)

    def b_values(self) -> list:
        w, p = self.weights, self.problem
        if w.b is not None:
            return list(w.b)
        return [abs(p.c) * j ** (-p.tau) for j in range(1, p.d + 1)]

    def rho_values(self) -> list:
        w = self.weights
        if w.rho is not None:
            return list(w.rho)
        b = self.b_values()
        return [w.kappa / (len(b) * x) if x > 0 else 1e6 for x in b]

    def weight_family(self) -> WeightFamily:
        w = self.weights
        kw = dict(p=w.p, r=w.r, theta=w.theta, lam=w.lam, C0=w.C0, C1=w.C1, C2=w.C2)
        if w.mode == "rho":
            return WeightFamily("rho", rho=tuple(self.rho_values()), **kw)
        return WeightFamily("b", b=tuple(self.b_values()), **kw)

    def xi_ladder(self) -> list:
        s = self.study
        if s.xi is not None:
            return [float(x) for x in s.xi]
        return [s.xi0 * 2.0 ** i for i in range(s.n_xi)]


_TABLES = {
    "measure": MeasureConfig, "problem": ProblemConfig, "weights": WeightsConfig,
    "study": StudyConfig, "oracle": OracleConfig, "output": OutputConfig,
}


def _line_of(text: str, table: str, key: str | None) -> int | None:
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[\s*([A-Za-z0-9_.]+)\s*\]", line)
        if m:
            current = m.group(1)
            if key is None and current == table:
                return no
            continue
        if current == table and key is not None and re.match(rf"^{re.escape(key)}\s*=", line):
            return no
    return None


def _coerce(value, default, name):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise TypeError(f"{name} must be a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"{name} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"{name} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise TypeError(f"{name} must be a string")
        return value
    return value


def from_dict(data: dict, text: str = "") -> ExperimentConfig:
    cfg = ExperimentConfig(source=text)
    for table, values in data.items():
        if table not in _TABLES:
            raise ConfigError(f"unknown table [{table}]", table, _line_of(text, table, None))
        if not isinstance(values, dict):
            raise ConfigError("expected a table", table)
        target = getattr(cfg, table)
        for key, value in values.items():
            name = f"{table}.{key}"
            if not hasattr(target, key):
                raise ConfigError("unknown key", name, _line_of(text, table, key))
            try:
                setattr(target, key, _coerce(value, getattr(target, key), name))
            except TypeError as exc:
                raise ConfigError(str(exc), name, _line_of(text, table, key)) from None
    _check(cfg, text)
    return cfg


def _fail(cfg_text, table, key, msg):
    raise ConfigError(msg, f"{table}.{key}", _line_of(cfg_text, table, key))


def _check(cfg: ExperimentConfig, text: str) -> None:
    m, p, w, s, o = cfg.measure, cfg.problem, cfg.weights, cfg.study, cfg.oracle
    if m.kind not in ("gamma", "gaussian"):
        _fail(text, "measure", "kind", f"unknown measure kind {m.kind!r}")
    if m.kind == "gamma" and not m.shape > 0:
        _fail(text, "measure", "shape", "gamma shape must be positive")
    if p.n_elems < 2:
        _fail(text, "problem", "n_elems", "need at least two elements")
    if p.d < 1:
        _fail(text, "problem", "d", "truncation dimension must be >= 1")
    if not p.tau > 0:
        _fail(text, "problem", "tau", "tau must be positive")
    if not math.isfinite(p.c):
        _fail(text, "problem", "c", "c must be finite")
    if w.mode not in ("rho", "b"):
        _fail(text, "weights", "mode", "mode must be 'rho' or 'b'")
    if not 0 < w.p < 2:
        _fail(text, "weights", "p", "p must lie in (0, 2)")
    if w.theta < 0:
        _fail(text, "weights", "theta", "theta must be nonnegative")
    if w.lam < 0:
        _fail(text, "weights", "lam", "lambda must be nonnegative")
    if w.r is not None and (not isinstance(w.r, int) or w.r < 1):
        _fail(text, "weights", "r", "r must be a positive integer")
    for key in ("rho", "b"):
        vals = getattr(w, key)
        if vals is not None:
            if not isinstance(vals, list) or len(vals) != p.d:
                _fail(text, "weights", key, f"{key} must be a list of length d = {p.d}")
            if any(not isinstance(x, (int, float)) or x < 0 for x in vals):
                _fail(text, "weights", key, f"{key} entries must be nonnegative numbers")
            if key == "rho" and any(x == 0 for x in vals):
                _fail(text, "weights", key, "rho entries must be positive")
    if w.mode == "b" and any(x == 0 for x in cfg.b_values()):
        _fail(text, "weights", "b", "b-mode weights need every b_j > 0 (set c != 0)")
    if not w.kappa > 0:
        _fail(text, "weights", "kappa", "kappa must be positive")
    try:
        cfg.weight_family()
    except ValueError as exc:
        _fail(text, "weights", "r", str(exc))
    if s.xi is not None:
        if not isinstance(s.xi, list) or not s.xi or any(
                not isinstance(x, (int, float)) or x <= 1 for x in s.xi):
            _fail(text, "study", "xi", "xi must be a nonempty list of numbers > 1")
    if not s.xi0 > 1:
        _fail(text, "study", "xi0", "xi0 must exceed 1")
    if s.n_xi < 1:
        _fail(text, "study", "n_xi", "n_xi must be >= 1")
    if not isinstance(s.n_ladder, list) or any(
            not isinstance(n, int) or isinstance(n, bool) or n < 1 for n in s.n_ladder):
        _fail(text, "study", "n_ladder", "n_ladder must be a list of positive integers")
    if not s.rule_constant > 0:
        _fail(text, "study", "rule_constant", "rule_constant must be positive")
    if s.mc_samples < 2:
        _fail(text, "study", "mc_samples", "need at least 2 Monte Carlo samples")
    if o.level < 1:
        _fail(text, "oracle", "level", "level must be >= 1")
    if o.node_cap < 1:
        _fail(text, "oracle", "node_cap", "node_cap must be positive")


def loads(text: str) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        m = re.search(r"line (\d+)", str(exc))
        if line is None and m:
            line = int(m.group(1))
        raise ConfigError(f"malformed config: {exc}", None, line) from None
    return from_dict(data, text)


def load(path) -> ExperimentConfig:
    return loads(Path(path).read_text())


DEFAULT_TOML = """\
# sparsegpc experiment
[measure]
kind = "gamma"
shape = 2.0

[problem]
n_elems = 128
f = 1.0
c = 0.05
tau = 2.0
d = 4

[weights]
mode = "b"
p = 0.5
theta = 0.0
lam = 0.0

[study]
xi0 = 16.0
n_xi = 5
n_ladder = [50, 100, 200, 400, 800]
rule_constant = 10.0
mc_samples = 400
seed = 0

[oracle]
level = 8
node_cap = 10000000

[output]
dir = "results"
cache_dir = ".sparsegpc-cache"
"""
