"""Convergence studies: xi ladders for sparse grids, n ladders for least squares."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lsq
from .config import ExperimentConfig
from .constants import summability_k
from .diffcheck import kappa_of
from .errors import DegenerateFit, SparseGpcError
from .gpc import CoefficientCache, oracle_expansion, summability_profile
from .measures import sample
from .multiindex import MultiIndex, build_lambda
from .pde import ParametricProblem
from .sparsegrid import acquire, build_operator, interpolate, mc_l2_error, quadrature

COLUMNS = ("method", "ladder", "n", "n_distinct", "m", "error", "stderr", "seed",
           "config_hash", "cache_hash")

COLUMN_DOC = {
    "method": "interp | quad | lsq | lsq_quad",
    "ladder": "xi for sparse grids, requested sample count for least squares",
    "n": "number of PDE samples the method is charged for (|G(xi)| or n)",
    "n_distinct": "distinct parameter points actually solved",
    "m": "|Lambda(xi)| or the least-squares basis size",
    "error": "L2(lambda; V) error (interp, lsq) or V-norm error of the mean (quad, lsq_quad)",
    "stderr": "Monte Carlo standard error of the error (0 for deterministic entries)",
    "seed": "seed of the random draws behind the row",
    "config_hash": "sha256 prefix of the normalised configuration",
    "cache_hash": "content address of the coefficient cache after the oracle run",
}


def parallel_solver(prob: ParametricProblem, threads: int = 1, chunk: int = 256):
    """``Y -> U`` that splits the batch over ``threads`` workers (results stay ordered)."""
    if threads <= 1:
        return prob.solve_batch

    def solve(Y):
        Y = np.atleast_2d(Y)
        parts = [Y[i: i + chunk] for i in range(0, Y.shape[0], chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.vstack(list(pool.map(prob.solve_batch, parts)))

    return solve


@dataclass
class StudyResult:
    rows: list
    slopes: dict
    meta: dict = field(default_factory=dict)

    def column(self, method: str, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.rows if r["method"] == method], dtype=float)


def loglog_slope(n, err, floor: float = 1e-14):
    """Least-squares slope of ``log err`` against ``log n``; ``nan`` when undefined."""
    n = np.asarray(n, dtype=float)
    err = np.asarray(err, dtype=float)
    ok = (err > floor) & (n > 0)
    if ok.sum() < 2 or np.unique(n[ok]).size < 2:
        return math.nan
    return float(np.polyfit(np.log(n[ok]), np.log(err[ok]), 1)[0])


def run_study(cfg: ExperimentConfig, seed: int | None = None, cache_dir=None, threads: int = 1,
              func=None, log=None, methods=None) -> StudyResult:
    """Run the ladders of ``cfg``. ``func`` (``(n, d) -> (n, ndof)``) replaces the
    PDE solve, e.g. with a synthetic expansion; ``methods`` restricts the output
    to a subset of ``interp``, ``quad``, ``lsq``, ``lsq_quad``."""
    methods = set(methods or ("interp", "quad", "lsq", "lsq_quad"))
    seed = cfg.study.seed if seed is None else seed
    prob = cfg.problem_obj()
    spec, d, h = prob.spec, prob.d, prob.mesh.h
    solve = func if func is not None else parallel_solver(prob, threads)
    w = cfg.weight_family()
    level = cfg.oracle.level
    say = log or (lambda msg: None)
    timings = {}

    cache = CoefficientCache(cache_dir or cfg.output.cache_dir) if func is None else None
    ladder = cfg.xi_ladder()
    lambdas = [build_lambda(w, xi, d).indices for xi in ladder]
    oracle_set = sorted({s for L in lambdas for s in L if s.absinf < level} | {MultiIndex()},
                        key=MultiIndex.sort_key)
    t0 = time.perf_counter()
    try:
        oracle = oracle_expansion(prob if func is None else None, oracle_set, level,
                                  node_cap=cfg.oracle.node_cap, cache=cache,
                                  integrand=func, spec=spec, d=d)
    except SparseGpcError as exc:
        raise type(exc)(f"oracle (level {level}): {exc}") from exc
    timings["oracle"] = time.perf_counter() - t0
    if func is not None:
        oracle.h = h
    mean = oracle.coeffs[MultiIndex()]
    cache_hash = cache.content_hash() if cache is not None else "none"
    chash = cfg.digest()
    say(f"oracle: {len(oracle_set)} coefficients at level {level}")

    rng_root = np.random.SeedSequence(seed)
    eval_seed = int(rng_root.generate_state(1)[0])
    Y_eval = sample(spec, np.random.default_rng(eval_seed), cfg.study.mc_samples, d)
    U_eval = solve(Y_eval)

    rows = []

    def add(**kw):
        row = {k: kw.get(k) for k in COLUMNS}
        row.update(config_hash=chash, cache_hash=cache_hash)
        rows.append(row)

    grid_ladder = list(zip(ladder, lambdas)) if methods & {"interp", "quad"} else []
    for i, (xi, Lam) in enumerate(grid_ladder):
        t0 = time.perf_counter()
        try:
            op = build_operator(w, xi, d, spec)
            S = acquire(op, solve)
            err = mc_l2_error(U_eval, interpolate(op, S, Y_eval), h)
            qerr = float(np.sqrt(max(_vsq(mean - quadrature(op, S), h), 0.0)))
        except SparseGpcError as exc:
            raise type(exc)(f"xi ladder point {i} (xi={xi}): {exc}") from exc
        timings[f"xi={xi}"] = time.perf_counter() - t0
        add(method="interp", ladder=xi, n=op.size, n_distinct=len(op.points), m=len(Lam),
            error=err.value, stderr=err.stderr, seed=eval_seed)
        add(method="quad", ladder=xi, n=op.size, n_distinct=len(op.points), m=len(Lam),
            error=qerr, stderr=0.0, seed=eval_seed)
        say(f"xi={xi:g}: |G|={op.size} interp={err.value:.3e} quad={qerr:.3e}")

    n_ladder = cfg.study.n_ladder if methods & {"lsq", "lsq_quad"} else []
    for i, n in enumerate(n_ladder):
        t0 = time.perf_counter()
        dseed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        try:
            des = lsq.design(None, w, n, cfg.study.rule_constant, dseed, spec=spec, d=d)
            U = solve(des.points)
            fit = lsq.fit_bochner(des, U)
            err = mc_l2_error(U_eval, fit.expansion(h).evaluate(Y_eval), h)
            qerr = float(np.sqrt(max(_vsq(mean - lsq.lsq_quadrature(fit), h), 0.0)))
        except SparseGpcError as exc:
            raise type(exc)(f"n ladder point {i} (n={n}): {exc}") from exc
        timings[f"n={n}"] = time.perf_counter() - t0
        add(method="lsq", ladder=n, n=n, n_distinct=n, m=des.m, error=err.value,
            stderr=err.stderr, seed=dseed)
        add(method="lsq_quad", ladder=n, n=n, n_distinct=n, m=des.m, error=qerr, stderr=0.0,
            seed=dseed)
        say(f"n={n}: m={des.m} lsq={err.value:.3e} lsq_quad={qerr:.3e}")

    rows = [r for r in rows if r["method"] in methods]
    res = StudyResult(rows, {})
    try:
        prof = summability_profile(oracle)
        p_hat = prof.p_hat
    except (ValueError, DegenerateFit):
        p_hat = math.nan
    for method in sorted(methods):
        res.slopes[method] = loglog_slope(res.column(method, "n"), res.column(method, "error"))
    res.slopes["predicted_interp"] = -(1.0 / p_hat - 1.0) if math.isfinite(p_hat) else math.nan
    res.slopes["predicted_lsq"] = -(1.0 / p_hat - 0.5) if math.isfinite(p_hat) else math.nan
    res.slopes["p_hat"] = p_hat
    res.meta = {
        "config_hash": chash, "cache_hash": cache_hash, "seed": seed,
        "eval_seed": eval_seed, "config": cfg.to_dict(), "timings": timings,
    }
    return res


def _vsq(vec, h):
    pad = np.pad(np.asarray(vec, dtype=float), (1, 1))
    return float(np.sum(np.diff(pad) ** 2) / h)


def write_results(res: StudyResult, out) -> tuple:
    """CSV (with a documented header comment) plus a JSON sidecar."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out.with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        for col in COLUMNS:
            fh.write(f"# {col}: {COLUMN_DOC[col]}\n")
        wr = csv.DictWriter(fh, fieldnames=COLUMNS)
        wr.writeheader()
        for row in res.rows:
            wr.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        for key, val in res.slopes.items():
            fh.write(f"# slope {key} = {val!r}\n")
    json_path = out.with_suffix(".json")
    meta = dict(res.meta)
    meta["slopes"] = {k: (None if isinstance(v, float) and math.isnan(v) else v)
                      for k, v in res.slopes.items()}
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str))
    return csv_path, json_path


# ---------------------------------------------------------------------------
# condition report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Condition:
    name: str
    value: float
    threshold: float
    passed: bool
    required: bool
    note: str = ""


def validate(cfg: ExperimentConfig) -> list:
    """Theory conditions for the configured problem; nothing is raised."""
    spec = cfg.spec
    p = cfg.problem
    b = np.array([abs(p.c) * j ** (-p.tau) for j in range(1, p.d + 1)])
    b0 = float(b.max())
    out = []
    try:
        prob = ParametricProblem.sine_family(p.d, p.c, p.tau, p.n_elems, spec, p.f,
                                             allow_large_b=True)
        kappa = kappa_of(prob, cfg.rho_values())
    except (ValueError, SparseGpcError):
        kappa = math.inf
    out.append(Condition("kappa < pi/2", kappa, math.pi / 2, kappa < math.pi / 2, True,
                         "||sum_j rho_j |psi_j| ||_inf"))
    if spec.is_gamma:
        out.append(Condition("b0 < 1/2", b0, 0.5, b0 < 0.5, True, "max_j ||psi_j||_inf"))
    try:
        K = summability_k(spec, b0, cfg.weights.p, cfg.weights.theta, cfg.weights.lam)["K"]
    except SparseGpcError:
        K = math.inf
    l1 = float(b.sum())
    out.append(Condition("||b||_1 < 1/K", l1, 1.0 / K if K > 0 else math.inf,
                         bool(l1 < 1.0 / K), False, f"K = {K:.6g} (sufficient condition only)"))
    return out
