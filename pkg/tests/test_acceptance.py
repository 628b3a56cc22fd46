"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line that is printed in the terminal summary.
"""
import math
import time
from itertools import product

import numpy as np
import pytest
from scipy import special

from sparsegpc import config as cfgmod
from sparsegpc.diffcheck import (admissible_rho, coefficient_identity_check,
                                 derivative_bound_check, ode_residual)
from sparsegpc.gpc import GpcExpansion, a_r_bound_check, oracle_expansion, parseval_check
from sparsegpc.measures import MeasureSpec, moment, sample
from sparsegpc.multiindex import MultiIndex, WeightFamily, box, build_lambda, downward_closure
from sparsegpc.orthopoly import gauss_rule, lebesgue_constant, orthonormal_values
from sparsegpc.pde import ParametricProblem
from sparsegpc.sparsegrid import acquire, grid_cardinality, interpolate, operator_from_set
from sparsegpc.study import run_study

from conftest import ACCEPTANCE

ALL = [MeasureSpec.gamma(a) for a in (0.5, 1.0, 2.0, 4.2)] + [MeasureSpec.gaussian()]


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")


def scipy_rule(spec, m):
    # independent of the package's Golub-Welsch solver
    if spec.is_gamma:
        x, w = special.roots_genlaguerre(m, spec.shape - 1.0)
        return x, w / math.gamma(spec.shape)
    x, w = special.roots_hermitenorm(m)
    return x, w / math.sqrt(2 * math.pi)


def test_criterion_01_orthonormality():
    t0 = time.perf_counter()
    worst = 0.0
    for spec in ALL:
        x, w = scipy_rule(spec, 40)
        P = orthonormal_values(spec, 30, x)[0]
        worst = max(worst, float(np.max(np.abs((P * w[:, None]).T @ P - np.eye(31)))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and dt < 5
    record("1 orthonormality", ok, f"max |<P_j,P_k> - delta| = {worst:.2e} (< 1e-10), {dt:.2f} s")
    assert ok


def test_criterion_02_gauss_exactness():
    t0 = time.perf_counter()
    worst = 0.0
    for spec in ALL:
        for m in range(1, 21):
            rule = gauss_rule(spec, m)
            for p in range(2 * m):
                exact = moment(spec, p)
                # odd Gaussian moments vanish: measure against sqrt(E y^{2p}) instead
                scale = abs(exact) if spec.is_gamma else math.sqrt(moment(spec, 2 * p))
                worst = max(worst, abs(float(rule.integrate(rule.nodes ** p)) - exact) / scale)
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and dt < 5
    record("2 Gauss exactness", ok, f"max relative moment error {worst:.2e} (< 1e-10), {dt:.2f} s")
    assert ok


def test_criterion_03_ode_identities():
    t0 = time.perf_counter()
    worst = 0.0
    for spec in [MeasureSpec.gamma(a) for a in (1.0, 2.0, 4.2)] + [MeasureSpec.gaussian()]:
        y = np.linspace(0.0, 40.0, 401) if spec.is_gamma else np.linspace(-9.0, 9.0, 401)
        worst = max(worst, max(ode_residual(spec, k, y) for k in range(26)))
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and dt < 5
    record("3 ODE identities", ok, f"max relative residual {worst:.2e} (< 1e-9), {dt:.2f} s")
    assert ok


def test_criterion_04_coefficient_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = 0.0
    for trial in range(50):
        spec = MeasureSpec.gamma(2.0) if trial % 2 == 0 else MeasureSpec.gaussian()
        coeffs = {}
        for _ in range(int(rng.integers(1, 6))):
            dims = rng.choice([1, 2, 3], size=int(rng.integers(1, 3)), replace=False)
            coeffs[MultiIndex({int(j): int(rng.integers(1, 5)) for j in dims})] = rng.normal()
        J = tuple(int(j) for j in rng.choice([1, 2, 3], size=int(rng.integers(1, 3)),
                                             replace=False))
        r = int(rng.integers(1, 3))
        worst = max(worst, coefficient_identity_check(coeffs, spec, J, r))
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and dt < 120
    record("4 coefficient identity", ok, f"max error {worst:.2e} over 50 trials (< 1e-8), {dt:.2f} s")
    assert ok


def _closed_sets(rng, count):
    out = [[MultiIndex()], list(box(1, 19)), list(box(2, 3)), list(box(3, 1))]
    while len(out) < count:
        d = int(rng.integers(1, 4))
        gens = [MultiIndex(tuple(int(v) for v in rng.integers(0, 5, size=d)))
                for _ in range(int(rng.integers(1, 4)))]
        L = downward_closure(gens)
        if len(L) <= 20:
            out.append(sorted(L, key=MultiIndex.sort_key))
    return out


def test_criterion_05_sparse_grid_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst, count_ok, n_sets = 0.0, True, 0
    for L in _closed_sets(rng, 120):
        d = max(max((s.max_dim for s in L), default=1), 1)
        for spec in (MeasureSpec.gamma(2.0), MeasureSpec.gaussian()):
            op = operator_from_set(L, spec, d)
            count_ok &= op.size == grid_cardinality(L) == sum(1 for _ in op.keys())
            truth = GpcExpansion({s: [rng.normal()] for s in L}, spec, d)
            Y = sample(spec, rng, 100, d)
            err = np.max(np.abs(interpolate(op, acquire(op, truth.evaluate), Y) - truth.evaluate(Y)))
            worst = max(worst, float(err / max(1.0, np.abs(truth.evaluate(Y)).max())))
            n_sets += 1
    dt = time.perf_counter() - t0
    span_ok = worst < 1e-9
    ok = span_ok and count_ok and dt < 120
    record("5 sparse-grid exactness", ok,
           f"span{{L_s: s in Lambda}} max rel error {worst:.2e} (< 1e-9: {span_ok}); "
           f"|G| closed form matches on all {n_sets} cases: {count_ok}; {dt:.2f} s")
    assert count_ok, "grid cardinality mismatch"
    assert span_ok, (f"span reproduction error {worst:.3g}: the operator reproduces "
                     "L_k only when k shifted up by one on its support lies in Lambda")


def test_criterion_06_lebesgue_scaling():
    t0 = time.perf_counter()
    ms = np.array([4, 8, 16, 32, 64])
    lam = np.array([lebesgue_constant(MeasureSpec.gamma(2.0), int(m)) for m in ms])
    slope = float(np.polyfit(np.log(ms), np.log(lam), 1)[0])
    dt = time.perf_counter() - t0
    ok = 0.05 <= slope <= 0.35 and dt < 60
    vals = ", ".join(f"{v:.3f}" for v in lam)
    record("6 Lebesgue scaling", ok, f"slope {slope:.3f} (target [0.05, 0.35]); lambda_m = {vals}; "
           f"{dt:.2f} s")
    assert ok


def test_criterion_07_a_r_inequality():
    t0 = time.perf_counter()
    lines, ok = [], True
    for spec in (MeasureSpec.gamma(2.0), MeasureSpec.gaussian()):
        prob = ParametricProblem.sine_family(4, spec=spec)
        for r in (1, 2):
            for J in [(), (1,), (2,), (1, 2), (3, 4)]:
                chk = a_r_bound_check(prob, r, J, n_samples=20000, seed=7)
                ok &= chk.passed
                lines.append(chk.estimate / chk.bound)
    dt = time.perf_counter() - t0
    ok = ok and dt < 300
    record("7 A_r(J) bound", ok, f"20 cases, max estimate/bound = {max(lines):.3f}; {dt:.2f} s")
    assert ok


@pytest.mark.slow
def test_criterion_08_rate_direction(tmp_path):
    t0 = time.perf_counter()
    cfg = cfgmod.loads(cfgmod.DEFAULT_TOML)
    res = run_study(cfg, cache_dir=tmp_path / "cache")
    dt = time.perf_counter() - t0

    def monotone(method):
        e, se = res.column(method, "error"), res.column(method, "stderr")
        return bool(np.all(e[1:] <= e[:-1] + 2 * np.hypot(se[1:], se[:-1])))

    mono_i, mono_q = monotone("interp"), monotone("quad")
    gap = res.slopes["lsq"] - res.slopes["interp"]
    ok = mono_i and mono_q and gap <= -0.2 and dt < 1800
    record("8 rate direction", ok,
           f"interp monotone {mono_i}, quad monotone {mono_q}; slopes interp "
           f"{res.slopes['interp']:.3f}, lsq {res.slopes['lsq']:.3f} (gap {gap:.3f} <= -0.2); "
           f"p_hat {res.slopes['p_hat']:.3f}; {dt:.1f} s")
    assert ok


def test_criterion_09_derivative_bound():
    t0 = time.perf_counter()
    prob = ParametricProblem.sine_family(4)
    rho = admissible_rho(prob, 1.0)
    Y = sample(prob.spec, np.random.default_rng(9), 20, 4)
    indices = [s for s in box(4, 2) if 1 <= s.abs1 <= 2]
    violations, worst = 0, 0.0
    for s in indices:
        rep = derivative_bound_check(prob, s, rho, Y)
        violations += rep.violations
        worst = max(worst, float(rep.ratios.max()))
    dt = time.perf_counter() - t0
    ok = violations == 0 and dt < 300
    record("9 derivative bound", ok, f"{violations} violations over {len(indices)} indices x 20 "
           f"points, max ratio {worst:.3f}; {dt:.2f} s")
    assert ok


def test_criterion_10_parseval():
    t0 = time.perf_counter()
    configs = [
        ("gamma(2) d=4", ParametricProblem.sine_family(4), 64.0),
        ("gamma(0.5) d=3", ParametricProblem.sine_family(3, c=0.1, spec=MeasureSpec.gamma(0.5)), 32.0),
        ("gaussian d=3", ParametricProblem.sine_family(3, c=0.2, spec=MeasureSpec.gaussian()), 32.0),
    ]
    parts, ok = [], True
    for name, prob, xi in configs:
        w = WeightFamily("b", p=0.5, b=tuple(prob.b))
        idx = [s for s in build_lambda(w, xi, prob.d).indices if s.absinf < 6]
        exp = oracle_expansion(prob, idx, 6)
        est = parseval_check(exp, 4000, seed=10)
        ok &= est.agree(4.0)
        parts.append(f"{name}: {abs(est.lhs - est.rhs) / est.stderr:.2f} se")
    dt = time.perf_counter() - t0
    ok = ok and dt < 300
    record("10 Parseval", ok, "; ".join(parts) + f"; {dt:.2f} s")
    assert ok
