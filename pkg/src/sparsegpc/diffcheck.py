"""Numerical checks of the eigen-operator structure and of parametric derivative bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .constants import operator_power
from .errors import QuadratureUnderResolved, StepUnderflow
from .measures import MeasureSpec
from .multiindex import MultiIndex, as_index
from .orthopoly import gauss_rule, orthonormal_values
from .pde import ParametricProblem, b_sup, f_dual_norm, v_norm


@dataclass(frozen=True)
class DiffOperatorSpec:
    spec: MeasureSpec
    J: tuple
    r: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        object.__setattr__(self, "J", tuple(sorted(set(int(j) for j in self.J))))
        if any(j < 1 for j in self.J):
            raise ValueError("dimensions are numbered from 1")


def apply_operator(spec: MeasureSpec, vals: np.ndarray, y) -> np.ndarray:
    """``D`` from values and first two derivatives (``vals[0..2]``)."""
    y = np.asarray(y, dtype=float)
    if spec.is_gamma:
        return -y * vals[2] - (spec.shape - y) * vals[1]
    return -vals[2] + y * vals[1]


def ode_residual(spec: MeasureSpec, k: int, y) -> float:
    """``max |D P_k - k P_k| / max |P_k|`` over the grid ``y``."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    vals = orthonormal_values(spec, k, y, nder=2)[:, :, k]
    res = apply_operator(spec, vals, y) - k * vals[0]
    scale = float(np.max(np.abs(vals[0])))
    return float(np.max(np.abs(res)) / scale) if scale > 0 else float(np.max(np.abs(res)))


def divergence_form(spec: MeasureSpec, df, d2f, y) -> np.ndarray:
    """``D f`` through the weighted flux: ``-(1/w) (w p f')'`` with
    ``w = e^{-y} y^{a-1}``, ``p = y`` (gamma) or ``w = e^{-y^2/2}``, ``p = 1`` (Gaussian)."""
    y = np.asarray(y, dtype=float)
    if spec.is_gamma:
        a = spec.shape
        flux_w = np.exp(-y) * y ** a                      # w * p
        dflux_w = np.exp(-y) * (a * y ** (a - 1.0) - y ** a)
        return -np.exp(y) * y ** (1.0 - a) * (dflux_w * df(y) + flux_w * d2f(y))
    w = np.exp(-0.5 * y * y)
    return -np.exp(0.5 * y * y) * (-y * w * df(y) + w * d2f(y))


def divergence_form_check(spec: MeasureSpec, df, d2f, y) -> float:
    """Largest relative gap between the flux form and the direct form of ``D f``."""
    y = np.asarray(y, dtype=float)
    if spec.is_gamma and np.any(y <= 0):
        raise ValueError("the flux form needs y > 0")
    direct = apply_operator(spec, np.stack([np.zeros_like(y), df(y), d2f(y)]), y)
    flux = divergence_form(spec, df, d2f, y)
    scale = max(float(np.max(np.abs(direct))), 1e-300)
    return float(np.max(np.abs(direct - flux)) / scale)


def _power_on_table(spec, table, y, r):
    # (D^r P_k)(y) for every k from the derivative table (nder >= 2r)
    ops = operator_power(spec, r)
    out = np.zeros(table.shape[1:])
    for j, poly in ops.items():
        out += np.polynomial.polynomial.polyval(y, poly)[:, None] * table[j]
    return out


def coefficient_identity_check(coeffs: dict, spec: MeasureSpec, J, r: int,
                               level: int | None = None) -> float:
    """Apply ``D_J^r`` to ``v = sum v_s L_s`` by differentiating through the
    recurrence, re-project with a tensor Gauss rule and compare with
    ``nu_{J,s}^r v_s``; returns the largest error relative to ``max(1, max |nu^r v_s|)``."""
    op = DiffOperatorSpec(spec, tuple(J), r)
    items = {as_index(s): float(v) for s, v in coeffs.items()}
    d = max([s.max_dim for s in items] + list(op.J) + [1])
    kmax = max((s.absinf for s in items), default=0)
    level = kmax + 2 if level is None else level
    rule = gauss_rule(spec, level)
    table = orthonormal_values(spec, kmax, rule.nodes, nder=2 * r)
    applied = _power_on_table(spec, table, rule.nodes, r)   # (level, kmax+1)
    plain = table[0]
    out_idx = [MultiIndex(t) for t in product(range(kmax + 1), repeat=d)]

    def project(factor_fn):
        # coefficients of sum_s v_s prod_j factor_fn(j)[:, s_j] against every out index
        res = np.zeros(len(out_idx))
        grids = np.meshgrid(*([np.arange(level)] * d), indexing="ij")
        idx = np.column_stack([g.ravel() for g in grids])
        w = np.prod(rule.weights[idx], axis=1)
        vals = np.zeros(idx.shape[0])
        for s, v in items.items():
            term = np.full(idx.shape[0], v)
            dense = s.dense(d)
            for j in range(d):
                term *= factor_fn(j)[idx[:, j], dense[j]]
            vals += term
        for t, u in enumerate(out_idx):
            basis = np.ones(idx.shape[0])
            dense = u.dense(d)
            for j in range(d):
                basis *= plain[idx[:, j], dense[j]]
            res[t] = np.sum(w * vals * basis)
        return res

    base = project(lambda j: plain)
    expect_plain = np.array([items.get(u, 0.0) for u in out_idx])
    scale0 = max(1.0, float(np.max(np.abs(expect_plain))) if expect_plain.size else 1.0)
    if np.max(np.abs(base - expect_plain)) > 1e-10 * scale0:
        raise QuadratureUnderResolved(f"level {level} does not reproduce the expansion")
    got = project(lambda j: applied if j + 1 in op.J else plain)
    expect = np.array([items.get(u, 0.0) * math.prod(u[j] for j in op.J) ** r for u in out_idx])
    scale = max(1.0, float(np.max(np.abs(expect))))
    return float(np.max(np.abs(got - expect)) / scale)


# ---------------------------------------------------------------------------
# parametric derivative bounds
# ---------------------------------------------------------------------------

_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
}


def kappa_of(prob: ParametricProblem, rho) -> float:
    """``||sum_j rho_j |psi_j| ||_inf`` on nodes and element Gauss points."""
    rho = np.asarray(rho, dtype=float)
    vals = np.concatenate([rho @ np.abs(prob.psi_gp), rho @ np.abs(prob.psi_nodes)])
    return float(np.max(vals))


def admissible_rho(prob: ParametricProblem, kappa: float = 1.0) -> np.ndarray:
    """``rho_j = kappa / (d b_j)``, so that ``sum rho_j |psi_j| <= kappa``."""
    b = prob.b
    return np.where(b > 0, kappa / (prob.d * np.where(b > 0, b, 1.0)), 1e6)


def fd_step(h_fd: float, order: int) -> float:
    """Step for an ``order``-th difference: ``h_fd ** (1/order)``, which keeps the
    roundoff share ``eps / h**order`` comparable across orders."""
    return h_fd ** (1.0 / max(1, order))


def fd_derivative(prob: ParametricProblem, s, y, h: float, richardson: bool = True) -> np.ndarray:
    """``d^s u(y)`` by nested central differences, with one Richardson step."""
    s = as_index(s)
    if s.abs1 > 3:
        raise ValueError("finite differences are limited to |s|_1 <= 3")
    if not h > 1e-7:
        raise StepUnderflow(f"step {h} is below the roundoff floor")
    y = np.asarray(y, dtype=float)
    if s.abs1 == 0:
        return prob.solve_batch(y[None, :])[0]
    if prob.spec.is_gamma:
        reach = max(max(_STENCILS[v][0]) for _, v in s.items())
        low = min(y[j - 1] for j in s.support)
        if low - reach * h <= 0:
            h = low / (reach + 1.0)
            if not h > 1e-7:
                raise StepUnderflow(f"y too close to 0 for a central stencil (h={h:.2e})")

    def stencil(hh):
        pts, wts = [y.copy()], [1.0]
        for j, v in s.items():
            offs, coef = _STENCILS[v]
            new_p, new_w = [], []
            for p, w in zip(pts, wts):
                for o, c in zip(offs, coef):
                    q = p.copy()
                    q[j - 1] += o * hh
                    new_p.append(q)
                    new_w.append(w * c / hh ** v)
            pts, wts = new_p, new_w
        U = prob.solve_batch(np.array(pts))
        return np.asarray(wts) @ U

    coarse = stencil(h)
    if not richardson:
        return coarse
    return (4.0 * stencil(0.5 * h) - coarse) / 3.0


@dataclass(frozen=True)
class DerivativeBoundReport:
    violations: int
    ratios: np.ndarray
    kappa: float
    C0: float


def derivative_bound_check(prob: ParametricProblem, s, rho, Y, kappa: float | None = None,
                           h_fd: float = 1e-3, slack: float = 0.10) -> DerivativeBoundReport:
    """Count points where ``||d^s u(y)||_V > (1 + slack) C0 s!/rho^s exp(||b(y)||_inf)``."""
    s = as_index(s)
    rho = np.asarray(rho, dtype=float)
    k_emp = kappa_of(prob, rho)
    kappa = k_emp if kappa is None else float(kappa)
    if kappa < k_emp * (1 - 1e-12):
        raise ValueError(f"kappa {kappa} is below the measured {k_emp}")
    if not kappa < math.pi / 2:
        raise ValueError(f"kappa {kappa} must be < pi/2")
    C0 = math.exp(kappa) / math.cos(kappa) * f_dual_norm(prob)
    rho_s = math.prod(rho[j - 1] ** v for j, v in s.items())
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    ratios = np.empty(Y.shape[0])
    bs = b_sup(prob, Y)
    for i, y in enumerate(Y):
        der = fd_derivative(prob, s, y, fd_step(h_fd, s.abs1))
        bound = C0 * s.factorial() / rho_s * math.exp(bs[i])
        ratios[i] = v_norm(der, prob.mesh.h) / bound
    return DerivativeBoundReport(int(np.sum(ratios > 1.0 + slack)), ratios, kappa, C0)
