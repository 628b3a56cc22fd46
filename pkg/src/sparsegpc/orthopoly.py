"""Orthonormal polynomials, Gauss rules and Lagrange bases for one parameter axis.

Laguerre polynomials are normalised for the gamma law and carry the classical
sign convention (value at the origin is positive); Hermite polynomials for the
Gaussian have positive leading coefficient. Gauss rules come from the
Golub-Welsch eigenproblem solved by :func:`sparsegpc.kernels.tridiag_eig_first`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import EigenFailure
from .measures import MeasureSpec, log_density


@dataclass(frozen=True)
class Recurrence:
    """Monic three-term recurrence ``p_{k+1} = (y - alpha_k) p_k - beta_k p_{k-1}``."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        if len(self.alpha) != len(self.beta):
            raise ValueError("alpha and beta must have equal length")
        if np.any(self.beta[1:] <= 0):
            raise ValueError("recurrence beta_k must be positive for k >= 1")


def recurrence(spec: MeasureSpec, m: int) -> Recurrence:
    """First ``m`` monic recurrence coefficients (``beta_0`` is the total mass 1)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    k = np.arange(m, dtype=float)
    if spec.is_gamma:
        a = spec.shape
        alpha = 2.0 * k + a
        beta = k * (k + a - 1.0)
    else:
        alpha = np.zeros(m)
        beta = k.copy()
    beta[0] = 1.0
    return Recurrence(alpha, beta)


def _sign(spec: MeasureSpec, kmax: int) -> np.ndarray:
    if spec.is_gamma:
        return np.where(np.arange(kmax + 1) % 2 == 0, 1.0, -1.0)
    return np.ones(kmax + 1)


def orthonormal_values(spec: MeasureSpec, kmax: int, y, nder: int = 0) -> np.ndarray:
    """Values and derivatives of P_0..P_kmax; shape ``(nder + 1, len(y), kmax + 1)``."""
    rec = recurrence(spec, kmax + 1)
    table = kernels.orthonormal_table(y, rec.alpha, np.sqrt(rec.beta), kmax, nder)
    return table * _sign(spec, kmax)


def eval_orthonormal(spec: MeasureSpec, k: int, y):
    """k-th orthonormal polynomial at ``y`` (scalar in, scalar out)."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    vals = orthonormal_values(spec, k, np.atleast_1d(np.asarray(y, dtype=float)))[0, :, k]
    return float(vals[0]) if np.ndim(y) == 0 else vals


# ---------------------------------------------------------------------------
# Gauss rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadRule:
    nodes: np.ndarray
    weights: np.ndarray
    m: int
    spec: MeasureSpec

    def integrate(self, values) -> np.ndarray:
        """Apply the rule along the first axis of ``values``."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


@lru_cache(maxsize=512)
def gauss_rule(spec: MeasureSpec, m: int) -> QuadRule:
    """m-point Gauss rule of ``spec``; ``m = 0`` is the degenerate rule at the origin."""
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return QuadRule(np.zeros(1), np.ones(1), 0, spec)
    rec = recurrence(spec, m)
    nodes, first, status = kernels.tridiag_eig_first(rec.alpha, np.sqrt(rec.beta[1:]))
    if status != 0:
        raise EigenFailure(f"tridiagonal QL did not converge for m={m} ({spec})")
    order = np.argsort(nodes)
    nodes = nodes[order]
    weights = rec.beta[0] * first[order] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadRule(nodes, weights, m, spec)


# ---------------------------------------------------------------------------
# Lagrange bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LagrangeBasis:
    """Lagrange cardinal functions at ``nodes``.

    Barycentric weights are kept as ``sign * exp(log_abs)`` and evaluation runs
    in log magnitude, so Laguerre node spreads (which grow like 4m) neither
    overflow nor cancel.
    """

    nodes: np.ndarray
    log_abs: np.ndarray
    sign: np.ndarray

    @classmethod
    def from_nodes(cls, nodes) -> "LagrangeBasis":
        x = np.asarray(nodes, dtype=float)
        m = len(x)
        log_abs = np.zeros(m)
        sign = np.ones(m)
        for k in range(m):
            diff = x[k] - np.delete(x, k)
            log_abs[k] = -np.sum(np.log(np.abs(diff)))
            sign[k] = 1.0 if np.sum(diff < 0) % 2 == 0 else -1.0
        return cls(x, log_abs, sign)

    @property
    def m(self) -> int:
        return len(self.nodes)

    def _log_terms(self, y):
        # first barycentric form: l_k(y) = prod_j (y - x_j) * w_k / (y - x_k)
        diff = y[:, None] - self.nodes[None, :]
        hit = diff == 0.0
        with np.errstate(divide="ignore"):
            logd = np.log(np.abs(diff))
        logd_safe = np.where(hit, 0.0, logd)
        log_node = np.sum(logd_safe, axis=1, keepdims=True)
        sign_node = np.prod(np.where(hit, 1.0, np.sign(diff)), axis=1, keepdims=True)
        lt = log_node + self.log_abs[None, :] - logd_safe
        sg = sign_node * self.sign[None, :] * np.where(hit, 1.0, np.sign(diff))
        return lt, sg, hit

    def matrix(self, y) -> np.ndarray:
        """``out[i, k] = l_k(y_i)``; exact node hits return the Kronecker value."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.m == 1:
            return np.ones((len(y), 1))
        lt, sg, hit = self._log_terms(y)
        out = sg * np.exp(lt)
        rows = np.any(hit, axis=1)
        if np.any(rows):
            out[rows] = hit[rows].astype(float)
        return out

    def log_abs_matrix(self, y) -> np.ndarray:
        """``log|l_k(y_i)|``; robust where the plain values would overflow."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.m == 1:
            return np.zeros((len(y), 1))
        lt, _, hit = self._log_terms(y)
        rows = np.any(hit, axis=1)
        if np.any(rows):
            lt[rows] = np.where(hit[rows], 0.0, -np.inf)
        return lt


def lagrange_basis(spec: MeasureSpec, m: int) -> LagrangeBasis:
    return _lagrange_basis(spec, m)


@lru_cache(maxsize=512)
def _lagrange_basis(spec, m):
    return LagrangeBasis.from_nodes(gauss_rule(spec, m).nodes)


def lagrange_eval(basis: LagrangeBasis, k: int, y: float) -> float:
    """Cardinal function ``l_k`` (1-based ``k``) at scalar ``y``."""
    if not 1 <= k <= basis.m:
        raise IndexError(f"node index {k} outside 1..{basis.m}")
    return float(basis.matrix([y])[0, k - 1])


# ---------------------------------------------------------------------------
# weighted Lebesgue constant
# ---------------------------------------------------------------------------

def _weighted_lebesgue_function(spec, basis, y):
    logl_nodes = log_density(spec, basis.nodes)
    logl_y = log_density(spec, y)
    lg = basis.log_abs_matrix(y) + 0.5 * (logl_y[:, None] - logl_nodes[None, :])
    return np.sum(np.exp(lg), axis=1)


def _golden_max(fn, lo, hi, tol=1e-10, max_iter=200):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - g * (hi - lo)
    d = lo + g * (hi - lo)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if abs(hi - lo) <= tol * max(1.0, abs(c)):
            break
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = fn(d)
    return max(fc, fd)


def lebesgue_constant(spec: MeasureSpec, m: int, grid_size: int = 4096,
                      n_refine: int = 12) -> float:
    """Estimate of the sqrt-density weighted Lebesgue constant of the m-point
    Gauss interpolant: dense scan, then golden-section polish of the best peaks."""
    if m < 1:
        raise ValueError("m must be >= 1")
    basis = lagrange_basis(spec, m)
    top = basis.nodes[-1]
    if spec.is_gamma:
        hi = top + 10.0 * math.sqrt(top)
        lo = min(1e-8, basis.nodes[0] * 1e-6)
        grid = np.geomspace(lo, hi, grid_size)
    else:
        hi = abs(top) + 10.0 * math.sqrt(max(abs(top), 1.0))
        grid = np.linspace(-hi, hi, grid_size)
    vals = _weighted_lebesgue_function(spec, basis, grid)
    best = float(np.max(vals))
    interior = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])) + 1
    peaks = interior[np.argsort(vals[interior])[::-1][:n_refine]]

    def f(t):
        return float(_weighted_lebesgue_function(spec, basis, np.array([t]))[0])

    for i in peaks:
        best = max(best, _golden_max(f, grid[i - 1], grid[i + 1]))
    return best
