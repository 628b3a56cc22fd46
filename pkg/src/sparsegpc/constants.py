"""Closed-form and numerically evaluated constants of the summability bounds."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DivergentIntegral
from .measures import MeasureSpec
from .multiindex import r_min


def _base_operator(spec: MeasureSpec):
    # derivative order -> coefficient polynomial (ascending powers of y)
    if spec.is_gamma:
        a = spec.shape
        return {1: np.array([-a, 1.0]), 2: np.array([0.0, -1.0])}
    return {1: np.array([0.0, 1.0]), 2: np.array([-1.0])}


def _add(ops, j, poly):
    ops[j] = P.polyadd(ops.get(j, np.zeros(1)), poly)


@lru_cache(maxsize=64)
def _operator_power_cached(spec, r):
    base = _base_operator(spec)
    ops = {0: np.array([1.0])}
    for _ in range(r):
        new = {}
        for j, p in ops.items():
            dp = P.polyder(p) if len(p) > 1 else np.zeros(1)
            ddp = P.polyder(p, 2) if len(p) > 2 else np.zeros(1)
            c1, c2 = base[1], base[2]
            # c1 * (p f^(j))'
            _add(new, j, P.polymul(c1, dp))
            _add(new, j + 1, P.polymul(c1, p))
            # c2 * (p f^(j))''
            _add(new, j, P.polymul(c2, ddp))
            _add(new, j + 1, 2.0 * P.polymul(c2, dp))
            _add(new, j + 2, P.polymul(c2, p))
        ops = {j: P.polytrim(p) for j, p in new.items()}
    return tuple(sorted(ops.items()))


def operator_power(spec: MeasureSpec, r: int) -> dict:
    """Coefficients of ``D**r = sum_j p_j(y) d^j/dy^j`` for the second-order
    operator that has the orthonormal family of ``spec`` as eigenfunctions."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    return {j: p.copy() for j, p in _operator_power_cached(spec, r)}


def _sup_ratio_halfline(poly, r):
    # sup_{y >= 0} |poly(y)| / (1 + y)^r via y = t / (1 - t), t in [0, 1]
    deg = len(poly) - 1
    if deg > r:
        return math.inf
    t_poly = np.zeros(1)
    for i, c in enumerate(poly):
        term = P.polymul(P.polypow([0.0, 1.0], i), P.polypow([1.0, -1.0], r - i))
        t_poly = P.polyadd(t_poly, c * term)
    cand = [0.0, 1.0]
    if len(t_poly) > 2:
        for z in P.polyroots(P.polyder(t_poly)):
            if abs(z.imag) < 1e-12 and 0.0 <= z.real <= 1.0:
                cand.append(z.real)
    return float(max(abs(P.polyval(t, t_poly)) for t in cand))


def c_operator(spec: MeasureSpec, r: int) -> float:
    """Smallest C with ``|p_j(y)| <= C (1 + |y|)**r`` for every coefficient of D**r
    (``C_{a,r}`` for gamma, ``C_r`` for Gaussian)."""
    ops = operator_power(spec, r)
    best = 0.0
    for j, p in ops.items():
        if j == 0:
            continue
        best = max(best, _sup_ratio_halfline(p, r))
        if not spec.is_gamma:
            flipped = p * (-1.0) ** np.arange(len(p))
            best = max(best, _sup_ratio_halfline(flipped, r))
    return best


def c_p_theta(p: float, theta: float, r: int | None = None, n_direct: int = 100_000) -> float:
    """``sum_{k >= 1} k**-(p (r - theta))``; direct sum plus Euler-Maclaurin tail."""
    if r is None:
        r = r_min(p, theta)
    s = p * (r - theta)
    if s <= 1:
        raise DivergentIntegral(f"exponent {s} <= 1, series diverges")
    k = np.arange(1, n_direct + 1, dtype=float)
    head = float(np.sum(k[::-1] ** -s))
    n = float(n_direct)
    tail = (n ** (1 - s) / (s - 1) - 0.5 * n ** -s + s * n ** (-s - 1) / 12.0
            - s * (s + 1) * (s + 2) * n ** (-s - 3) / 720.0)
    return head + tail


def c_theta_lambda(theta: float, lam: float) -> float:
    """``sup_{k >= 1} (1 + lam k)**theta / k**theta``, attained at k = 1."""
    return (1.0 + lam) ** theta


def _upper_normal_moments(t, nmax):
    # M_n = int_t^inf z^n phi(z) dz
    phi = math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    out = [0.5 * math.erfc(t / math.sqrt(2.0)), phi]
    for n in range(2, nmax + 1):
        out.append(t ** (n - 1) * phi + (n - 1) * out[n - 2])
    return out[: nmax + 1]


def k_constant(spec: MeasureSpec, r: int, b0: float) -> float:
    """The single-coordinate integral constant ``K_{a,r,b}`` (gamma) or ``K_{r,b}``
    (Gaussian): ``( int (1+y)^{2r} exp(2 b0 |y|) dmu(y) )**(1/2)``."""
    if r < 0 or b0 < 0:
        raise ValueError("r and b0 must be nonnegative")
    if spec.is_gamma:
        c = 1.0 - 2.0 * b0
        if c <= 0:
            raise DivergentIntegral("gamma constant needs 2 b0 < 1")
        a = spec.shape
        total = 0.0
        for i in range(2 * r + 1):
            # Gamma(a + i) / (Gamma(a) c^(a+i))
            log_term = math.lgamma(a + i) - math.lgamma(a) - (a + i) * math.log(c)
            total += math.comb(2 * r, i) * math.exp(log_term)
        return math.sqrt(total)
    c = 2.0 * b0
    poly = P.polyadd(P.polypow([1.0, 1.0], 2 * r), P.polypow([1.0, -1.0], 2 * r))
    # shift y = z + c
    shifted = np.zeros(1)
    for i, coef in enumerate(poly):
        shifted = P.polyadd(shifted, coef * P.polypow([c, 1.0], i))
    moments = _upper_normal_moments(-c, len(shifted) - 1)
    total = math.exp(2.0 * b0 * b0) * sum(co * mo for co, mo in zip(shifted, moments))
    return math.sqrt(total)


def summability_k(spec: MeasureSpec, b0: float, p: float, theta: float = 0.0,
                  lam: float = 0.0) -> dict:
    """Assemble ``K = e (2r)! C_op C_{p,theta'} C_{theta',lambda} K_b`` with
    ``theta' = 2 theta / (2 - p)`` and ``r = r_{p,theta'}``."""
    theta_p = 2.0 * theta / (2.0 - p)
    r = r_min(p, theta_p)
    parts = {
        "r": r,
        "theta_prime": theta_p,
        "C_op": c_operator(spec, r),
        "C_p_theta": c_p_theta(p, theta_p, r),
        "C_theta_lambda": c_theta_lambda(theta_p, lam),
        "K_b": k_constant(spec, r, b0),
    }
    parts["K"] = (math.e * math.factorial(2 * r) * parts["C_op"] * parts["C_p_theta"]
                  * parts["C_theta_lambda"] * parts["K_b"])
    return parts
