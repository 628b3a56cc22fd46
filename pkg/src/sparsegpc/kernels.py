"""Hot numeric kernels.

Every kernel exists twice: a ``_nb`` loop version compiled with numba and a
``_np`` version in plain numpy. The public names dispatch on
:data:`sparsegpc._accel.USE_NUMBA`. Both variants stay importable so the
benchmark and the tests can compare them directly.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "tridiag_eig_first",
    "fem_solve_batch",
    "gather_product",
    "orthonormal_table",
    "USE_NUMBA",
]


# ---------------------------------------------------------------------------
# symmetric tridiagonal eigenproblem (implicit QL, Wilkinson shift)
# ---------------------------------------------------------------------------

def _tql_first_row(diag, off, max_iter):
    # Returns (eigenvalues, first eigenvector components, status);
    # status 0 = ok, 1 = iteration cap hit.
    n = diag.shape[0]
    d = diag.copy()
    e = np.zeros(n)
    for i in range(n - 1):
        e[i] = off[i]
    z = np.zeros(n)
    z[0] = 1.0
    eps = 2.220446049250313e-16
    total = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            total += 1
            if total > max_iter:
                return d, z, 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            deflated = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                f = z[i + 1]
                z[i + 1] = s * z[i] + c * f
                z[i] = c * z[i] - s * f
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, z, 0


_tql_first_row_np = _tql_first_row
_tql_first_row_nb = njit(cache=True)(_tql_first_row)


def tridiag_eig_first(diag, off, max_iter=None):
    """Eigenvalues and first eigenvector components of a symmetric tridiagonal matrix.

    ``diag`` has length n, ``off`` length n-1. Output is unsorted.
    """
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    off = np.ascontiguousarray(off, dtype=np.float64)
    if max_iter is None:
        max_iter = 50 * max(diag.shape[0], 1)
    fn = _tql_first_row_nb if USE_NUMBA else _tql_first_row_np
    return fn(diag, off, int(max_iter))


# ---------------------------------------------------------------------------
# P1 finite elements on (0, 1), batched over parameter points
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _fem_solve_batch_nb(Y, psi_gp, load, h):
    n, d = Y.shape
    ne = psi_gp.shape[1] // 2
    ni = ne - 1
    U = np.empty((n, ni))
    a = np.empty(ne)
    cp = np.empty(ni)
    dp = np.empty(ni)
    status = 0
    for t in range(n):
        for el in range(ne):
            b1 = 0.0
            b2 = 0.0
            for j in range(d):
                b1 += Y[t, j] * psi_gp[j, 2 * el]
                b2 += Y[t, j] * psi_gp[j, 2 * el + 1]
            a[el] = 0.5 * (math.exp(b1) + math.exp(b2))
            if not (a[el] > 0.0) or not math.isfinite(a[el]):
                status = 1
        # Thomas: row i couples elements i and i+1
        for i in range(ni):
            diag = (a[i] + a[i + 1]) / h
            lower = -a[i] / h
            upper = -a[i + 1] / h
            if i == 0:
                cp[i] = upper / diag
                dp[i] = load[i] / diag
            else:
                den = diag - lower * cp[i - 1]
                cp[i] = upper / den
                dp[i] = (load[i] - lower * dp[i - 1]) / den
        U[t, ni - 1] = dp[ni - 1]
        for i in range(ni - 2, -1, -1):
            U[t, i] = dp[i] - cp[i] * U[t, i + 1]
    return U, status


def _fem_solve_batch_np(Y, psi_gp, load, h):
    B = Y @ psi_gp
    E = np.exp(B)
    a = 0.5 * (E[:, 0::2] + E[:, 1::2])
    status = 0 if np.all(np.isfinite(a) & (a > 0)) else 1
    n, ne = a.shape
    ni = ne - 1
    diag = (a[:, :-1] + a[:, 1:]) / h
    lower = -a[:, :-1] / h
    upper = -a[:, 1:] / h
    cp = np.empty((n, ni))
    dp = np.empty((n, ni))
    cp[:, 0] = upper[:, 0] / diag[:, 0]
    dp[:, 0] = load[0] / diag[:, 0]
    for i in range(1, ni):
        den = diag[:, i] - lower[:, i] * cp[:, i - 1]
        cp[:, i] = upper[:, i] / den
        dp[:, i] = (load[i] - lower[:, i] * dp[:, i - 1]) / den
    U = np.empty((n, ni))
    U[:, -1] = dp[:, -1]
    for i in range(ni - 2, -1, -1):
        U[:, i] = dp[:, i] - cp[:, i] * U[:, i + 1]
    return U, status


def fem_solve_batch(Y, psi_gp, load, h):
    """Solve -(a u')' = f for every row of ``Y``; returns (dofs, status)."""
    Y = np.ascontiguousarray(np.atleast_2d(Y), dtype=np.float64)
    psi_gp = np.ascontiguousarray(psi_gp, dtype=np.float64)
    load = np.ascontiguousarray(load, dtype=np.float64)
    fn = _fem_solve_batch_nb if USE_NUMBA else _fem_solve_batch_np
    return fn(Y, psi_gp, load, float(h))


# ---------------------------------------------------------------------------
# gathered tensor products (sparse-grid evaluation weights)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _gather_product_nb(tables, cols, coef):
    d, M, _ = tables.shape
    R = cols.shape[0]
    W = np.empty((M, R))
    for i in range(M):
        for r in range(R):
            v = coef[r]
            for j in range(d):
                v *= tables[j, i, cols[r, j]]
            W[i, r] = v
    return W


def _gather_product_np(tables, cols, coef):
    W = np.broadcast_to(coef, (tables.shape[1], cols.shape[0])).copy()
    for j in range(tables.shape[0]):
        W *= tables[j][:, cols[:, j]]
    return W


def gather_product(tables, cols, coef):
    """``W[i, r] = coef[r] * prod_j tables[j, i, cols[r, j]]``."""
    tables = np.ascontiguousarray(tables, dtype=np.float64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    fn = _gather_product_nb if USE_NUMBA else _gather_product_np
    return fn(tables, cols, coef)


# ---------------------------------------------------------------------------
# orthonormal three-term recurrence with derivatives
# ---------------------------------------------------------------------------

@njit(cache=True)
def _orthonormal_table_nb(y, alpha, sqrt_beta, kmax, nder):
    n = y.shape[0]
    out = np.zeros((nder + 1, n, kmax + 1))
    for t in range(n):
        x = y[t]
        out[0, t, 0] = 1.0 / sqrt_beta[0]
        for k in range(kmax):
            for q in range(nder + 1):
                v = (x - alpha[k]) * out[q, t, k]
                if q > 0:
                    v += q * out[q - 1, t, k]
                if k > 0:
                    v -= sqrt_beta[k] * out[q, t, k - 1]
                out[q, t, k + 1] = v / sqrt_beta[k + 1]
    return out


def _orthonormal_table_np(y, alpha, sqrt_beta, kmax, nder):
    n = y.shape[0]
    out = np.zeros((nder + 1, n, kmax + 1))
    out[0, :, 0] = 1.0 / sqrt_beta[0]
    for k in range(kmax):
        prev = out[:, :, k - 1] if k > 0 else None
        cur = out[:, :, k]
        nxt = (y - alpha[k]) * cur
        if nder > 0:
            nxt[1:] += np.arange(1, nder + 1)[:, None] * cur[:-1]
        if prev is not None:
            nxt -= sqrt_beta[k] * prev
        out[:, :, k + 1] = nxt / sqrt_beta[k + 1]
    return out


def orthonormal_table(y, alpha, sqrt_beta, kmax, nder=0):
    """Values (and derivatives up to ``nder``) of the positive-leading orthonormal
    polynomials p_0..p_kmax at ``y``; shape ``(nder + 1, len(y), kmax + 1)``.

    ``alpha`` needs length >= kmax, ``sqrt_beta`` length >= kmax + 1.
    """
    y = np.ascontiguousarray(np.atleast_1d(y), dtype=np.float64)
    alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    sqrt_beta = np.ascontiguousarray(sqrt_beta, dtype=np.float64)
    fn = _orthonormal_table_nb if USE_NUMBA else _orthonormal_table_np
    return fn(y, alpha, sqrt_beta, int(kmax), int(nder))
