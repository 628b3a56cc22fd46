"""Sparse-grid interpolation and quadrature by the combination technique.

The operator on a downward-closed set ``Lambda`` is
``I_Lambda = sum_{s in Lambda} Delta_s`` with ``Delta_s = prod_j (I_{s_j} - I_{s_j - 1})``,
where ``I_m`` interpolates at the ``m`` Gauss nodes and ``I_0 v = v(0)``.
Expanding the differences gives signed triples ``(s, e, k)``; identical
``(s - e, k)`` pairs are aggregated into rows with combination coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterator, NamedTuple

import numpy as np

from . import kernels
from .errors import MissingSample
from .measures import MeasureSpec, sample
from .multiindex import MultiIndex, as_index, build_lambda
from .orthopoly import gauss_rule, lagrange_basis
from .pde import ParametricProblem, v_norm


class GridPointKey(NamedTuple):
    s: MultiIndex
    e: MultiIndex
    k: MultiIndex


def grid_cardinality(Lambda) -> int:
    """Closed-form ``|G| = sum_s sum_{e in E_s} prod_{j in supp(s-e)} (s-e)_j``."""
    total = 0
    for s in Lambda:
        s = as_index(s)
        vals = [v for _, v in s.items()]
        # each active coordinate contributes s_j (e_j = 0) or s_j - 1 (e_j = 1),
        # with an empty factor counted as 1
        term = 1
        for v in vals:
            term *= v + (v - 1 if v > 1 else 1)
        total += term
    return total


def _expand(s: MultiIndex, d: int) -> Iterator[tuple]:
    sup = s.support
    dense = s.dense(d)
    for bits in product((0, 1), repeat=len(sup)):
        lev = list(dense)
        e = {}
        for j, bit in zip(sup, bits):
            if bit:
                lev[j - 1] -= 1
                e[j] = 1
        yield MultiIndex(e), tuple(lev), (-1) ** sum(bits)


@dataclass(eq=False)
class SparseOperator:
    Lambda: tuple
    spec: MeasureSpec
    d: int
    levels: np.ndarray       # (R, d) per-row level vector s - e
    ks: np.ndarray           # (R, d) 1-based node numbers, 0 where the level is 0
    coef: np.ndarray         # (R,) combination coefficient sum of (-1)^|e|
    row_point: np.ndarray    # (R,) index into ``points``
    points: np.ndarray       # (P, d) distinct parameter points
    weights: np.ndarray      # (R,) tensor Gauss weight of each row
    n_triples: int

    @property
    def size(self) -> int:
        """``|G(xi)|``, the number of (s, e, k) triples."""
        return self.n_triples

    def keys(self) -> Iterator[GridPointKey]:
        for s in self.Lambda:
            for e, lev, _ in _expand(s, self.d):
                sup = [j for j in range(self.d) if lev[j]]
                for kk in product(*(range(1, lev[j] + 1) for j in sup)):
                    yield GridPointKey(s, e, MultiIndex({j + 1: v for j, v in zip(sup, kk)}))

    def key_row(self, key: GridPointKey) -> int:
        lev = tuple(a - b for a, b in zip(key.s.dense(self.d), key.e.dense(self.d)))
        return self._row_lookup[(lev, key.k.dense(self.d))]

    def point_of(self, key: GridPointKey) -> np.ndarray:
        return self.points[self.row_point[self.key_row(key)]]

    def sign_of(self, key: GridPointKey) -> int:
        return -1 if key.e.abs1 % 2 else 1

    def weight_of(self, key: GridPointKey) -> float:
        return float(self.weights[self.key_row(key)])

    def export_lines(self) -> Iterator[str]:
        """``sign, weight, y_1 ... y_d`` per triple."""
        for key in self.keys():
            r = self.key_row(key)
            y = self.points[self.row_point[r]]
            yield ", ".join([str(self.sign_of(key)), repr(float(self.weights[r]))]
                            + [repr(float(v)) for v in y])


def operator_from_set(Lambda, spec: MeasureSpec, d: int) -> SparseOperator:
    """Sparse operator for an explicit (downward-closed) index set."""
    Lambda = tuple(sorted({as_index(s) for s in Lambda}, key=MultiIndex.sort_key))
    if not Lambda:
        raise ValueError("index set is empty")
    if any(s.max_dim > d for s in Lambda):
        raise ValueError(f"index set uses dimensions beyond d={d}")
    coef_by_level = {}
    n_triples = 0
    for s in Lambda:
        for _, lev, sign in _expand(s, d):
            coef_by_level[lev] = coef_by_level.get(lev, 0) + sign
            n_triples += math.prod(v for v in lev if v)
    lev_rows, k_rows, coef, weights = [], [], [], []
    for lev in sorted(coef_by_level):
        sup = [j for j in range(d) if lev[j]]
        rules = {j: gauss_rule(spec, lev[j]) for j in sup}
        for kk in product(*(range(1, lev[j] + 1) for j in sup)):
            k = [0] * d
            w = 1.0
            for j, v in zip(sup, kk):
                k[j] = v
                w *= rules[j].weights[v - 1]
            lev_rows.append(lev)
            k_rows.append(tuple(k))
            coef.append(coef_by_level[lev])
            weights.append(w)
    levels = np.array(lev_rows, dtype=np.int64).reshape(-1, d)
    ks = np.array(k_rows, dtype=np.int64).reshape(-1, d)
    coords = np.zeros(levels.shape)
    for j in range(d):
        for m in np.unique(levels[:, j]):
            if m == 0:
                continue
            nodes = gauss_rule(spec, int(m)).nodes
            sel = levels[:, j] == m
            coords[sel, j] = nodes[ks[sel, j] - 1]
    points, row_point = np.unique(coords, axis=0, return_inverse=True) if d else \
        (np.zeros((1, 0)), np.zeros(len(coef), dtype=np.int64))
    op = SparseOperator(Lambda, spec, d, levels, ks, np.array(coef, dtype=float),
                        np.asarray(row_point).ravel(), points, np.array(weights), n_triples)
    op._row_lookup = {(tuple(levels[r]), tuple(ks[r])): r for r in range(len(coef))}
    return op


def build_operator(w, xi: float, d: int, spec: MeasureSpec, cap: int = 200_000) -> SparseOperator:
    """``I_{Lambda(xi)}`` for the weight family ``w``."""
    return operator_from_set(build_lambda(w, xi, d, cap).indices, spec, d)


def acquire(op: SparseOperator, func: Callable) -> np.ndarray:
    """Evaluate ``func`` (``(n, d) -> (n, ndof)``) once per distinct grid point."""
    vals = np.asarray(func(op.points), dtype=float)
    return vals.reshape(op.points.shape[0], -1)


def sample_dict(op: SparseOperator, values: np.ndarray) -> dict:
    """Expand per-point values into a ``GridPointKey -> value`` mapping."""
    return {key: values[op.row_point[op.key_row(key)]] for key in op.keys()}


def _row_values(op: SparseOperator, samples) -> np.ndarray:
    if isinstance(samples, dict):
        first = next(iter(samples.values()), None)
        if first is None:
            raise MissingSample("no samples supplied")
        ndof = np.atleast_1d(first).size
        out = np.zeros((len(op.coef), ndof))
        for key in op.keys():
            try:
                val = samples[key]
            except KeyError:
                raise MissingSample(f"no sample for grid key {key}") from None
            out[op.key_row(key)] += op.sign_of(key) * np.atleast_1d(val)
        return out
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] != op.points.shape[0]:
        raise MissingSample(f"expected {op.points.shape[0]} point samples, got {arr.shape[0]}")
    return op.coef[:, None] * arr[op.row_point]


def _eval_tables(op: SparseOperator, Y):
    N = Y.shape[0]
    maxlev = int(op.levels.max()) if op.levels.size else 0
    present = [int(m) for m in range(1, maxlev + 1) if np.any(op.levels == m)]
    offset = {0: 0}
    pos = 1
    for m in present:
        offset[m] = pos
        pos += m
    tables = np.zeros((op.d, N, pos))
    tables[:, :, 0] = 1.0
    for j in range(op.d):
        for m in present:
            if np.any(op.levels[:, j] == m):
                tables[j, :, offset[m]: offset[m] + m] = lagrange_basis(op.spec, m).matrix(Y[:, j])
    off = np.zeros_like(op.levels)
    for m, o in offset.items():
        off[op.levels == m] = o
    cols = np.where(op.levels > 0, off + op.ks - 1, 0)
    return tables, cols


def interpolate(op: SparseOperator, samples, Y, chunk: int = 256) -> np.ndarray:
    """``I_Lambda v`` at the rows of ``Y`` (a single point gives a 1-row result).

    ``samples`` is either a ``GridPointKey -> value`` mapping or an array of
    values aligned with ``op.points``.
    """
    rows = _row_values(op, samples)
    keep = np.any(rows != 0, axis=1)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[1] != op.d:
        raise ValueError(f"evaluation points need {op.d} coordinates")
    sub = _Sub(op, keep)
    out = np.zeros((Y.shape[0], rows.shape[1]))
    if not np.any(keep):
        return out
    for start in range(0, Y.shape[0], chunk):
        Yc = Y[start: start + chunk]
        if op.d == 0:
            B = np.ones((Yc.shape[0], int(keep.sum())))
        else:
            tables, cols = _eval_tables(sub, Yc)
            B = kernels.gather_product(tables, cols, np.ones(cols.shape[0]))
        out[start: start + chunk] = B @ rows[keep]
    return out


class _Sub:
    """Row subset view used during evaluation."""

    def __init__(self, op, keep):
        self.levels = op.levels[keep]
        self.ks = op.ks[keep]
        self.d = op.d
        self.spec = op.spec


def quadrature(op: SparseOperator, samples) -> np.ndarray:
    """``Q_Lambda v = sum (-1)^|e| w_{s-e;k} v(y_{s-e;k})``."""
    rows = _row_values(op, samples)
    return op.weights @ rows


@dataclass(frozen=True)
class ErrorEstimate:
    value: float
    stderr: float


def mc_l2_error(exact: np.ndarray, approx: np.ndarray, h: float | None) -> ErrorEstimate:
    diff = exact - approx
    sq = (v_norm(diff, h) if h is not None else np.linalg.norm(diff, axis=1)) ** 2
    sq = np.atleast_1d(sq)
    mean = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(sq.size)) if sq.size > 1 else 0.0
    val = math.sqrt(mean)
    return ErrorEstimate(val, se / (2.0 * val) if val > 0 else math.sqrt(se))


def l2_error(op: SparseOperator, prob: ParametricProblem | None, n_samples: int = 500,
             seed: int = 0, samples=None, func: Callable | None = None) -> ErrorEstimate:
    """MC estimate of ``||u - I_Lambda u||_{L2(lambda; V)}`` with fresh solves."""
    func = func if func is not None else prob.solve_batch
    if samples is None:
        samples = acquire(op, func)
    rng = np.random.default_rng(seed)
    Y = sample(op.spec, rng, n_samples, op.d)
    exact = np.asarray(func(Y), dtype=float).reshape(n_samples, -1)
    h = prob.mesh.h if prob is not None else None
    return mc_l2_error(exact, interpolate(op, samples, Y), h)


@dataclass(frozen=True)
class QuadError:
    v_error: float
    functional_error: float | None = None


def quad_error(op: SparseOperator, prob: ParametricProblem | None, reference, functional=None,
               samples=None, func: Callable | None = None) -> QuadError:
    """``||reference - Q_Lambda u||_V`` and optionally ``|<phi, reference - Q_Lambda u>|``."""
    func = func if func is not None else prob.solve_batch
    if samples is None:
        samples = acquire(op, func)
    diff = np.asarray(reference, dtype=float) - quadrature(op, samples)
    err = v_norm(diff, prob.mesh.h) if prob is not None else float(np.linalg.norm(diff))
    ferr = None if functional is None else float(abs(np.asarray(functional) @ diff))
    return QuadError(float(err), ferr)
