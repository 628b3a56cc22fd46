"""GPC coefficients by brute-force tensor Gauss quadrature, plus diagnostics."""
from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import kernels
from .constants import k_constant  # noqa: F401  (public re-export)
from .errors import BudgetExceeded, DegenerateFit
from .measures import MeasureSpec, sample
from .multiindex import INDEX_HEADER, MultiIndex, as_index, dumps_indices, loads_indices
from .orthopoly import gauss_rule, orthonormal_values
from .pde import ParametricProblem, b_sup, v_norm

DEFAULT_NODE_CAP = 10**7


def degree_matrix(indices, d: int) -> np.ndarray:
    """Dense ``(len(indices), d)`` integer array of degrees."""
    out = np.zeros((len(indices), max(d, 1)), dtype=np.int64)
    for r, s in enumerate(indices):
        for j, v in as_index(s).items():
            if j > d:
                raise ValueError(f"{s} has dimension {j} beyond d={d}")
            out[r, j - 1] = v
    return out


def basis_matrix(spec: MeasureSpec, indices, Y) -> np.ndarray:
    """``B[i, r] = L_{s_r}(y_i)`` for the tensorized orthonormal basis."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n, d = Y.shape
    cols = degree_matrix(indices, d)
    if len(indices) == 0:
        return np.zeros((n, 0))
    kmax = int(cols.max())
    if d == 0:
        return np.ones((n, len(indices)))
    tables = np.stack([orthonormal_values(spec, kmax, Y[:, j])[0] for j in range(d)])
    return kernels.gather_product(tables, cols, np.ones(len(indices)))


@dataclass
class GpcExpansion:
    """Finite expansion ``sum_s u_s L_s`` with vector-valued coefficients.

    ``h`` is the mesh width used for V-norms; ``None`` means the coefficients
    are plain vectors and norms are Euclidean.
    """

    coeffs: dict
    spec: MeasureSpec
    d: int
    h: float | None = None

    def __post_init__(self):
        clean = {}
        for s, c in self.coeffs.items():
            s = as_index(s)
            if s.max_dim > self.d:
                raise ValueError(f"{s} exceeds truncation dimension {self.d}")
            c = np.atleast_1d(np.asarray(c, dtype=float))
            if not np.all(np.isfinite(c)):
                raise ValueError(f"coefficient of {s} is not finite")
            clean[s] = c
        self.coeffs = clean

    @property
    def indices(self) -> list:
        return sorted(self.coeffs, key=MultiIndex.sort_key)

    @property
    def ndof(self) -> int:
        return next(iter(self.coeffs.values())).size if self.coeffs else 0

    def matrix(self, indices=None) -> np.ndarray:
        idx = self.indices if indices is None else indices
        if not idx:
            return np.zeros((0, self.ndof))
        return np.vstack([self.coeffs[s] for s in idx])

    def evaluate(self, Y) -> np.ndarray:
        """Values at the rows of ``Y``; shape ``(n, ndof)``."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        idx = self.indices
        if not idx:
            return np.zeros((Y.shape[0], 0))
        return basis_matrix(self.spec, idx, Y) @ self.matrix(idx)

    def norm_of(self, vec) -> np.ndarray | float:
        if self.h is None:
            return np.linalg.norm(vec, axis=-1)
        return v_norm(vec, self.h)

    def norms(self) -> dict:
        return {s: float(self.norm_of(c)) for s, c in self.coeffs.items()}

    def restrict(self, indices) -> "GpcExpansion":
        keep = {as_index(s) for s in indices}
        return GpcExpansion({s: c for s, c in self.coeffs.items() if s in keep},
                            self.spec, self.d, self.h)


# ---------------------------------------------------------------------------
# tensor oracle
# ---------------------------------------------------------------------------

class CoefficientCache:
    """One binary file per (problem, s, level) plus a per-problem index file."""

    MAGIC = b"SGPC"
    VERSION = 1

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def _tag(s: MultiIndex) -> str:
        line = s.to_line()
        return line.replace(":", "-").replace(" ", "_") if line else "0"

    def path(self, fp: str, s: MultiIndex, level: int) -> Path:
        return self.root / f"{fp}_L{level}_{self._tag(s)}.coef"

    def index_path(self, fp: str) -> Path:
        return self.root / f"{fp}.index"

    def get(self, fp: str, s: MultiIndex, level: int, d: int):
        p = self.path(fp, s, level)
        if not p.exists():
            return None
        raw = p.read_bytes()
        try:
            magic, ver, dd, lev, slen = struct.unpack_from("<4sHIII", raw, 0)
            off = struct.calcsize("<4sHIII")
            stored = MultiIndex.from_line(raw[off: off + slen].decode())
            off += slen
            (ndof,) = struct.unpack_from("<Q", raw, off)
            off += 8
            if len(raw) != off + 8 * ndof:
                return None
        except (struct.error, ValueError, UnicodeDecodeError):
            return None  # damaged record: treat as a miss
        if magic != self.MAGIC or ver != self.VERSION or dd != d or lev != level or stored != s:
            return None
        return np.frombuffer(raw, dtype="<f8", count=ndof, offset=off).copy()

    def put(self, fp: str, s: MultiIndex, level: int, d: int, vec) -> None:
        p = self.path(fp, s, level)
        if p.exists() and self.get(fp, s, level, d) is not None:
            return
        sb = s.to_line().encode()
        vec = np.ascontiguousarray(vec, dtype="<f8")
        payload = (struct.pack("<4sHIII", self.MAGIC, self.VERSION, d, level, len(sb)) + sb
                   + struct.pack("<Q", vec.size) + vec.tobytes())
        self._atomic_write(p, payload)
        self._update_index(fp, s)

    def _atomic_write(self, path: Path, payload: bytes) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _update_index(self, fp, s):
        ip = self.index_path(fp)
        known = set(loads_indices(ip.read_text())) if ip.exists() else set()
        if s in known:
            return
        known.add(s)
        text = dumps_indices(sorted(known, key=MultiIndex.sort_key))
        self._atomic_write(ip, text.encode())

    def entries(self) -> list:
        return sorted(self.root.glob("*.coef"))

    def content_hash(self) -> str:
        """Git-style content address over every stored record."""
        import hashlib

        h = hashlib.sha1()
        for p in self.entries():
            data = p.read_bytes()
            h.update(f"blob {len(data)}\0".encode() + data)
        return h.hexdigest()

    def clear(self) -> int:
        n = 0
        for p in list(self.entries()) + list(self.root.glob("*.index")):
            p.unlink()
            n += 1
        return n


def tensor_size(level: int, d: int) -> int:
    return level ** d


def tensor_rule(spec: MeasureSpec, level: int, d: int):
    """Full tensor Gauss rule with ``level`` points per axis; ``(nodes, weights)``."""
    rule = gauss_rule(spec, level)
    grids = np.meshgrid(*([rule.nodes] * d), indexing="ij")
    nodes = np.column_stack([g.ravel() for g in grids])
    wg = np.meshgrid(*([rule.weights] * d), indexing="ij")
    weights = np.prod(np.column_stack([g.ravel() for g in wg]), axis=1)
    return nodes, weights


def oracle_expansion(prob: ParametricProblem | None, indices, level: int, *,
                     node_cap: int = DEFAULT_NODE_CAP, integrand: Callable | None = None,
                     spec: MeasureSpec | None = None, d: int | None = None,
                     cache: CoefficientCache | None = None, chunk: int = 8192) -> GpcExpansion:
    """Project ``u`` (or ``integrand``) onto ``L_s`` for every ``s`` in ``indices``
    with a ``level``-point tensor Gauss rule over all ``d`` dimensions.

    ``integrand`` maps an ``(n, d)`` array of points to ``(n, ndof)`` values and
    stands in for the PDE solve.
    """
    if prob is not None:
        spec, d = prob.spec, prob.d
        h = prob.mesh.h
    else:
        if integrand is None or spec is None or d is None:
            raise ValueError("without a problem, pass integrand, spec and d")
        h = None
    func = integrand if integrand is not None else prob.solve_batch
    indices = [as_index(s) for s in indices]
    need = max((s.absinf for s in indices), default=0) + 1
    if level < need:
        raise ValueError(f"level {level} must be >= max_j s_j + 1 = {need}")
    total = tensor_size(level, d)
    if total > node_cap:
        raise BudgetExceeded(f"{level}^{d} = {total} nodes exceeds the cap {node_cap}")

    use_cache = cache is not None and integrand is None
    fp = prob.fingerprint() if use_cache else ""
    coeffs = {}
    todo = []
    for s in indices:
        hit = cache.get(fp, s, level, d) if use_cache else None
        if hit is None:
            todo.append(s)
        else:
            coeffs[s] = hit
    if todo:
        rule = gauss_rule(spec, level)
        cols = degree_matrix(todo, d)
        kmax = int(cols.max())
        table = orthonormal_values(spec, kmax, rule.nodes)[0]  # (level, kmax + 1)
        acc = None
        for start in range(0, total, chunk):
            flat = np.arange(start, min(start + chunk, total))
            idx = np.column_stack(np.unravel_index(flat, (level,) * d)) if d else \
                np.zeros((flat.size, 0), dtype=np.int64)
            Y = rule.nodes[idx]
            w = np.prod(rule.weights[idx], axis=1)
            U = np.atleast_2d(np.asarray(func(Y), dtype=float))
            if U.shape[0] != flat.size:
                U = U.reshape(flat.size, -1)
            if d:
                tabs = np.ascontiguousarray(np.stack([table[idx[:, j]] for j in range(d)]))
                B = kernels.gather_product(tabs, cols, np.ones(len(todo)))
            else:
                B = np.ones((flat.size, len(todo)))
            part = (B * w[:, None]).T @ U
            acc = part if acc is None else acc + part
        for r, s in enumerate(todo):
            coeffs[s] = acc[r]
            if use_cache:
                cache.put(fp, s, level, d, acc[r])
    return GpcExpansion({s: coeffs[s] for s in indices}, spec, d, h)


def gpc_coefficient(prob: ParametricProblem | None, s, level: int, **kw) -> np.ndarray:
    """Single coefficient ``u_s`` (see :func:`oracle_expansion`)."""
    s = as_index(s)
    return oracle_expansion(prob, [s], level, **kw).coeffs[s]


def level_convergence(prob, indices, level: int, **kw) -> float:
    """Largest relative change of ``||u_s||_V`` between ``level`` and ``2 * level``."""
    lo = oracle_expansion(prob, indices, level, **kw).norms()
    hi = oracle_expansion(prob, indices, 2 * level, **kw).norms()
    scale = max(max(hi.values()), 1e-300)
    return max(abs(lo[s] - hi[s]) / max(hi[s], 1e-12 * scale) for s in hi)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McEstimate:
    lhs: float
    rhs: float
    stderr: float

    def agree(self, n_se: float = 4.0) -> bool:
        return abs(self.lhs - self.rhs) <= n_se * self.stderr + 1e-12 * max(abs(self.rhs), 1.0)


def parseval_check(exp: GpcExpansion, n_samples: int = 4000, seed: int = 0) -> McEstimate:
    """MC mean of ``||u_Lambda(y)||^2`` against ``sum_s ||u_s||^2``."""
    if not exp.coeffs:
        return McEstimate(0.0, 0.0, 0.0)
    rng = np.random.default_rng(seed)
    Y = sample(exp.spec, rng, n_samples, exp.d)
    vals = np.asarray(exp.norm_of(exp.evaluate(Y))) ** 2
    rhs = float(sum(v * v for v in exp.norms().values()))
    return McEstimate(float(vals.mean()), rhs, float(vals.std(ddof=1) / math.sqrt(n_samples)))


@dataclass(frozen=True)
class SummabilityProfile:
    norms: np.ndarray
    p_hat: float
    slope: float
    infinite: bool


def summability_profile(exp_or_norms, min_count: int = 32) -> SummabilityProfile:
    """Sort the coefficient norms decreasingly and fit ``log c_k ~ -(1/p) log k``
    over the middle two quartiles."""
    if isinstance(exp_or_norms, GpcExpansion):
        vals = np.array(list(exp_or_norms.norms().values()))
    else:
        vals = np.asarray(list(exp_or_norms), dtype=float)
    if vals.size < min_count:
        raise ValueError(f"need at least {min_count} coefficients, got {vals.size}")
    c = np.sort(vals)[::-1]
    if np.all(c < 1e-14):
        raise DegenerateFit("every coefficient norm is below 1e-14")
    n = c.size
    k = np.arange(1, n + 1)
    lo, hi = n // 4, n - n // 4
    sel = slice(lo, hi)
    kk, cc = k[sel], c[sel]
    ok = cc > 0
    if ok.sum() < 2:
        raise DegenerateFit("too few positive norms in the fitting window")
    slope = float(np.polyfit(np.log(kk[ok]), np.log(cc[ok]), 1)[0])
    if slope > -1e-12:
        return SummabilityProfile(c, math.inf, slope, True)
    return SummabilityProfile(c, -1.0 / slope, slope, False)


@dataclass(frozen=True)
class BoundCheck:
    estimate: float
    stderr: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.estimate <= self.bound + 3.0 * self.stderr


def a_r_bound(prob: ParametricProblem, r: int, J) -> float:
    """Closed-form upper bound for ``A_r(J)``."""
    b = prob.b
    J = tuple(J)
    if prob.spec.is_gamma:
        K = k_constant(prob.spec, r, prob.b0)
        a = prob.spec.shape
        return math.exp(a * float(b.sum()) / (1.0 - 2.0 * prob.b0)) * K ** len(J)
    K = k_constant(prob.spec, r, prob.b0)
    return K ** len(J) * math.exp(float(b @ b) + math.sqrt(2.0 / math.pi) * float(b.sum()))


def a_r_bound_check(prob: ParametricProblem, r: int, J, n_samples: int = 20000,
                    seed: int = 0) -> BoundCheck:
    """MC estimate of ``A_r(J) = (E prod_{j in J}(1 + y_j)^{2r} exp(2||b(y)||_inf))^{1/2}``
    with a delta-method standard error, next to its closed-form bound."""
    J = tuple(sorted(set(int(j) for j in J)))
    if any(j < 1 or j > prob.d for j in J):
        raise ValueError(f"J must lie within 1..{prob.d}")
    if prob.spec.is_gamma and prob.b0 >= 0.5:
        raise ValueError("A_r(J) bound needs b0 < 1/2 for gamma inputs")
    rng = np.random.default_rng(seed)
    Y = sample(prob.spec, rng, n_samples, prob.d)
    g = np.exp(2.0 * b_sup(prob, Y))
    for j in J:
        g = g * (1.0 + Y[:, j - 1]) ** (2 * r)
    mean = float(g.mean())
    se2 = float(g.std(ddof=1) / math.sqrt(n_samples))
    est = math.sqrt(mean)
    return BoundCheck(est, se2 / (2.0 * est), a_r_bound(prob, r, J))


__all__ = [
    "BoundCheck", "CoefficientCache", "GpcExpansion", "INDEX_HEADER", "McEstimate",
    "SummabilityProfile", "a_r_bound", "a_r_bound_check", "basis_matrix", "degree_matrix",
    "gpc_coefficient", "k_constant", "level_convergence", "oracle_expansion",
    "parseval_check", "summability_profile", "tensor_rule",
]
