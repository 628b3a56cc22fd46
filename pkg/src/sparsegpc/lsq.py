"""Weighted least squares on the first ``m`` sigma-ordered basis functions.

Points are drawn from the Christoffel-tilted law ``(1/m) sum_j phi_j^2 dlambda``
as an equal mixture of the product densities ``phi_j^2 dlambda``; each
one-dimensional factor ``L_k^2 dlambda`` is sampled by rejection from a
degree-adapted proposal whose envelope is measured on a dense scan.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg, stats

from .errors import RankDeficientWarning, RejectionStall
from .gpc import GpcExpansion, basis_matrix, degree_matrix
from .measures import MeasureSpec, log_density, sample
from .multiindex import MultiIndex, as_index, first_indices
from .orthopoly import gauss_rule, orthonormal_values

DEFAULT_RULE_CONSTANT = 43200
RANK_TOL = 1e-10
MIN_ACCEPTANCE = 1e-4


def rule_m(n: int, rule_constant: float = DEFAULT_RULE_CONSTANT) -> int:
    """``m = ceil(n / rule_constant)``, at least 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return max(1, math.ceil(n / rule_constant))


# ---------------------------------------------------------------------------
# one-dimensional L_k^2 dlambda sampler
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Proposal:
    dist: object
    log_env: float   # log of the envelope constant (includes the safety margin)


def _scan_grid(spec: MeasureSpec, k: int) -> np.ndarray:
    if spec.is_gamma:
        top = 4.0 * k + 2.0 * spec.shape + 60.0
        return np.unique(np.concatenate([np.geomspace(1e-12, top, 4000),
                                         np.linspace(0.0, top, 40 * k + 4000)[1:],
                                         np.linspace(top, 4 * top, 4000)]))
    top = 2.0 * math.sqrt(2 * k + 1) + 12.0
    return np.linspace(-top, top, 80 * k + 8001)


@lru_cache(maxsize=256)
def _proposal(spec: MeasureSpec, k: int) -> _Proposal:
    y = _scan_grid(spec, k)
    logp = 2.0 * np.log(np.abs(orthonormal_values(spec, k, y)[0, :, k]) + 1e-300) \
        + log_density(spec, y)
    best = None
    if spec.is_gamma:
        shape = min(spec.shape, 0.5)
        for th in np.geomspace(1.2, 20.0 * k + 20.0, 48):
            dist = stats.gamma(shape, scale=th)
            ratio = np.max(logp - dist.logpdf(y))
            if best is None or ratio < best[0]:
                best = (ratio, dist)
    else:
        for sd in np.geomspace(1.0, 4.0 * math.sqrt(k + 1) + 2.0, 48):
            dist = stats.norm(scale=sd)
            ratio = np.max(logp - dist.logpdf(y))
            if best is None or ratio < best[0]:
                best = (ratio, dist)
    return _Proposal(best[1], float(best[0]) + math.log(1.05))


def sample_squared(spec: MeasureSpec, k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` exact draws from ``L_k(y)^2 dlambda(y)``."""
    if k == 0:
        return sample(spec, rng, n)
    prop = _proposal(spec, k)
    if -prop.log_env < math.log(MIN_ACCEPTANCE):
        raise RejectionStall(f"envelope {math.exp(prop.log_env):.3g} for degree {k} is too large")
    out = np.empty(0)
    tried = 0
    while out.size < n:
        batch = max(64, int(1.3 * (n - out.size) * math.exp(prop.log_env)))
        cand = prop.dist.rvs(size=batch, random_state=rng)
        lp = 2.0 * np.log(np.abs(orthonormal_values(spec, k, cand)[0, :, k]) + 1e-300) \
            + log_density(spec, cand)
        accept = np.log(rng.random(batch)) < lp - prop.dist.logpdf(cand) - prop.log_env
        out = np.concatenate([out, cand[accept]])
        tried += batch
        if tried > 1000 and out.size / tried < MIN_ACCEPTANCE:
            raise RejectionStall(f"acceptance rate {out.size / tried:.2e} below {MIN_ACCEPTANCE}")
    return out[:n]


def christoffel_sample(spec: MeasureSpec, basis, n: int, d: int,
                       rng: np.random.Generator) -> np.ndarray:
    """``n`` draws from ``(1/m) sum_j phi_j^2 dlambda`` on ``d`` coordinates."""
    D = degree_matrix(basis, d)
    pick = rng.integers(0, len(basis), size=n)
    Y = np.empty((n, d))
    for j in range(d):
        degs = D[pick, j]
        for k in np.unique(degs):
            sel = np.flatnonzero(degs == k)
            Y[sel, j] = sample_squared(spec, int(k), sel.size, rng)
    return Y


# ---------------------------------------------------------------------------
# designs and fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LsqDesign:
    points: np.ndarray
    weights: np.ndarray
    basis: tuple
    spec: MeasureSpec
    d: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return len(self.basis)

    @property
    def phi(self) -> np.ndarray:
        if "phi" not in self._cache:
            self._cache["phi"] = basis_matrix(self.spec, self.basis, self.points)
        return self._cache["phi"]

    @property
    def gram(self) -> np.ndarray:
        """``(1/n) sum_i w_i phi(y_i) phi(y_i)^T``."""
        A = self.phi * np.sqrt(self.weights / self.n)[:, None]
        return A.T @ A

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.gram))

    def export_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow([f"y_{j + 1}" for j in range(self.d)] + ["weight"])
            for y, w in zip(self.points, self.weights):
                wr.writerow([repr(float(v)) for v in y] + [repr(float(w))])

    def solver(self) -> np.ndarray:
        """``H`` with ``coeffs = H @ f(y)``: column-pivoted QR of the weighted
        design matrix, or a truncated pseudo-inverse when rank deficient."""
        if "H" in self._cache:
            return self._cache["H"]
        scale = np.sqrt(self.weights / self.n)
        A = self.phi * scale[:, None]
        Q, R, piv = linalg.qr(A, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > RANK_TOL * diag[0])) if diag.size and diag[0] > 0 else 0
        if rank < self.m:
            warnings.warn(f"weighted design has rank {rank} < m = {self.m}; "
                          "using the minimum-norm solution", RankDeficientWarning, stacklevel=3)
            H = np.linalg.pinv(A, rcond=RANK_TOL) * scale[None, :]
        else:
            Hp = linalg.solve_triangular(R, Q.T) * scale[None, :]
            H = np.empty_like(Hp)
            H[piv] = Hp
        self._cache["H"] = H
        self._cache["rank"] = rank
        return H

    @property
    def rank(self) -> int:
        self.solver()
        return self._cache["rank"]


def make_design(spec: MeasureSpec, d: int, basis, n: int, seed: int = 0) -> LsqDesign:
    """Design on an explicit basis (``n >= len(basis)``)."""
    basis = tuple(as_index(s) for s in basis)
    if n < len(basis):
        raise ValueError(f"n = {n} must be at least m = {len(basis)}")
    rng = np.random.default_rng(seed)
    Y = christoffel_sample(spec, basis, n, d, rng)
    phi = basis_matrix(spec, basis, Y)
    w = len(basis) / np.sum(phi * phi, axis=1)
    des = LsqDesign(Y, w, basis, spec, d)
    des._cache["phi"] = phi
    return des


def design(prob, w, n: int, rule_constant: float = DEFAULT_RULE_CONSTANT, seed: int = 0, *,
           spec: MeasureSpec | None = None, d: int | None = None) -> LsqDesign:
    """``m = ceil(n / rule_constant)`` sigma-ordered basis functions, ``n`` points."""
    if prob is not None:
        spec, d = prob.spec, prob.d
    m = rule_m(n, rule_constant)
    basis = first_indices(w, d, m)
    return make_design(spec, d, basis, n, seed)


@dataclass(frozen=True)
class LsqFit:
    design: LsqDesign
    coeffs: np.ndarray          # (m,) scalar or (m, ndof)
    rank: int

    def expansion(self, h: float | None = None) -> GpcExpansion:
        c = self.coeffs if self.coeffs.ndim == 2 else self.coeffs[:, None]
        return GpcExpansion(dict(zip(self.design.basis, c)), self.design.spec,
                            self.design.d, h)

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.design.m


def fit_scalar(des: LsqDesign, f) -> LsqFit:
    f = np.asarray(f, dtype=float)
    if f.shape != (des.n,):
        raise ValueError(f"expected {des.n} scalar samples")
    H = des.solver()
    return LsqFit(des, H @ f, des.rank)


def fit_bochner(des: LsqDesign, U) -> LsqFit:
    """Componentwise fit of vector-valued samples ``U`` (shape ``(n, ndof)``)."""
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != des.n:
        raise ValueError(f"expected samples of shape ({des.n}, ndof)")
    H = des.solver()
    C = np.empty((des.m, U.shape[1]))
    for c in range(U.shape[1]):
        C[:, c] = H @ np.ascontiguousarray(U[:, c])
    return LsqFit(des, C, des.rank)


def quadrature_weights(des: LsqDesign) -> np.ndarray:
    """``w_i = int h_i dlambda`` with ``h_i = sum_j H[j, i] phi_j``, integrating each
    basis function by a tensor Gauss rule."""
    D = degree_matrix(des.basis, des.d)
    kmax = int(D.max()) if D.size else 0
    rule = gauss_rule(des.spec, kmax + 1)
    means = rule.weights @ orthonormal_values(des.spec, kmax, rule.nodes)[0]
    integ = np.prod(means[D], axis=1)
    return integ @ des.solver()


def lsq_quadrature(fit: LsqFit, samples=None, path: str = "coefficient") -> np.ndarray:
    """Mean of the fitted surrogate. ``path="coefficient"`` reads off the ``L_0``
    coefficient; ``path="weights"`` forms ``sum_i w_i u(y_i)`` from ``samples``."""
    if path == "coefficient":
        zero = MultiIndex.zero()
        for j, s in enumerate(fit.design.basis):
            if s == zero:
                return np.array(fit.coeffs[j], dtype=float)
        return np.zeros(fit.coeffs.shape[1:])
    if path == "weights":
        if samples is None:
            raise ValueError("the weights path needs the samples")
        return quadrature_weights(fit.design) @ np.asarray(samples, dtype=float)
    raise ValueError(f"unknown path {path!r}")
