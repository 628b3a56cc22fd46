"""Piecewise-linear Galerkin solver for -(a(y) u')' = f on (0, 1), u(0) = u(1) = 0,
with the parametric coefficient a(y) = exp(sum_j y_j psi_j)."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import NonPositiveCoefficient
from .measures import MeasureSpec

_GP = 1.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class SpatialMesh:
    n_elems: int

    def __post_init__(self):
        if self.n_elems < 2:
            raise ValueError("mesh needs at least two elements")

    @property
    def h(self) -> float:
        return 1.0 / self.n_elems

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_elems + 1)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def gauss_points(self) -> np.ndarray:
        """Two Gauss-Legendre points per element, element-major."""
        mid = (np.arange(self.n_elems) + 0.5) * self.h
        off = 0.5 * self.h * _GP
        return np.column_stack([mid - off, mid + off]).ravel()


@dataclass(frozen=True)
class FemSolution:
    dof: np.ndarray
    mesh: SpatialMesh


def sine_psi(j: int, c: float, tau: float) -> Callable:
    """``psi_j(x) = c j**-tau sin(j pi x)``."""
    amp = c * j ** (-tau)
    return lambda x: amp * np.sin(j * np.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class ParametricProblem:
    mesh: SpatialMesh
    spec: MeasureSpec
    psi: tuple
    f: float | Callable = 1.0
    sup_norms: tuple | None = None
    allow_large_b: bool = False
    label: str = ""
    _data: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "psi", tuple(self.psi))
        if self.sup_norms is None:
            grid = np.linspace(0.0, 1.0, 4 * self.mesh.n_elems + 1)
            grid = np.concatenate([grid, self.mesh.gauss_points])
            b = tuple(float(np.max(np.abs(p(grid)))) if self.psi else 0.0 for p in self.psi)
            object.__setattr__(self, "sup_norms", b)
        else:
            object.__setattr__(self, "sup_norms", tuple(float(x) for x in self.sup_norms))
        if len(self.sup_norms) != self.d:
            raise ValueError("sup_norms length must equal the number of psi functions")
        if not all(math.isfinite(x) for x in self.sup_norms):
            raise ValueError("every psi_j must be bounded")
        if self.spec.is_gamma and self.b0 >= 0.5 and not self.allow_large_b:
            raise ValueError(
                f"max_j ||psi_j||_inf = {self.b0:.4g} must be < 1/2 for gamma inputs "
                "(pass allow_large_b=True to override)")

    @classmethod
    def sine_family(cls, d: int, c: float = 0.05, tau: float = 2.0, n_elems: int = 128,
                    spec: MeasureSpec | None = None, f: float = 1.0, **kw):
        spec = spec or MeasureSpec.gamma(2.0)
        psi = [sine_psi(j, c, tau) for j in range(1, d + 1)]
        norms = [c * j ** (-tau) for j in range(1, d + 1)]
        label = f"sine(c={c!r},tau={tau!r})"
        return cls(SpatialMesh(n_elems), spec, psi, f, sup_norms=norms, label=label, **kw)

    @property
    def d(self) -> int:
        return len(self.psi)

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.sup_norms)

    @property
    def b0(self) -> float:
        return max(self.sup_norms, default=0.0)

    @property
    def psi_gp(self) -> np.ndarray:
        if "psi_gp" not in self._data:
            gp = self.mesh.gauss_points
            if self.d:
                arr = np.vstack([np.broadcast_to(p(gp), gp.shape) for p in self.psi])
            else:
                arr = np.zeros((0, gp.size))
            self._data["psi_gp"] = np.ascontiguousarray(arr, dtype=float)
        return self._data["psi_gp"]

    @property
    def psi_nodes(self) -> np.ndarray:
        if "psi_nodes" not in self._data:
            x = self.mesh.nodes
            arr = np.vstack([np.broadcast_to(p(x), x.shape) for p in self.psi]) if self.d \
                else np.zeros((0, x.size))
            self._data["psi_nodes"] = arr
        return self._data["psi_nodes"]

    @property
    def load(self) -> np.ndarray:
        """``<f, phi_i>`` for the interior hat functions."""
        if "load" not in self._data:
            mesh = self.mesh
            if callable(self.f):
                gp = mesh.gauss_points
                fv = np.asarray(self.f(gp), dtype=float) * np.ones_like(gp)
                left = (gp - np.repeat(mesh.nodes[:-1], 2)) / mesh.h  # rising hat
                w = 0.5 * mesh.h
                rise = (fv * left * w).reshape(-1, 2).sum(axis=1)
                fall = (fv * (1.0 - left) * w).reshape(-1, 2).sum(axis=1)
                load = rise[:-1] + fall[1:]
            else:
                load = np.full(mesh.n_elems - 1, float(self.f) * mesh.h)
            self._data["load"] = load
        return self._data["load"]

    def fingerprint(self) -> str:
        """Content hash of everything the solution map depends on."""
        h = hashlib.sha256()
        h.update(f"{self.spec.kind}:{self.spec.shape!r}:{self.mesh.n_elems}:{self.d}".encode())
        h.update(np.ascontiguousarray(self.psi_gp).tobytes())
        h.update(np.ascontiguousarray(self.load).tobytes())
        return h.hexdigest()[:16]

    def solve_batch(self, Y) -> np.ndarray:
        """Interior nodal values for every row of ``Y`` (shape ``(n, d)``)."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape[1] != self.d:
            raise ValueError(f"parameter points need {self.d} coordinates, got {Y.shape[1]}")
        if self.d == 0:
            Y = np.zeros((Y.shape[0], 1))
            psi = np.zeros((1, self.psi_gp.shape[1]))
        else:
            psi = self.psi_gp
        U, status = kernels.fem_solve_batch(Y, psi, self.load, self.mesh.h)
        if status:
            raise NonPositiveCoefficient("diffusion coefficient is not positive and finite")
        return U


def coefficient_at(prob: ParametricProblem, y, x) -> float:
    y = np.asarray(y, dtype=float)
    val = sum(yj * float(np.asarray(p(x))) for yj, p in zip(y, prob.psi))
    return math.exp(val)


def solve(prob: ParametricProblem, y) -> FemSolution:
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("parameter point must be finite")
    return FemSolution(prob.solve_batch(y[None, :])[0], prob.mesh)


def v_norm(sol, h: float | None = None):
    """Discrete H^1_0 seminorm; accepts a :class:`FemSolution` or raw dofs
    (last axis) together with ``h``."""
    if isinstance(sol, FemSolution):
        dof, h = sol.dof, sol.mesh.h
    else:
        dof = np.asarray(sol, dtype=float)
        if h is None:
            h = 1.0 / (dof.shape[-1] + 1)
    pad = [(0, 0)] * (dof.ndim - 1) + [(1, 1)]
    full = np.pad(dof, pad)
    slope = np.diff(full, axis=-1) / h
    out = np.sqrt(np.sum(slope * slope, axis=-1) * h)
    return float(out) if np.ndim(out) == 0 else out


def v_inner(u, v, h: float):
    """Discrete H^1_0 inner product along the last axis."""
    pad = [(0, 0)] * (np.ndim(u) - 1) + [(1, 1)]
    du = np.diff(np.pad(u, pad), axis=-1)
    pad = [(0, 0)] * (np.ndim(v) - 1) + [(1, 1)]
    dv = np.diff(np.pad(v, pad), axis=-1)
    return np.sum(du * dv, axis=-1) / h


def f_dual_norm(prob: ParametricProblem) -> float:
    """||f||_{V'} through the discrete Riesz representative (a = 1)."""
    if "fdual" not in prob._data:
        U, _ = kernels.fem_solve_batch(np.zeros((1, 1)), np.zeros((1, 2 * prob.mesh.n_elems)),
                                       prob.load, prob.mesh.h)
        prob._data["fdual"] = v_norm(U[0], prob.mesh.h)
    return prob._data["fdual"]


def b_sup(prob: ParametricProblem, Y) -> np.ndarray:
    """``||b(y)||_inf`` sampled on nodes and element Gauss points, per row of ``Y``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if prob.d == 0:
        return np.zeros(Y.shape[0])
    vals = np.concatenate([Y @ prob.psi_gp, Y @ prob.psi_nodes], axis=1)
    return np.max(np.abs(vals), axis=1)


def apriori_bound(prob: ParametricProblem, y) -> float:
    """``exp(||b(y)||_inf) ||f||_{V'}``."""
    return float(math.exp(b_sup(prob, y)[0]) * f_dual_norm(prob))


def dual_norm(g, h: float) -> float:
    """``||phi||_{V'}`` for the functional ``v -> g . v`` on interior dofs."""
    g = np.asarray(g, dtype=float)
    n_el = g.size + 1
    z, _ = kernels.fem_solve_batch(np.zeros((1, 1)), np.zeros((1, 2 * n_el)), g, h)
    return float(math.sqrt(max(float(g @ z[0]), 0.0)))
