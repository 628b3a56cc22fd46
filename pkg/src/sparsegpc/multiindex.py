"""Finitely supported multi-indices, sparsity weights and sublevel index sets.

Dimensions are numbered from 1, matching the usual parametric notation
``y = (y_1, y_2, ...)``. Dense tuples (position ``i`` is dimension ``i + 1``)
are accepted wherever a multi-index is expected.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Iterator, NamedTuple

from .errors import UnsupportedIndex, Unbounded


class MultiIndex:
    """Sparse, immutable, hashable multi-index; zero entries are never stored."""

    __slots__ = ("_items", "_hash")

    def __init__(self, entries=None):
        if entries is None:
            items = ()
        elif isinstance(entries, MultiIndex):
            items = entries._items
        elif isinstance(entries, dict):
            items = tuple(sorted((int(j), int(v)) for j, v in entries.items() if v))
        else:
            items = tuple((i + 1, int(v)) for i, v in enumerate(entries) if v)
        for j, v in items:
            if j < 1 or v < 0:
                raise ValueError(f"invalid multi-index entry {j}:{v}")
        self._items = items
        self._hash = hash(items)

    @classmethod
    def zero(cls) -> "MultiIndex":
        return cls(())

    @classmethod
    def unit(cls, j: int, v: int = 1) -> "MultiIndex":
        return cls({j: v})

    def __getitem__(self, j: int) -> int:
        for jj, v in self._items:
            if jj == j:
                return v
        return 0

    def items(self):
        return self._items

    @property
    def support(self) -> tuple:
        return tuple(j for j, _ in self._items)

    @property
    def nnz(self) -> int:
        return len(self._items)

    @property
    def abs1(self) -> int:
        return sum(v for _, v in self._items)

    @property
    def absinf(self) -> int:
        return max((v for _, v in self._items), default=0)

    @property
    def max_dim(self) -> int:
        return self._items[-1][0] if self._items else 0

    def factorial(self) -> int:
        out = 1
        for _, v in self._items:
            out *= math.factorial(v)
        return out

    def power(self, k: float) -> float:
        """``prod_{j in supp} s_j ** k``."""
        out = 1.0
        for _, v in self._items:
            out *= float(v) ** k
        return out

    def dense(self, d: int) -> tuple:
        if self.max_dim > d:
            raise ValueError(f"{self} does not fit in {d} dimensions")
        out = [0] * d
        for j, v in self._items:
            out[j - 1] = v
        return tuple(out)

    def leq(self, other: "MultiIndex") -> bool:
        return all(v <= other[j] for j, v in self._items)

    def __add__(self, other):
        other = MultiIndex(other)
        out = dict(self._items)
        for j, v in other._items:
            out[j] = out.get(j, 0) + v
        return MultiIndex(out)

    def __sub__(self, other):
        other = MultiIndex(other)
        out = dict(self._items)
        for j, v in other._items:
            left = out.get(j, 0) - v
            if left < 0:
                raise ValueError(f"{self} - {other} is negative")
            out[j] = left
        return MultiIndex(out)

    def __eq__(self, other):
        if isinstance(other, MultiIndex):
            return self._items == other._items
        return NotImplemented

    def __hash__(self):
        return self._hash

    def sort_key(self):
        return (self.abs1, tuple((-j, v) for j, v in self._items))

    def __repr__(self):
        return "MultiIndex({%s})" % ", ".join(f"{j}: {v}" for j, v in self._items)

    # line format "j:s_j j:s_j ..." (the zero index is an empty line)
    def to_line(self) -> str:
        return " ".join(f"{j}:{v}" for j, v in self._items)

    @classmethod
    def from_line(cls, line: str) -> "MultiIndex":
        out = {}
        for tok in line.split():
            j, v = tok.split(":")
            if int(j) in out:
                raise ValueError(f"duplicate dimension in {line!r}")
            out[int(j)] = int(v)
        return cls(out)


def as_index(s) -> MultiIndex:
    return s if isinstance(s, MultiIndex) else MultiIndex(s)


INDEX_HEADER = "# sparsegpc multi-index set v1"


def dumps_indices(indices: Iterable[MultiIndex]) -> str:
    lines = [INDEX_HEADER] + [as_index(s).to_line() for s in indices]
    return "\n".join(lines) + "\n"


def loads_indices(text: str) -> list:
    lines = text.splitlines()
    if not lines or lines[0].strip() != INDEX_HEADER:
        raise ValueError("missing multi-index set header")
    return [MultiIndex.from_line(line) for line in lines[1:]]


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def p_factor(theta: float, lam: float, s) -> float:
    """``prod_j (1 + lam * s_j) ** theta`` over the support of ``s``."""
    if theta < 0 or lam < 0:
        raise ValueError("theta and lambda must be nonnegative")
    out = 1.0
    for _, v in as_index(s).items():
        out *= (1.0 + lam * v) ** theta
    return out


def r_min(p: float, theta: float) -> int:
    """Smallest integer r >= 1 with ``p * (r - theta) > 1``."""
    r = max(1, math.floor(theta + 1.0 / p) + 1)
    while p * (r - theta) <= 1:
        r += 1
    while r > 1 and p * (r - 1 - theta) > 1:
        r -= 1
    return r


RHO = "rho"
B = "b"


@dataclass(frozen=True)
class WeightFamily:
    """Parameters of the coefficient bound ``beta_s`` and the weight
    ``sigma_s = beta_s ** (p/2 - 1)``.

    ``mode="rho"``: ``beta_s = C0 * C1**|supp s| * s**-r * prod_j sum_{l=1}^{2r} rho_j**-l``.
    ``mode="b"``:   ``beta_s = C1 * C2**|supp s| * s**-r * sum_k (e b)**k |k|_1! / k!``
    with ``k`` ranging over ``supp k = supp s``, ``|k|_inf <= 2r``.
    """

    mode: str
    p: float
    r: int | None = None
    theta: float = 0.0
    lam: float = 0.0
    rho: tuple = ()
    b: tuple = ()
    C0: float = 1.0
    C1: float = 1.0
    C2: float = 1.0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False,
                         hash=False)

    def __post_init__(self):
        if self.mode not in (RHO, B):
            raise ValueError(f"unknown weight mode {self.mode!r}")
        if not 0 < self.p < 2:
            raise ValueError("p must lie in (0, 2)")
        if self.theta < 0 or self.lam < 0:
            raise ValueError("theta and lambda must be nonnegative")
        object.__setattr__(self, "rho", tuple(float(x) for x in self.rho))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if self.r is None:
            object.__setattr__(self, "r", r_min(self.p, self.theta_prime))
        if self.p * (self.r - self.theta_prime) <= 1:
            raise ValueError(
                f"r={self.r} violates p(r - theta') > 1 (p={self.p}, theta'={self.theta_prime})")
        if self.mode == RHO and any(x <= 0 for x in self.rho):
            raise ValueError("rho must be positive")
        if self.mode == B and any(x < 0 for x in self.b):
            raise ValueError("b must be nonnegative")

    @property
    def theta_prime(self) -> float:
        return 2.0 * self.theta / (2.0 - self.p)

    @property
    def q(self) -> float:
        return 2.0 * self.p / (2.0 - self.p)

    @property
    def dims(self) -> int:
        return len(self.rho) if self.mode == RHO else len(self.b)

    def _dim_sum_rho(self, j):
        rho = self.rho[j - 1]
        return sum(rho ** -l for l in range(1, 2 * self.r + 1))

    def _k_sum_b(self, support):
        # sum over k in {1..2r}^J of (e b)^k |k|! / k!, via the generating
        # polynomial prod_j sum_l (e b_j)^l t^l / l!
        key = ("b", support)
        if key in self._cache:
            return self._cache[key]
        poly = [1.0]
        for j in support:
            eb = math.e * self.b[j - 1]
            factor = [0.0] + [eb ** l / math.factorial(l) for l in range(1, 2 * self.r + 1)]
            new = [0.0] * (len(poly) + len(factor) - 1)
            for i, x in enumerate(poly):
                if x:
                    for l, y in enumerate(factor):
                        new[i + l] += x * y
            poly = new
        out = sum(math.factorial(n) * c for n, c in enumerate(poly))
        self._cache[key] = out
        return out

    def beta(self, s) -> float:
        s = as_index(s)
        support = s.support
        if support and support[-1] > self.dims:
            raise UnsupportedIndex(f"{s} uses dimensions beyond the {self.dims} weighted ones")
        if self.mode == RHO:
            out = self.C0 * self.C1 ** len(support) * s.power(-self.r)
            for j in support:
                out *= self._dim_sum_rho(j)
            return out
        if any(self.b[j - 1] == 0 for j in support):
            raise UnsupportedIndex(f"{s} activates a dimension with b_j = 0")
        return self.C1 * self.C2 ** len(support) * s.power(-self.r) * self._k_sum_b(support)

    def sigma(self, s) -> float:
        return self.beta(s) ** (self.p / 2.0 - 1.0)


def beta_weight(w: WeightFamily, s) -> float:
    return w.beta(s)


def sigma_weight(w: WeightFamily, s) -> float:
    return w.sigma(s)


# ---------------------------------------------------------------------------
# index sets
# ---------------------------------------------------------------------------

class IndexSet(NamedTuple):
    indices: tuple
    was_closed: bool


def _support_seeds(d):
    for mask in range(1 << d):
        yield MultiIndex({j + 1: 1 for j in range(d) if mask >> j & 1})


def _within_support(sigma_fn, start, threshold, cap, found):
    stack = [start]
    seen = {start}
    while stack:
        s = stack.pop()
        found.add(s)
        if len(found) > cap:
            raise Unbounded(f"index set exceeds cap {cap}; sigma may not grow")
        for j in s.support:
            t = s + MultiIndex.unit(j)
            if t not in seen:
                seen.add(t)
                if sigma_fn(t) <= threshold:
                    stack.append(t)


def sublevel_set(sigma_fn: Callable, threshold: float, d: int, cap: int = 200_000) -> set:
    """``{s : supp s within 1..d, sigma(s) <= threshold}``.

    Assumes only that ``sigma`` is nondecreasing in each active coordinate
    for a fixed support, which holds for both weight modes (the index enters
    through ``s**-r`` only). Every support pattern is seeded separately, so
    weights that drop when a new dimension is switched on are handled exactly.
    """
    found = set()
    if (1 << d) <= cap:
        seeds = _support_seeds(d)
    else:
        seeds = [MultiIndex.zero()] + [MultiIndex.unit(j) for j in range(1, d + 1)]
    for seed in seeds:
        if sigma_fn(seed) <= threshold:
            _within_support(sigma_fn, seed, threshold, cap, found)
    return found


def downward_closure(indices: Iterable[MultiIndex]) -> set:
    out = set()
    stack = list(indices)
    while stack:
        s = stack.pop()
        if s in out:
            continue
        out.add(s)
        for j, v in s.items():
            stack.append(s - MultiIndex.unit(j))
    return out


def is_downward_closed(indices) -> bool:
    idx = set(indices)
    return all(s - MultiIndex.unit(j) in idx for s in idx for j in s.support)


def build_lambda(w, xi: float, d: int, cap: int = 200_000) -> IndexSet:
    """``Lambda(xi) = {s : sigma_s <= xi**(1/q)}``, closed downward.

    ``w`` is a :class:`WeightFamily` or any object exposing ``sigma(s)`` and ``q``.
    """
    if not xi > 1:
        raise ValueError("xi must exceed 1")
    threshold = xi ** (1.0 / w.q)
    raw = sublevel_set(w.sigma, threshold, d, cap)
    closed = downward_closure(raw)
    indices = tuple(sorted(closed, key=MultiIndex.sort_key))
    return IndexSet(indices, len(closed) == len(raw))


build_Lambda = build_lambda


@dataclass(frozen=True)
class CustomWeights:
    """Arbitrary ``sigma`` with an explicit ``q`` (testing and experiments)."""

    sigma_fn: Callable
    q: float

    def sigma(self, s):
        return self.sigma_fn(as_index(s))


def sigma_ordered(w, d: int) -> Iterator[tuple]:
    """Yield ``(s, sigma_s)`` over all indices in ``1..d`` in nondecreasing sigma
    (ties by total degree, then lexicographically)."""
    heap = []
    seen = set()

    def push(s):
        if s not in seen:
            seen.add(s)
            sig = w.sigma(s)
            heapq.heappush(heap, (sig, s.sort_key(), s.dense(d), s))

    seeds = _support_seeds(d) if d <= 16 else [MultiIndex.zero()] + [
        MultiIndex.unit(j) for j in range(1, d + 1)]
    for s in seeds:
        push(s)
    while heap:
        sig, _, _, s = heapq.heappop(heap)
        yield s, sig
        for j in s.support:
            push(s + MultiIndex.unit(j))


def first_indices(w, d: int, m: int) -> list:
    out = []
    for s, _ in sigma_ordered(w, d):
        out.append(s)
        if len(out) == m:
            break
    return out


def box(d: int, smax: int) -> Iterator[MultiIndex]:
    """All indices with ``|s|_inf <= smax`` in ``d`` dimensions."""
    for t in product(range(smax + 1), repeat=d):
        yield MultiIndex(t)
