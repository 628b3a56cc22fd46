"""Probability measures on a single parameter axis.

Two families are supported: the gamma law with unit rate and shape ``a`` on
the half line, and the standard Gaussian on the real line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfSupport, SingularDensity

GAMMA = "gamma"
GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class MeasureSpec:
    kind: str
    shape: float = 1.0

    def __post_init__(self):
        if self.kind not in (GAMMA, GAUSSIAN):
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind == GAMMA and not self.shape > 0:
            raise ValueError("gamma shape must be positive")

    @classmethod
    def gamma(cls, a: float) -> "MeasureSpec":
        return cls(GAMMA, float(a))

    @classmethod
    def gaussian(cls) -> "MeasureSpec":
        return cls(GAUSSIAN, 1.0)

    @property
    def is_gamma(self) -> bool:
        return self.kind == GAMMA

    @property
    def lower(self) -> float:
        return 0.0 if self.is_gamma else -math.inf

    def __str__(self):
        return f"gamma(a={self.shape:g})" if self.is_gamma else "gaussian"


def log_density(spec: MeasureSpec, y):
    """Natural log of the density, vectorised; ``-inf`` outside the support."""
    y = np.asarray(y, dtype=float)
    if spec.is_gamma:
        a = spec.shape
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -y + (a - 1.0) * np.log(y) - math.lgamma(a)
        out = np.where(y > 0, out, -np.inf)
        if a == 1.0:
            out = np.where(y == 0, 0.0, out)
        elif a > 1.0:
            out = np.where(y == 0, -np.inf, out)
        else:
            out = np.where(y == 0, np.inf, out)
        return out
    return -0.5 * y * y - 0.5 * math.log(2.0 * math.pi)


def density(spec: MeasureSpec, y: float) -> float:
    """Density of ``spec`` at a scalar point."""
    y = float(y)
    if spec.is_gamma:
        if y < 0:
            raise OutOfSupport(f"y={y} is outside the gamma support")
        if y == 0 and spec.shape < 1:
            raise SingularDensity("gamma density with a < 1 is unbounded at 0")
    return float(np.exp(log_density(spec, y)))


def moment(spec: MeasureSpec, p: int) -> float:
    """E[Y^p] in closed form."""
    if p < 0:
        raise ValueError("moment order must be nonnegative")
    if spec.is_gamma:
        out = 1.0
        for i in range(p):
            out *= spec.shape + i
        return out
    if p % 2:
        return 0.0
    out = 1.0
    for i in range(p - 1, 0, -2):
        out *= i
    return out


def sample(spec: MeasureSpec, rng: np.random.Generator, n, d: int | None = None):
    """Draw ``n`` i.i.d. samples (shape ``(n,)`` or ``(n, d)``)."""
    if int(n) < 1:
        raise ValueError("sample count must be >= 1")
    size = (int(n),) if d is None else (int(n), int(d))
    if spec.is_gamma:
        return rng.gamma(spec.shape, 1.0, size=size)
    return rng.standard_normal(size=size)


def cdf(spec: MeasureSpec, y):
    """Distribution function (used by the statistical smoke tests)."""
    from scipy import special

    y = np.asarray(y, dtype=float)
    if spec.is_gamma:
        return special.gammainc(spec.shape, np.maximum(y, 0.0))
    return special.ndtr(y)
