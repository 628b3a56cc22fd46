import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from sparsegpc.constants import (c_operator, c_p_theta, c_theta_lambda, k_constant,
                                 operator_power, summability_k)
from sparsegpc.errors import DivergentIntegral
from sparsegpc.measures import MeasureSpec
from sparsegpc.orthopoly import orthonormal_values


@pytest.mark.parametrize("spec", [MeasureSpec.gamma(2.0), MeasureSpec.gaussian()], ids=str)
@pytest.mark.parametrize("r", [1, 2, 3])
def test_operator_power_eigen(spec, r):
    y = np.linspace(0.2, 5.0, 13)
    tab = orthonormal_values(spec, 8, y, nder=2 * r)
    ops = operator_power(spec, r)
    applied = sum(np.polynomial.polynomial.polyval(y, p)[:, None] * tab[j] for j, p in ops.items())
    k = np.arange(9)
    np.testing.assert_allclose(applied, tab[0] * k ** r, atol=1e-8 * (8 ** r))


def test_c_operator_r1_closed_form():
    # D = -y d2 - (a - y) d1: sup |y - a| / (1 + y) = max(a, 1), sup y / (1 + y) = 1
    for a in (0.5, 2.0, 4.2):
        assert c_operator(MeasureSpec.gamma(a), 1) == pytest.approx(max(a, 1.0))
    assert c_operator(MeasureSpec.gaussian(), 1) == pytest.approx(1.0)


@pytest.mark.parametrize("spec", [MeasureSpec.gamma(2.0), MeasureSpec.gaussian()], ids=str)
@pytest.mark.parametrize("r", [2, 3])
def test_c_operator_dense_grid(spec, r):
    t = np.linspace(0, 1, 200001)[:-1]
    y = t / (1 - t)
    grid = np.concatenate([-y, y]) if not spec.is_gamma else y
    best = max(np.max(np.abs(np.polynomial.polynomial.polyval(grid, p)) / (1 + np.abs(grid)) ** r)
               for j, p in operator_power(spec, r).items() if j > 0)
    assert c_operator(spec, r) == pytest.approx(best, rel=1e-6)


def test_c_p_theta_zeta():
    assert c_p_theta(0.5, 0.0, 3) == pytest.approx(special.zeta(1.5), rel=1e-12)
    assert c_p_theta(1.0, 0.5, 3) == pytest.approx(special.zeta(2.5), rel=1e-12)
    with pytest.raises(DivergentIntegral):
        c_p_theta(0.5, 0.0, 2)


def test_c_theta_lambda():
    assert c_theta_lambda(2.0, 0.5) == pytest.approx(2.25)
    k = np.arange(1, 10000)
    assert c_theta_lambda(1.5, 0.3) == pytest.approx(np.max((1 + 0.3 * k) ** 1.5 / k ** 1.5))


@pytest.mark.parametrize("a", [0.5, 2.0, 4.2])
@pytest.mark.parametrize("r,b0", [(1, 0.05), (2, 0.2), (3, 0.45)])
def test_k_gamma_quadrature(a, r, b0):
    f = lambda y: math.exp(2 * r * math.log1p(y) + 2 * b0 * y + stats.gamma.logpdf(y, a))
    val, _ = integrate.quad(f, 0, np.inf, limit=400)
    assert k_constant(MeasureSpec.gamma(a), r, b0) == pytest.approx(math.sqrt(val), rel=1e-8)


@pytest.mark.parametrize("r,b0", [(0, 0.0), (1, 0.05), (2, 0.3), (3, 1.0)])
def test_k_gaussian_quadrature(r, b0):
    # (1 + y)^{2r}, not (1 + |y|)^{2r}; only the exponential carries |y|
    f = lambda y: (1 + y) ** (2 * r) * math.exp(2 * b0 * abs(y) - 0.5 * y * y) / math.sqrt(2 * math.pi)
    val = integrate.quad(f, -np.inf, 0, limit=400)[0] + integrate.quad(f, 0, np.inf, limit=400)[0]
    assert k_constant(MeasureSpec.gaussian(), r, b0) == pytest.approx(math.sqrt(val), rel=1e-8)


def test_k_closed_forms():
    assert k_constant(MeasureSpec.gamma(2.0), 0, 0.0) == pytest.approx(1.0)
    assert k_constant(MeasureSpec.gamma(2.0), 0, 0.25) == pytest.approx(2.0)
    assert k_constant(MeasureSpec.gaussian(), 0, 0.0) == pytest.approx(1.0)


def test_k_errors():
    with pytest.raises(DivergentIntegral):
        k_constant(MeasureSpec.gamma(2.0), 1, 0.5)
    with pytest.raises(ValueError):
        k_constant(MeasureSpec.gaussian(), -1, 0.1)


def test_summability_k_assembly():
    parts = summability_k(MeasureSpec.gamma(2.0), 0.05, 0.5)
    assert parts["r"] == 3
    expect = (math.e * math.factorial(6) * parts["C_op"] * parts["C_p_theta"]
              * parts["C_theta_lambda"] * parts["K_b"])
    assert parts["K"] == pytest.approx(expect)
    assert parts["C_theta_lambda"] == 1.0
