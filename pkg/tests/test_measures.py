import math

import numpy as np
import pytest
from scipy import integrate, stats

from sparsegpc.errors import OutOfSupport, SingularDensity
from sparsegpc.measures import MeasureSpec, cdf, density, log_density, moment, sample

from conftest import ALL_SPECS


def test_gamma_density_matches_scipy():
    for a in (0.5, 1.0, 2.0, 4.2):
        y = np.linspace(0.01, 30, 200)
        np.testing.assert_allclose(np.exp(log_density(MeasureSpec.gamma(a), y)),
                                   stats.gamma.pdf(y, a), rtol=1e-12)


def test_gaussian_density_matches_scipy():
    y = np.linspace(-8, 8, 101)
    np.testing.assert_allclose(np.exp(log_density(MeasureSpec.gaussian(), y)),
                               stats.norm.pdf(y), rtol=1e-13)


def test_density_point_values():
    assert density(MeasureSpec.gamma(1.0), 0.0) == pytest.approx(1.0)
    assert density(MeasureSpec.gamma(2.0), 1.0) == pytest.approx(math.exp(-1.0))
    assert density(MeasureSpec.gaussian(), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert density(MeasureSpec.gamma(3.0), 0.0) == 0.0


def test_density_errors():
    with pytest.raises(OutOfSupport):
        density(MeasureSpec.gamma(2.0), -0.1)
    with pytest.raises(SingularDensity):
        density(MeasureSpec.gamma(0.5), 0.0)


def test_bad_specs():
    with pytest.raises(ValueError):
        MeasureSpec("beta")
    with pytest.raises(ValueError):
        MeasureSpec.gamma(0.0)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_density_integrates_to_one(spec):
    lo = 0.0 if spec.is_gamma else -np.inf
    val, _ = integrate.quad(lambda t: density(spec, t), lo, np.inf, limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_moments_against_quadrature(spec):
    lo = 0.0 if spec.is_gamma else -np.inf
    for p in range(6):
        val, _ = integrate.quad(lambda t: t ** p * density(spec, t), lo, np.inf, limit=200)
        assert moment(spec, p) == pytest.approx(val, rel=1e-8, abs=1e-10)


def test_moment_closed_forms():
    assert moment(MeasureSpec.gamma(2.0), 2) == 6.0
    assert moment(MeasureSpec.gaussian(), 4) == 3.0
    assert moment(MeasureSpec.gaussian(), 3) == 0.0
    with pytest.raises(ValueError):
        moment(MeasureSpec.gaussian(), -1)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_sampler_ks(spec):
    x = sample(spec, np.random.default_rng(3), 4000)
    res = stats.kstest(x, lambda t: cdf(spec, t))
    assert res.pvalue > 1e-3


def test_sample_shapes_and_errors():
    spec = MeasureSpec.gamma(2.0)
    rng = np.random.default_rng(0)
    assert sample(spec, rng, 5).shape == (5,)
    assert sample(spec, rng, 5, 3).shape == (5, 3)
    with pytest.raises(ValueError):
        sample(spec, rng, 0)


def test_sample_reproducible():
    spec = MeasureSpec.gaussian()
    a = sample(spec, np.random.default_rng(9), 10, 2)
    b = sample(spec, np.random.default_rng(9), 10, 2)
    assert np.array_equal(a, b)
