import math

import numpy as np
import pytest

from sparsegpc.errors import NonPositiveCoefficient
from sparsegpc.measures import MeasureSpec, sample
from sparsegpc.pde import (ParametricProblem, SpatialMesh, apriori_bound, b_sup, coefficient_at,
                           dual_norm, f_dual_norm, solve, v_inner, v_norm)

from conftest import zero_problem


class TestCoefficient:
    def test_examples(self):
        prob = ParametricProblem.sine_family(2, c=0.1, tau=0.0, n_elems=8)
        assert coefficient_at(prob, [0.0, 0.0], 0.3) == 1.0
        assert coefficient_at(prob, [1.0, 1.0], 0.5) == pytest.approx(1.10517, rel=1e-5)
        const = ParametricProblem(SpatialMesh(4), MeasureSpec.gaussian(), [lambda x: 0.3 + 0 * x])
        assert coefficient_at(const, [2.0], 0.7) == pytest.approx(math.exp(0.6))

    def test_large_b_guard(self):
        with pytest.raises(ValueError):
            ParametricProblem.sine_family(2, c=0.6)
        prob = ParametricProblem.sine_family(2, c=0.6, allow_large_b=True)
        assert prob.b0 == pytest.approx(0.6)
        ParametricProblem.sine_family(2, c=0.6, spec=MeasureSpec.gaussian())

    def test_sup_norms_measured(self):
        prob = ParametricProblem(SpatialMesh(64), MeasureSpec.gamma(2.0),
                                 [lambda x: 0.2 * np.sin(np.pi * x)])
        assert prob.b0 == pytest.approx(0.2, rel=1e-4)


class TestSolver:
    def test_nodal_exactness(self):
        prob = zero_problem(n_elems=16)
        sol = solve(prob, [0.0])
        x = prob.mesh.interior
        np.testing.assert_allclose(sol.dof, x * (1 - x) / 2, rtol=1e-13)

    def test_zero_load(self):
        prob = zero_problem(f=0.0)
        assert np.all(solve(prob, [1.0]).dof == 0.0)

    def test_callable_load_matches_constant(self):
        a = zero_problem(n_elems=20, f=lambda x: 1.0 + 0 * x)
        b = zero_problem(n_elems=20)
        np.testing.assert_allclose(a.load, b.load, rtol=1e-14)

    def test_galerkin_residual(self, sine4):
        y = np.array([0.7, 3.1, 1.2, 5.0])
        u = solve(sine4, y).dof
        # assemble the stiffness independently from the coefficient at Gauss points
        h = sine4.mesh.h
        a = np.exp(y @ sine4.psi_gp).reshape(-1, 2).mean(axis=1) / h
        Ku = (a[:-1] + a[1:]) * u
        Ku[1:] -= a[1:-1] * u[:-1]
        Ku[:-1] -= a[1:-1] * u[1:]
        assert np.max(np.abs(Ku - sine4.load)) < 1e-12

    def test_energy_convergence(self):
        exact = 1 / math.sqrt(12)
        ns = np.array([16, 32, 64, 128, 256, 512])
        norms = np.array([v_norm(solve(zero_problem(n_elems=n), [0.0])) for n in ns])
        # Galerkin energy is approached from below; the V error is sqrt(|u|^2 - |u_h|^2)
        assert np.all(norms < exact) and np.all(np.diff(norms) > 0)
        err = np.sqrt(exact ** 2 - norms ** 2)
        slope = np.polyfit(np.log(1.0 / ns), np.log(err), 1)[0]
        assert slope == pytest.approx(1.0, abs=0.05)

    def test_deterministic(self, sine4):
        Y = sample(sine4.spec, np.random.default_rng(1), 50, 4)
        assert np.array_equal(sine4.solve_batch(Y), sine4.solve_batch(Y))
        assert sine4.fingerprint() == ParametricProblem.sine_family(4).fingerprint()
        assert sine4.fingerprint() != ParametricProblem.sine_family(4, c=0.04).fingerprint()

    def test_errors(self, sine4):
        with pytest.raises(ValueError):
            solve(sine4, [1.0, 2.0])
        with pytest.raises(ValueError):
            solve(sine4, [np.nan, 0, 0, 0])
        with pytest.raises(NonPositiveCoefficient):
            sine4.solve_batch([[1e5, 0, 0, 0]])


class TestNorms:
    def test_hat_norm(self):
        assert v_norm(np.array([1.0]), 0.5) == pytest.approx(2.0)
        assert v_norm(np.zeros(5), 1 / 6) == 0.0

    def test_batched(self, rng):
        U = rng.normal(size=(4, 9))
        np.testing.assert_allclose(v_norm(U, 0.1), [v_norm(u, 0.1) for u in U])
        np.testing.assert_allclose(v_inner(U, U, 0.1), v_norm(U, 0.1) ** 2)

    def test_dual_norms(self):
        prob = zero_problem(n_elems=64)
        u = solve(prob, [0.0])
        assert f_dual_norm(prob) == pytest.approx(v_norm(u), rel=1e-13)
        assert dual_norm(prob.load, prob.mesh.h) == pytest.approx(f_dual_norm(prob), rel=1e-12)
        assert apriori_bound(prob, [3.0]) == pytest.approx(f_dual_norm(prob))

    def test_apriori_bound(self, sine4):
        rng = np.random.default_rng(5)
        Y = sample(sine4.spec, rng, 200, 4)
        U = sine4.solve_batch(Y)
        bound = np.exp(b_sup(sine4, Y)) * f_dual_norm(sine4)
        assert np.all(v_norm(U, sine4.mesh.h) <= 1.05 * bound)
