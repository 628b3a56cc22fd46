"""Both kernel paths must agree; the numpy path must also be reachable via the env flag."""
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import linalg

from sparsegpc import _accel, kernels
from sparsegpc.orthopoly import recurrence
from sparsegpc.measures import MeasureSpec

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


def _tridiag(rng, n):
    return rng.normal(size=n), rng.uniform(0.1, 2.0, size=n - 1)


class TestTridiag:
    @pytest.mark.parametrize("n", [1, 2, 5, 30, 90])
    def test_against_scipy(self, rng, n):
        diag, off = _tridiag(rng, n)
        ev, first, status = kernels.tridiag_eig_first(diag, off)
        assert status == 0
        w, V = linalg.eigh_tridiagonal(diag, off)
        order = np.argsort(ev)
        np.testing.assert_allclose(ev[order], w, atol=1e-11)
        np.testing.assert_allclose(np.abs(first[order]), np.abs(V[0]), atol=1e-10)

    @needs_numba
    def test_paths_agree(self, rng):
        diag, off = _tridiag(rng, 40)
        a = kernels._tql_first_row_nb(diag, off, 2000)
        b = kernels._tql_first_row_np(diag, off, 2000)
        np.testing.assert_allclose(np.sort(a[0]), np.sort(b[0]), atol=1e-12)

    def test_iteration_cap_reports_status(self, rng):
        diag, off = _tridiag(rng, 20)
        assert kernels.tridiag_eig_first(diag, off, max_iter=1)[2] == 1


def _fem_inputs(rng, n=7, d=3, ne=16):
    h = 1.0 / ne
    gp = np.sort(rng.uniform(0, 1, 2 * ne))
    psi_gp = 0.1 * np.sin(np.outer(np.arange(1, d + 1), np.pi * gp))
    load = np.full(ne - 1, h)
    return rng.gamma(2.0, size=(n, d)), psi_gp, load, h


class TestFem:
    def test_against_dense_solve(self, rng):
        Y, psi_gp, load, h = _fem_inputs(rng)
        U, status = kernels.fem_solve_batch(Y, psi_gp, load, h)
        assert np.all(status == 0)
        ne = psi_gp.shape[1] // 2
        for i, y in enumerate(Y):
            a = np.exp(y @ psi_gp).reshape(ne, 2).mean(axis=1) / h
            K = np.diag(a[:-1] + a[1:]) - np.diag(a[1:-1], 1) - np.diag(a[1:-1], -1)
            np.testing.assert_allclose(U[i], np.linalg.solve(K, load), rtol=1e-12)

    @needs_numba
    def test_paths_agree(self, rng):
        args = _fem_inputs(rng, n=20)
        a, sa = kernels._fem_solve_batch_nb(*args)
        b, sb = kernels._fem_solve_batch_np(*args)
        np.testing.assert_allclose(a, b, rtol=1e-13)
        assert np.array_equal(sa, sb)


class TestGather:
    @needs_numba
    def test_paths_agree(self, rng):
        tables = rng.normal(size=(3, 11, 5))
        cols = rng.integers(0, 5, size=(13, 3))
        coef = rng.normal(size=13)
        np.testing.assert_allclose(kernels._gather_product_nb(tables, cols, coef),
                                   kernels._gather_product_np(tables, cols, coef), rtol=1e-14)

    def test_definition(self, rng):
        tables = rng.normal(size=(2, 4, 3))
        cols = np.array([[0, 2], [1, 1]])
        coef = np.array([2.0, -1.0])
        W = kernels.gather_product(tables, cols, coef)
        np.testing.assert_allclose(W[:, 0], 2.0 * tables[0, :, 0] * tables[1, :, 2])
        np.testing.assert_allclose(W[:, 1], -tables[0, :, 1] * tables[1, :, 1])


class TestTable:
    @needs_numba
    @pytest.mark.parametrize("spec", [MeasureSpec.gamma(1.5), MeasureSpec.gaussian()], ids=str)
    def test_paths_agree(self, spec):
        rec = recurrence(spec, 16)
        y = np.linspace(0.1, 12, 31)
        sb = np.sqrt(rec.beta)
        a = kernels._orthonormal_table_nb(y, rec.alpha, sb, 15, 3)
        b = kernels._orthonormal_table_np(y, rec.alpha, sb, 15, 3)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


def test_env_flag_selects_numpy_path():
    code = ("import sparsegpc.kernels as k, sparsegpc._accel as a; "
            "from sparsegpc.orthopoly import gauss_rule; from sparsegpc.measures import MeasureSpec; "
            "r = gauss_rule(MeasureSpec.gamma(2.0), 6); "
            "print(a.USE_NUMBA, repr(float(r.nodes.sum())))")
    env = dict(os.environ, SPARSEGPC_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out[0] == "False"
    # trace of the Jacobi matrix: sum of alpha_k = sum (2k + 2) for k < 6
    assert float(out[1]) == pytest.approx(42.0, rel=1e-12)


def test_benchmark_script_runs():
    import pathlib
    import runpy

    path = pathlib.Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    mod = runpy.run_path(str(path))
    mod["main"](["--repeat", "1"])
