"""Time the numba and numpy variants of every kernel on representative inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Both variants are called directly, so the env flag does not matter here.
"""
import argparse
import timeit

import numpy as np

from sparsegpc import _accel, kernels
from sparsegpc.measures import MeasureSpec
from sparsegpc.orthopoly import recurrence
from sparsegpc.pde import ParametricProblem


def cases():
    rng = np.random.default_rng(0)
    prob = ParametricProblem.sine_family(4, n_elems=128)
    Y = rng.gamma(2.0, size=(2000, 4))
    yield "fem_solve_batch 2000x127", kernels._fem_solve_batch_nb, kernels._fem_solve_batch_np, \
        (Y, prob.psi_gp, prob.load, prob.mesh.h)

    tables = rng.normal(size=(4, 4000, 40))
    cols = rng.integers(0, 40, size=(600, 4))
    coef = rng.normal(size=600)
    yield "gather_product 4000x600", kernels._gather_product_nb, kernels._gather_product_np, \
        (tables, cols, coef)

    rec = recurrence(MeasureSpec.gamma(2.0), 41)
    y = rng.gamma(2.0, size=20000)
    yield "orthonormal_table 20000x41 nder=2", kernels._orthonormal_table_nb, \
        kernels._orthonormal_table_np, (y, rec.alpha, np.sqrt(rec.beta), 40, 2)

    rec = recurrence(MeasureSpec.gamma(2.0), 120)
    args = (rec.alpha, np.sqrt(rec.beta[1:]), 6000)
    yield "tridiag_eig_first n=120", kernels._tql_first_row_nb, kernels._tql_first_row_np, args


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return
    print(f"{'kernel':36s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}")
    for name, nb, npf, call_args in cases():
        nb(*call_args)  # compile outside the timing
        t_nb = min(timeit.repeat(lambda: nb(*call_args), number=1, repeat=args.repeat))
        t_np = min(timeit.repeat(lambda: npf(*call_args), number=1, repeat=args.repeat))
        print(f"{name:36s} {1e3 * t_nb:11.2f} {1e3 * t_np:11.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
