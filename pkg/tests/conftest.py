import numpy as np
import pytest

from sparsegpc.measures import MeasureSpec
from sparsegpc.pde import ParametricProblem, SpatialMesh

GAMMA_SHAPES = (0.5, 1.0, 2.0, 4.2)
ALL_SPECS = [MeasureSpec.gamma(a) for a in GAMMA_SHAPES] + [MeasureSpec.gaussian()]


@pytest.fixture
def gamma2():
    return MeasureSpec.gamma(2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def zero_problem(d=1, n_elems=32, spec=None, f=1.0):
    spec = spec or MeasureSpec.gamma(2.0)
    psi = [(lambda x: 0.0 * np.asarray(x)) for _ in range(d)]
    return ParametricProblem(SpatialMesh(n_elems), spec, psi, f)


@pytest.fixture
def sine4():
    return ParametricProblem.sine_family(4, c=0.05, tau=2.0, n_elems=128)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")
