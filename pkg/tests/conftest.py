import numpy as np
import pytest

from lattice_gramian import FiniteLatticeSpec, LatticeParams, build_system, finite_gramian_closed

# (name, passed, detail) rows printed after the run by pytest_terminal_summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture(scope="session")
def params_iv():
    return LatticeParams(d=2, p=5.0, s=1.0)


@pytest.fixture(scope="session")
def spec_iv(params_iv):
    """21 x 21 lattice, driver at the centre, targets (0,0), (1,0), (1,1)."""
    return FiniteLatticeSpec(params_iv, (21, 21), [(0, 0)], [(0, 0), (1, 0), (1, 1)])


@pytest.fixture(scope="session")
def system_iv(spec_iv):
    return build_system(spec_iv)


@pytest.fixture(scope="session")
def gramian_iv(spec_iv, system_iv):
    A, B, _ = system_iv
    return finite_gramian_closed(A, B, 5.0, spec=spec_iv)


@pytest.fixture
def rng():
    return np.random.default_rng(20171218)
