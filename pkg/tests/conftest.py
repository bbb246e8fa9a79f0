import numpy as np
import pytest

from mimlattice.dispersion import LatticeParams
from mimlattice.monatomic import solve_sigma
from mimlattice.nanopteron import NanopteronConfig, build_context, nanopteron_domain, solve_nanopteron
from mimlattice.spectral import DomainSpec


@pytest.fixture(scope="session")
def wave13():
    """Solitary wave at c = 1.3 on L = 40, N = 1024."""
    return solve_sigma(1.3, DomainSpec(40.0, 1024))


@pytest.fixture(scope="session")
def params13():
    return LatticeParams(1.3, 1.0, 3e-3)


@pytest.fixture(scope="session")
def nano_ctx13(params13):
    return build_context(params13, NanopteronConfig())


@pytest.fixture(scope="session")
def nano13(params13, nano_ctx13):
    return solve_nanopteron(params13, NanopteronConfig(), ctx=nano_ctx13)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def nano_domain13(params13):
    return nanopteron_domain(params13)


# acceptance lines are collected here and echoed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
