import numpy as np
import pytest

from qkcurv.nk_algebra import NKAlgebraData
from qkcurv.qk_models import build_gr2c, build_hpn
from qkcurv.twistor import build_twistor

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def hpn2():
    return build_hpn(2, 64.0)


@pytest.fixture(scope="session")
def gr2():
    return build_gr2c(2, 64.0)


@pytest.fixture(scope="session", params=["hpn", "gr2c"])
def base(request, hpn2, gr2):
    return hpn2 if request.param == "hpn" else gr2


@pytest.fixture(scope="session")
def tw_hpn(hpn2):
    return build_twistor(hpn2, -1)


@pytest.fixture(scope="session")
def tw_gr2(gr2):
    return build_twistor(gr2, -1)


@pytest.fixture(scope="session", params=["hpn", "gr2c"])
def twistor(request, tw_hpn, tw_gr2):
    return tw_hpn if request.param == "hpn" else tw_gr2


@pytest.fixture(scope="session")
def nk(twistor):
    return NKAlgebraData.from_twistor(twistor)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
