import math

import pytest

from blo_homodyne.detection import BloConfig
from blo_homodyne.squeezing import DetectionChain, Flat, fit_loss_and_r

ACCEPTANCE_LINES = []

# measured levels quoted for the squeezed / antisqueezed quadratures
MEASURED_V_SQ = 0.39
MEASURED_V_ANTI = 10.2


@pytest.fixture(scope="session")
def measured_fit():
    return fit_loss_and_r(MEASURED_V_SQ, MEASURED_V_ANTI)


@pytest.fixture(scope="session")
def fitted_model(measured_fit):
    return Flat(measured_fit.r)


@pytest.fixture(scope="session")
def fitted_chain(measured_fit):
    return DetectionChain.from_eta_eff(measured_fit.eta_eff, visibility=0.98)


@pytest.fixture
def blo():
    return BloConfig(5e6, theta=math.pi / 2)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
