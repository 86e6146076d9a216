import pytest

from reasonsim.scenario import Scenario
from reasonsim.sim import SimConfig, SimMode, run


@pytest.fixture(scope="session")
def baseline_log():
    return run(SimConfig(Scenario(), SimMode.BASELINE))


@pytest.fixture(scope="session")
def replanner_log():
    return run(SimConfig(Scenario(), SimMode.REPLANNER))


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(RESULTS):
            terminalreporter.write_line(line)
