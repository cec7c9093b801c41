import pytest

from tractdyn.functions import make_model
from tractdyn.growth import growth_profile
from tractdyn.tract import Window, default_tract, locate_tract


@pytest.fixture(scope="session")
def exp_tract():
    return default_tract(make_model("exp"), R=1.0)


@pytest.fixture(scope="session")
def ex1_tract():
    model = make_model("example1:lambda=1")
    return locate_tract(model, 20.0, 6.0, Window(-10, 8, -12, 12, 400, 400))


@pytest.fixture(scope="session")
def gs1_tract():
    return default_tract(make_model("gamma_shift1"), R=10.0)


@pytest.fixture(scope="session")
def exp_profile(exp_tract):
    return growth_profile(exp_tract, 5.0, 100.0)


@pytest.fixture(scope="session")
def gs1_profile(gs1_tract):
    return growth_profile(gs1_tract, 10.0, 100.0)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line[1])
