import pytest

from hlsinterp import fixtures


@pytest.fixture(scope="session")
def chaser():
    return fixtures.design("chaser")


@pytest.fixture(scope="session")
def grabber():
    return fixtures.design("grabber")


@pytest.fixture(scope="session")
def grabber_split():
    return fixtures.design("grabber_split")


@pytest.fixture(scope="session")
def density_opt():
    return fixtures.library("density_opt")


@pytest.fixture(scope="session")
def chaser_activity():
    return fixtures.activity("chaser")[1]


@pytest.fixture(scope="session")
def grabber_activity():
    return fixtures.activity("grabber")[1]


@pytest.fixture(scope="session")
def grabber_opt_activity():
    return fixtures.activity("grabber_opt")[1]


@pytest.fixture(scope="session")
def chaser_opt_activity():
    return fixtures.activity("chaser_opt")[1]


@pytest.fixture(scope="session")
def power_params():
    return fixtures.params()
