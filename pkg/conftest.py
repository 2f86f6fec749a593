import pytest

from src import channels


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale SDP runs (deselect with -m 'not slow')")


@pytest.fixture
def identity2():
    return channels.identity_channel(2)


@pytest.fixture
def werner3():
    return channels.werner_holevo(3)


@pytest.fixture
def random_qubit():
    return channels.random_channel(2, 2, 2, seed=7)
