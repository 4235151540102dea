import pytest

from cyrange.world import Goal, ScenarioConfig, build_topology


@pytest.fixture
def conf_config():
    return ScenarioConfig(goal=Goal.CONFIDENTIALITY)


@pytest.fixture
def integrity_config():
    return ScenarioConfig(goal=Goal.INTEGRITY)


@pytest.fixture
def availability_config():
    return ScenarioConfig(goal=Goal.AVAILABILITY)


@pytest.fixture
def fresh_state(conf_config):
    return build_topology(conf_config)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: release gate checks")
