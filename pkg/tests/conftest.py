import json

import pytest
from hypothesis import HealthCheck, settings

from aircrn import model

settings.register_profile(
    "det", derandomize=True, deadline=None,
    suppress_health_check=list(HealthCheck))
settings.load_profile("det")


@pytest.fixture(scope="session")
def sc():
    return model.load_builtin_scenario()


@pytest.fixture(scope="session")
def tiny_sc():
    # 20 slots, 2 close users, primary far away: fast and interference-quiet
    with open(model.builtin_scenario_path()) as fh:
        data = json.load(fh)
    data["name"] = "tiny-two-users"
    data["mission"]["period_s"] = 20
    data["nodes"]["users_m"] = [[200.0, 100.0], [270.0, 120.0]]
    return model.scenario_from_dict(data)


@pytest.fixture(scope="session")
def tiny_run(tiny_sc):
    from aircrn import driver
    return driver.optimize(tiny_sc, "proposed")
