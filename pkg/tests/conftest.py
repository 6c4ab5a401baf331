import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("nphilab", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("nphilab")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
