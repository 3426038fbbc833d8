import pytest
from hypothesis import HealthCheck, settings

from lapsekit.synthgen import PortfolioConfig, synthesize

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def portfolio():
    """A small preprocessed synthetic portfolio and its ground truth."""
    return synthesize(PortfolioConfig(n_contracts=4000, seed=11))


def pytest_terminal_summary(terminalreporter):
    from _util import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
