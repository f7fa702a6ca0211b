import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from airis.config import build_blockage, build_link_budget, resolve_scenario

settings.register_profile(
    "airis",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("airis")


def scenario(**over):
    """Baseline scenario with overrides, resolved to (config, budget, blockage)."""
    cfg = resolve_scenario(over)
    budget = build_link_budget(cfg)
    return cfg, budget, build_blockage(cfg, budget)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def baseline():
    return scenario()


# one PASS/FAIL line per acceptance criterion, shown at the end of the run
ACCEPTANCE = {}
ACCEPTANCE_INFO = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE and not ACCEPTANCE_INFO:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num}: {text}")
    for line in ACCEPTANCE_INFO:
        terminalreporter.write_line(f"INFO {line}")
