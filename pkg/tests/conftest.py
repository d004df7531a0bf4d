import numpy as np
import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def rng(request):
    # stable per-test seed so failures are reproducible
    seed = sum(map(ord, request.node.name)) % (2**32)
    return np.random.default_rng(seed)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
