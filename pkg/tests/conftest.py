import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import cases  # noqa: E402



@pytest.fixture(scope="session")
def simple_wave():
    return cases.simple_wave()


@pytest.fixture(scope="session")
def double_wave():
    return cases.double_wave()


@pytest.fixture(scope="session")
def sw():
    from riemann_kwave import get_model

    return get_model("shallow-water")


def pytest_terminal_summary(terminalreporter):
    if cases.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in cases.ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
