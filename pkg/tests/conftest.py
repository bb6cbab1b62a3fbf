import numpy as np
import pytest

from distanneal.objective import make_localization, pentagon_field


@pytest.fixture(scope="session")
def pentagon():
    return pentagon_field()


@pytest.fixture(scope="session")
def localization(pentagon):
    return make_localization(pentagon)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    """Store the pass/fail line printed in the terminal summary."""
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
