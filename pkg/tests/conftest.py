"""Shared acceptance-line registry: every acceptance test records one
PASS/FAIL line, echoed in the terminal summary so the verdicts are visible
even when pytest captures stdout."""
import pytest

CRITERION_LINES = []


@pytest.fixture
def criterion():
    def record(line: str) -> None:
        CRITERION_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
