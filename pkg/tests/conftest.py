"""Shared fixtures: acceptance criteria report one PASS/FAIL line each."""

import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one summary line per acceptance criterion, then return passed."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        line = f"{name}: {'PASS' if passed else 'FAIL'}"
        if detail:
            line += f"  [{detail}]"
        _ACCEPTANCE_LINES.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
