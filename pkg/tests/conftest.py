"""Shared fixtures: acceptance verdict recording and end-of-run reporting."""

import pytest

_acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(num, ok, detail):
        line = f"ACCEPTANCE-{num:02d} {'PASS' if ok else 'FAIL'}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        if not ok:
            pytest.fail(line, pytrace=False)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines):
            terminalreporter.write_line(line)
