"""Collects the acceptance verdicts and prints them as a block at the end of the run."""
import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    def record(criterion: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        _VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
