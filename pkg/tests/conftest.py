"""Shared pytest plumbing.

The acceptance tests register one line each through the `criterion`
fixture; the terminal-summary hook prints them as a block at the end of
the run, so every invocation shows the full pass/fail slate.
"""

import pytest

_CRITERION_LINES: list[tuple[int, str]] = []


@pytest.fixture
def criterion():
    def record(index: int, passed: bool, detail: str) -> None:
        status = "PASS" if passed else "FAIL"
        _CRITERION_LINES.append(
            (index, f"[criterion {index:02d}] {status} {detail}")
        )

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERION_LINES):
            terminalreporter.write_line(line)
