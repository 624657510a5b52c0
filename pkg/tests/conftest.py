import re

import pytest


def pytest_configure(config):
    config._criterion_lines = {}


@pytest.fixture
def criterion_report(request):
    """Record one PASS/FAIL summary line for an acceptance criterion."""

    def _report(number: int, ok: bool, detail: str) -> str:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        request.config._criterion_lines[number] = line
        print(line)
        return line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = dict(getattr(config, "_criterion_lines", {}))
    # a criterion test that crashed before reporting still gets its line
    for status in ("failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            match = re.search(r"criterion_(\d+)", report.nodeid)
            if match and int(match.group(1)) not in lines:
                number = int(match.group(1))
                lines[number] = f"criterion {number}: FAIL (test errored before reporting)"
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
