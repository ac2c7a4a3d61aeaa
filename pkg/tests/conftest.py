import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, ok, detail)``."""

    def _report(number, ok, detail):
        line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} {detail}"
        _LINES.append((number, line))
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)
