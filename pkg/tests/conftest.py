from __future__ import annotations

from .report import RESULTS, line


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(line(number))
