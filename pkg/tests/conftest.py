"""Shared pytest plumbing: print the acceptance-criteria summary lines
registered by the acceptance suite."""

from acceptance_report import LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in LINES:
        terminalreporter.write_line(line)
