"""Shared test helpers plus a terminal summary for the acceptance suite."""

import re

_ACCEPTANCE_FILE = "test_acceptance.py"
_NAME = re.compile(r"test_a(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion that ran."""
    rows = []
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call" and outcome != "error":
                continue
            nodeid = getattr(report, "nodeid", "")
            if _ACCEPTANCE_FILE not in nodeid:
                continue
            match = _NAME.search(nodeid)
            if not match:
                continue
            rows.append((int(match.group(1)), match.group(2), label))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, label in sorted(rows):
        terminalreporter.write_line(f"A{number} {name}: {label}")
