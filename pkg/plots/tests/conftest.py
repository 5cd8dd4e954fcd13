"""Terminal summary for the plot acceptance check."""

import re

_NAME = re.compile(r"test_a(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion that ran."""
    rows = []
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call" and outcome != "error":
                continue
            match = _NAME.search(getattr(report, "nodeid", ""))
            if not match:
                continue
            rows.append((int(match.group(1)), match.group(2), label))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, label in sorted(rows):
        terminalreporter.write_line(f"A{number} {name}: {label}")
