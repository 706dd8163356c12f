import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    """Print one verdict line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance" not in rep.nodeid:
                continue
            text = dict(rep.user_properties).get("criterion")
            if text is None:
                text = f"{'PASS' if rep.passed else 'FAIL'}  {rep.nodeid.split('::')[-1]}: no verdict recorded"
            lines.append((rep.nodeid, text))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, text in sorted(lines):
            terminalreporter.write_line(text)
