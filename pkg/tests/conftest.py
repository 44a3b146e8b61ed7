import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance-criterion outcome; prints a line per criterion
    in the terminal summary and fails the test when the check fails."""

    def record(cid: str, description: str, passed: bool, detail: str = ""):
        _CRITERIA.append((cid, description, bool(passed), detail))
        if not passed:
            pytest.fail(f"{cid} — {description}: {detail}", pytrace=False)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid, description, passed, detail in sorted(_CRITERIA):
        status = "PASS" if passed else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"[{status}] {cid} — {description}{suffix}")
