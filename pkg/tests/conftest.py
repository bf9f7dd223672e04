import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import keys  # noqa: E402


@pytest.fixture
def alice():
    return keys(1)


@pytest.fixture
def bob():
    return keys(2)


@pytest.fixture
def carol():
    return keys(3)


VERDICTS = []  # (criterion, passed, detail) filled in by the acceptance tests


@pytest.fixture
def verdict():
    def record(label, passed, detail=""):
        VERDICTS.append((label, passed, detail))
        print(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in VERDICTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
