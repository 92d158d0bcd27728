import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "tests": {}})
    if call.excinfo is None:
        outcome = "passed"
    elif call.excinfo.errisinstance(pytest.skip.Exception):
        outcome = "skipped"
    else:
        outcome = "failed"
    prev = entry["tests"].get(item.nodeid, "passed")
    # a later phase can only make a test's outcome worse
    rank = {"passed": 0, "skipped": 1, "failed": 2}
    entry["tests"][item.nodeid] = max(prev, outcome, key=rank.get)


def _verdict(outcomes):
    if "failed" in outcomes:
        return "FAIL"
    if "passed" in outcomes:
        return "PASS"
    return "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        verdict = _verdict(set(entry["tests"].values()))
        terminalreporter.write_line(f"criterion {number}: {verdict}  {entry['title']}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
