import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).parent))

import pytest

CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, text):
        CRITERIA[number] = (text, request.node)
    yield record
    for number, (text, node) in CRITERIA.items():
        if node is request.node:
            failed = getattr(node, "_failed", True)
            CRITERIA[number] = (text, "FAIL" if failed else "PASS")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item._failed = not rep.passed


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        text, status = CRITERIA[number]
        if not isinstance(status, str):
            status = "FAIL"
        terminalreporter.write_line(f"{status} criterion {number}: {text}")
