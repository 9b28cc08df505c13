from __future__ import annotations

from collections import OrderedDict

import pytest

CRITERIA = OrderedDict([
    (1, "weak-bound suite"),
    (2, "decomposition suite"),
    (3, "witness suite"),
    (4, "example-family identities"),
    (5, "construction suite"),
    (6, "criterion suite"),
    (7, "norm suite"),
    (8, "rotation exactness"),
])
_outcomes: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): acceptance criterion number n")


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance_id", None)
    if marker is None:
        return
    failed = report.failed
    if report.when == "call" or failed:
        prev = _outcomes.get(marker, True)
        _outcomes[marker] = prev and not failed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is not None:
        rep.acceptance_id = m.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        if n in _outcomes:
            status = "PASS" if _outcomes[n] else "FAIL"
        else:
            status = "NOT RUN"
        terminalreporter.write_line(f"{status} criterion {n}: {name}")
