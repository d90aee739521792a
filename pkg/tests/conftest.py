from __future__ import annotations

import pytest

from oracles import ALBERT_XML, RECORDS_XML, POLICY, SUBJECTS
from xsecdb.policy import parse_policy, parse_subjects
from xsecdb.store import ingest_xml, parse_tree


@pytest.fixture
def records():
    return ingest_xml(RECORDS_XML)


@pytest.fixture
def subjects():
    return parse_subjects(SUBJECTS)


@pytest.fixture
def rules():
    return parse_policy(POLICY)


@pytest.fixture
def albert():
    return parse_tree(ALBERT_XML)


# one PASS/FAIL line per acceptance criterion ----------------------------------------

_criteria: dict[tuple[int, str], bool] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or report.failed:
        key = tuple(marker.args)
        _criteria[key] = _criteria.get(key, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for (number, title), ok in sorted(_criteria.items()):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}")
