from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from stpa.corpus import load_corpus  # noqa: E402

settings.register_profile("stpa", deadline=None)
settings.load_profile("stpa")

_criteria: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def corpus_text():
    from stpa.corpus import MODEL_PATH

    return MODEL_PATH.read_text(encoding="utf-8")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = getattr(report, "criterion", None)
    if marker:
        previous = _criteria.get(marker[0], (None, "PASS"))[1]
        verdict = "PASS" if report.passed and previous == "PASS" else "FAIL"
        _criteria[marker[0]] = (marker[1], verdict)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria, key=int):
        title, verdict = _criteria[number]
        terminalreporter.write_line(f"AC{number} {verdict}  {title}")
