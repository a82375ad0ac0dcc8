"""Collects outcomes of tests marked ``acceptance(n, title)`` into one line per criterion."""

from collections import defaultdict

import pytest

_results = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion this test belongs to")
    config.stash[_results] = defaultdict(lambda: {"title": "", "passed": 0, "failed": 0, "seconds": 0.0})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        entry = item.config.stash[_results][mark.args[0]]
        entry["title"] = mark.args[1]
        entry["seconds"] += report.duration
        entry["passed" if report.passed else "failed"] += 1


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_results]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        e = results[n]
        status = "PASS" if e["failed"] == 0 else "FAIL"
        total = e["passed"] + e["failed"]
        terminalreporter.write_line(
            f"criterion {n}: {status}  {e['title']}  ({e['passed']}/{total} checks, {e['seconds']:.1f}s)"
        )
