"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

import pytest

_RESULTS = {}


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, detail)`` for the summary; the test outcome decides pass/fail."""
    entry = {"detail": ""}
    criterion = request.node.get_closest_marker("criterion")
    key = criterion.args[0] if criterion else request.node.name
    _RESULTS.setdefault(key, []).append((request.node.nodeid, entry))
    return entry


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    for entries in _RESULTS.values():
        for nodeid, entry in entries:
            if nodeid != item.nodeid:
                continue
            if report.when == "call" or report.skipped or report.failed:
                if report.skipped:
                    entry["outcome"] = "SKIP"
                elif report.failed:
                    entry["outcome"] = "FAIL"
                elif report.when == "call":
                    entry["outcome"] = "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=lambda k: (str(type(k)), k)):
        entries = [entry for _, entry in _RESULTS[key]]
        outcomes = {e.get("outcome", "FAIL") for e in entries}
        if "FAIL" in outcomes:
            status = "FAIL"
        elif outcomes == {"SKIP"}:
            status = "SKIP"
        else:
            status = "PASS"
        details = "; ".join(dict.fromkeys(e["detail"] for e in entries if e["detail"]))
        terminalreporter.write_line(f"criterion {key}: {status}  {details}".rstrip())
