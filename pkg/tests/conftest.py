import pytest

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        number, title = marker.args
        detail = ""
        if report.failed:
            detail = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else ""
            detail = detail.splitlines()[0] if detail else ""
        prev = _RESULTS.get(number)
        ok = report.passed and (prev is None or prev[1])
        _RESULTS[number] = (title, ok, detail or (prev[2] if prev else ""))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, detail = _RESULTS[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if not ok and detail:
            line += f"  ({detail[:160]})"
        terminalreporter.write_line(line)
