"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_OUTCOMES: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if hasattr(report, "wasxfail"):
        status = "PASS" if report.passed else "FAIL"
        _OUTCOMES[number] = (status, title, f"{detail}; expected failure: {report.wasxfail}")
    elif report.skipped and report.when in ("setup", "call"):
        reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
        _OUTCOMES[number] = ("N/A", title, reason.removeprefix("Skipped: "))
    elif report.when == "call":
        _OUTCOMES[number] = ("PASS" if report.passed else "FAIL", title, detail)
    elif report.when == "setup" and report.failed:
        _OUTCOMES[number] = ("FAIL", title, "error during setup")


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        status, title, detail = _OUTCOMES[number]
        line = f"criterion {number:>2}: {status:<4} {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
