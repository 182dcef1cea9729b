import pytest

# criterion number -> (title, outcome, detail)
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    n, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    ok = report.passed
    prev = _ACCEPTANCE.get(n)
    if prev is not None and not prev[1]:
        return
    _ACCEPTANCE[n] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}" + (f"  ({detail})" if detail else ""))
