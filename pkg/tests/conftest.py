from __future__ import annotations

import pytest

_OUTCOMES: dict[str, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if not (report.when == "call" or (report.when == "setup" and report.failed)):
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    for marker in item.iter_markers("criterion"):
        number, title = marker.args
        previous = _OUTCOMES.get(number)
        passed = report.passed and (previous is None or previous[0] == "PASS")
        notes = "; ".join(x for x in (previous[2] if previous else "", detail) if x)
        _OUTCOMES[number] = ("PASS" if passed else "FAIL", title, notes)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES, key=lambda s: (len(s), s)):
        status, title, detail = _OUTCOMES[number]
        line = f"{status} criterion {number}: {title}"
        terminalreporter.write_line(f"{line} [{detail}]" if detail else line)
