"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import pytest

_OUTCOMES: dict[int, tuple[str, bool, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        number, title = marker.args[0], marker.args[1]
        detail = getattr(item, "acceptance_detail", "")
        prev = _OUTCOMES.get(number)
        ok = rep.passed and (prev is None or prev[1])
        details = "; ".join(d for d in ((prev[2] if prev else ""), detail) if d)
        _OUTCOMES[number] = (title, ok, details)


@pytest.fixture
def record(request):
    """``record("text")`` attaches a measured value to the acceptance line."""
    parts = []

    def add(text):
        parts.append(text)
        request.node.acceptance_detail = "; ".join(parts)
    return add


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        title, ok, detail = _OUTCOMES[number]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
