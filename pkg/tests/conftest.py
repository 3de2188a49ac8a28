import pytest

_RESULTS: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion checked by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    n, text = mark.args
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _RESULTS[n] = ("PASS" if rep.passed else "FAIL", text, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_RESULTS):
        status, text, detail = _RESULTS[n]
        line = f"{status} criterion {n}: {text}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)
