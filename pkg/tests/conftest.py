import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.stash[_RESULTS] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    num, title = mark.args
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    if rep.failed and rep.when != "call":
        detail = f"{rep.when} error"
    item.config.stash[_RESULTS][num] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter, config):
    res = config.stash[_RESULTS]
    if not res:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(res):
        title, ok, detail = res[num]
        line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
