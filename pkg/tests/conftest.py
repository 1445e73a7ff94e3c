import numpy as np
import pytest

from activeprecision import _core


@pytest.fixture(params=_core.available_backends())
def backend(request):
    previous = _core.set_backend(request.param)
    yield request.param
    _core.set_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20260416)


def pytest_configure(config):
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _, ok, _ = item.config._criteria.get(number, (title, True, ""))
    item.config._criteria[number] = (title, ok and rep.passed, detail)


def pytest_terminal_summary(terminalreporter, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(crit):
        title, ok, detail = crit[number]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
