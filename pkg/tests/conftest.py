import numpy as np
import pytest

from qinstrument import _backend, _kernels_py

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): exit criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.outcome == "passed" else "FAIL"
        _ACCEPTANCE.append(f"[{status}] {marker.args[0]}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def _compiled():
    try:
        from qinstrument import _kernels
    except ImportError:
        return None
    return _kernels


@pytest.fixture(params=["python", "cython"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend."""
    if request.param == "python":
        mod = _kernels_py
    else:
        mod = _compiled()
        if mod is None:
            pytest.skip("compiled kernels not built")
    monkeypatch.setattr(_backend, "kernels", mod)
    return mod
