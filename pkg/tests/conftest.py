import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "qdlab", deadline=None, derandomize=True, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qdlab")

OMEGA = np.exp(2j * np.pi / 3)


@pytest.fixture(scope="session")
def ds3():
    from qdlab.mtc_data import builtin_mtc

    return builtin_mtc("ds3", "bundled")


@pytest.fixture(scope="session")
def dz3():
    from qdlab.mtc_data import builtin_mtc

    return builtin_mtc("dz3")


@pytest.fixture(scope="session")
def tc():
    from qdlab.mtc_data import builtin_mtc

    return builtin_mtc("tc")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, [title, True])
    if rep.failed:
        entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")
