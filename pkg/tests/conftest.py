import numpy as np
import pytest

from voxmetrics.phantom import PhantomSpec, generate

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and rep.when == "call":
        _ACCEPTANCE.append((marker.args[0], rep.passed))
    elif marker and rep.when == "setup" and rep.failed:
        _ACCEPTANCE.append((marker.args[0], False))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok in sorted(_ACCEPTANCE, key=lambda x: int(x[0].split()[0][2:])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def phantom64():
    return generate(PhantomSpec(dims=(64, 64, 64), spacing=(1.0, 1.0, 1.0), seed=7))


@pytest.fixture(scope="session")
def phantom_vervet():
    return generate(PhantomSpec(dims=(64, 64, 64), spacing=(0.5, 0.5, 0.5), seed=7))
