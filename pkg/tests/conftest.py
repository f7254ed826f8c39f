import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    num = dict(report.user_properties).get("criterion")
    if num is not None:
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[num] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        status, detail = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {detail}")
