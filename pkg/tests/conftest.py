import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cmaxent.moments import MomentSpec

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def default_spec():
    # q = 1/2, identity covariance, phi = (0.3, 0.1): the running example
    return MomentSpec(0.5, [0.0, 0.0], [0.3, 0.1], np.eye(2))


@pytest.fixture
def skew_spec():
    return MomentSpec(0.3, [0.0, 0.0], [0.25, -0.2], [[1.5, 0.4], [0.4, 0.8]])


@pytest.fixture
def corr_spec():
    # worked example for the missing-phi2 imputation
    return MomentSpec(0.5, [0.0, 0.0], [0.3, np.nan], [[1.0, 0.5], [0.5, 1.0]], avail_phi2=False)


# ---- acceptance summary: one PASS/FAIL line per criterion

_acceptance: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _acceptance.append((props["criterion"], "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _acceptance:
        terminalreporter.write_line(f"{verdict}  {name}")
