import numpy as np
import pytest

from gcflow import metric as gm

# acceptance outcomes, filled by tests/test_acceptance.py: {number: (passed, detail)}
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def catenoid():
    return gm.builtin_metric("catenoid")


@pytest.fixture(scope="session")
def helicoid():
    return gm.builtin_metric("helicoid")


@pytest.fixture(scope="session")
def flat():
    return gm.builtin_metric("flat")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
