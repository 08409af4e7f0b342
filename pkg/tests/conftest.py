import numpy as np
import pytest

from bsqec.config import load_config

NOISELESS = {
    "u": 0.0,
    "p_z": 0.0,
    "p_x": 0.0,
    "gamma_deph_per_us": 0.0,
    "p_1to0": 0.0,
    "p_0to1": 0.0,
}


@pytest.fixture(scope="session")
def noiseless_config():
    return load_config(NOISELESS)


@pytest.fixture(scope="session")
def default_config():
    return load_config(None)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(key=[1234, 0]))


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_criterion_" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {name}: {report.outcome.upper()}", flush=True)
