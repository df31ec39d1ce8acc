import numpy as np
import pytest

from l2ext.harness import Scenario, preset
from l2ext.lie_core import DomainSpec
from l2ext.quadrature import DiskRule, cached_mc_integrator

MC_SAMPLES = 10**6
MC_SEED = 42

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {key}: {detail}")


@pytest.fixture(scope="session")
def disk_rule():
    return DiskRule()


@pytest.fixture(scope="session")
def sp4_mc():
    return cached_mc_integrator(DomainSpec.siegel(2), MC_SAMPLES, MC_SEED)


@pytest.fixture(scope="session")
def elliptic():
    return Scenario.build(preset("elliptic"))


@pytest.fixture(scope="session")
def sp4():
    return Scenario.build(preset("sp4"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_taus(rng, n):
    """Points of the upper half plane spread over a few orders of magnitude in Im."""
    x = rng.uniform(-3, 3, size=n)
    y = np.exp(rng.uniform(np.log(0.05), np.log(20), size=n))
    return x + 1j * y
