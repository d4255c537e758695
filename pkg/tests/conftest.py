import math

import pytest

from leakycavity.design import geometry_for_eta, resonant_pair
from leakycavity.spectral import CavityGeometry, spectrum


@pytest.fixture(scope="session")
def tuned():
    """Unit cavity, k_perp = pi, reservoir tuned to an exact 3:1 partner, eta = 1e-3."""
    return geometry_for_eta(1.0, math.pi, 1e-3)


@pytest.fixture(scope="session")
def tuned_pair(tuned):
    return resonant_pair(tuned)


@pytest.fixture(scope="session")
def tuned_spectrum(tuned, tuned_pair):
    return spectrum(tuned, 4.0 * tuned_pair[1].omega_x)


@pytest.fixture(scope="session")
def generic():
    """Incommensurate lengths (1, 2.7) with a strong mirror."""
    return CavityGeometry(0.0, 1.0, 3.7, 1e3)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
