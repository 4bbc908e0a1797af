import sys

import numpy as np
import pytest

from spiralvortex.approximation import ModalCache
from spiralvortex.pointvortex import synthesize_config
from spiralvortex.profile import solve_ground_state


@pytest.fixture(scope="session")
def kr_config():
    return synthesize_config([1.0, 1.0, -0.5])


@pytest.fixture(scope="session")
def profile():
    return solve_ground_state(19.0)


@pytest.fixture(scope="session")
def cache(profile):
    return ModalCache.build(profile)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def admissible_masses(m1: float, m2: float) -> list[float]:
    """Positive m1, m2 and the m3 that satisfies the harmonic-mean condition."""
    return [m1, m2, -m1 * m2 / (m1 + m2)]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(results):
        checks = results[k]
        status = "PASS" if all(c.passed for c in checks) else "FAIL"
        tr.write_line(f"[{status}] criterion {k} ({sum(c.passed for c in checks)}/{len(checks)} checks)")
        for c in checks:
            tr.write_line("    " + c.line())
