import numpy as np
import pytest

from innerapprox.synthesis import ScalarTarget, SynthesisConfig, synthesize_two_valued
from innerapprox.unimodular import ArcSet

ACCEPTANCE_LINES = []


def record(line):
    """Collect one acceptance summary line (printed at the end of the run)."""
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


FAST = SynthesisConfig(epsilon=0.5, delta=0.6)


@pytest.fixture(scope="session")
def fast_cfg():
    return FAST


@pytest.fixture(scope="session")
def small_quotient():
    """Cheap certified quotient: E = [0, pi), alpha = i, loose (eps, delta)."""
    target = ScalarTarget(ArcSet([(0.0, np.pi)]), 1j)
    return target, synthesize_two_valued(target, FAST)
