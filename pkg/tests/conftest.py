import numpy as np
import pytest

from ratnlevp.nlevp import Surrogate

# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_surrogate(rng, n, m, identity_A0=False):
    A0 = np.eye(n, dtype=complex) if identity_A0 else crandn(rng, n, n) + 3 * np.eye(n)
    poles = 2.0 * np.exp(2j * np.pi * (np.arange(m) + rng.uniform(0, 0.5)) / max(m, 1))
    return Surrogate(crandn(rng, n, n), A0, poles, crandn(rng, m, n, n))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
