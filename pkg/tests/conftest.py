import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    def add(label, ok, detail):
        _CRITERIA.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


def random_density_matrix(rng, dim, rank=None):
    rank = dim if rank is None else rank
    X = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = X @ X.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
