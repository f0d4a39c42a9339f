import os
import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from photonsqueeze.fock import DensityMatrix, Ket

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile(
    "ci", max_examples=100, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_ket(seed: int, N: int, support: int | None = None) -> Ket:
    rng = np.random.default_rng(seed)
    k = support or N
    amps = np.zeros(N, dtype=complex)
    amps[:k] = rng.normal(size=k) + 1j * rng.normal(size=k)
    return Ket(amps / np.linalg.norm(amps))


def random_dm(seed: int, N: int, rank: int = 3, support: int | None = None) -> DensityMatrix:
    """Random mixed state occupying the lowest ``support`` Fock levels."""
    rng = np.random.default_rng(seed)
    k = support or N
    A = np.zeros((N, rank), dtype=complex)
    A[:k] = rng.normal(size=(k, rank)) + 1j * rng.normal(size=(k, rank))
    m = A @ A.conj().T
    return DensityMatrix(m / np.trace(m).real)


seeds = st.integers(min_value=0, max_value=2**31 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
