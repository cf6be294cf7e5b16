import numpy as np
import pytest

from ris_sesd.ils_core import QuadraticForm


def random_form(rng, N, rank=None, scale=1.0):
    """PSD form built from ``rank`` random Gram terms (rank-deficient when rank < N)."""
    rank = N if rank is None else rank
    V = (rng.standard_normal((rank, N)) + 1j * rng.standard_normal((rank, N))) / np.sqrt(2)
    B = scale * (V.T @ V.conj())
    b = scale * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
    return QuadraticForm(B=0.5 * (B + B.conj().T), b=b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
