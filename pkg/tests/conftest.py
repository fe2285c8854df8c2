import numpy as np
import pytest

from icefill.models import Kernel, get_context
from icefill.kernels import evd_hermitian


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte-Carlo acceptance runs (deselect with -m 'not slow')")


def random_psd(rng : np.random.Generator, M : int, rank : int=None) -> np.ndarray:
    rank = M if rank is None else rank
    A = (rng.standard_normal((M, rank)) + 1j * rng.standard_normal((M, rank))) / np.sqrt(2)
    S = A @ A.conj().T / rank
    return 0.5 * (S + S.conj().T)


def random_unitary(rng : np.random.Generator, M : int) -> np.ndarray:
    A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def unit_columns(rng : np.random.Generator, M : int, Q : int) -> np.ndarray:
    W = rng.standard_normal((M, Q)) + 1j * rng.standard_normal((M, Q))
    return W / np.linalg.norm(W, axis=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def running_kernel():
    """diag(2, 1), the two-direction example used across the suite."""
    return Kernel(np.diag([2.0, 1.0]))


@pytest.fixture
def running_basis(running_kernel):
    return evd_hermitian(running_kernel)


@pytest.fixture
def random_kernel(rng):
    def make(M : int=8, rank : int=None) -> Kernel:
        return Kernel(random_psd(rng, M, rank))
    return make


@pytest.fixture(autouse=True)
def clean_context():
    get_context(clear=True)
    yield
    get_context(clear=True)
