import numpy as np
import pytest

from snrloss.distributions import Rng
from snrloss.scenarios import make_mvdr, jammer_sigma, ula_steering


def random_pd(rng, N, cond_floor=0.1):
    X = rng.cnormal((N, N + 2))
    return X @ X.conj().T + cond_floor * np.eye(N)


def random_unitary(rng, N):
    Q, R = np.linalg.qr(rng.cnormal((N, N)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


@pytest.fixture
def rng():
    return Rng(12345, 7)


@pytest.fixture(scope="session")
def jammers():
    sigma, G = jammer_sigma(16)
    return sigma, ula_steering(16, 0.0), G


@pytest.fixture(scope="session")
def jammer_mvdr(jammers):
    sigma, v, _ = jammers
    return make_mvdr(sigma, v)
