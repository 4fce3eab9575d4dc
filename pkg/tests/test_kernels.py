import numpy as np
import pytest

from snrloss import kernels
from snrloss.distributions import Rng
from snrloss.errors import Singular
from snrloss.filters import w_diagonal_loading, w_smi
from snrloss.laws import snr_loss

BACKENDS = kernels.available_backends()


def _batch(seed, M, N, K):
    rng = Rng(seed)
    return rng.cnormal((M, N, K)), rng.cnormal(N)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("load", [0.0, 2.5])
def test_kernel_matches_reference(backend, load):
    X, v = _batch(1, 50, 6, 9)
    sigma = np.eye(6) + 0.4 * np.outer(v, v.conj()) / 6
    losses, W = kernels.loaded_smi_batch(X, v, sigma, load, want_weights=True, backend=backend)
    for m in range(50):
        S = X[m] @ X[m].conj().T
        w = w_diagonal_loading(S, v, load / 9, 9) if load else w_smi(S, v)
        assert np.allclose(W[m], w, atol=1e-10)
        assert abs(losses[m] - snr_loss(w, v, sigma)) < 1e-12


def test_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    X, v = _batch(2, 300, 16, 32)
    sigma = np.eye(16)
    a, _ = kernels.loaded_smi_batch(X, v, sigma, 0.0, backend="cython")
    b, _ = kernels.loaded_smi_batch(X, v, sigma, 0.0, backend="numpy")
    assert np.max(np.abs(a - b)) < 1e-13


@pytest.mark.parametrize("backend", BACKENDS)
def test_singular_position(backend):
    X, v = _batch(3, 10, 4, 6)
    X[7] = 0.0
    with pytest.raises(Singular) as exc:
        kernels.loaded_smi_batch(X, v, np.eye(4), backend=backend)
    assert exc.value.position == 7
    # loading rescues the degenerate trial
    losses, _ = kernels.loaded_smi_batch(X, v, np.eye(4), load=1.0, backend=backend)
    assert abs(losses[7] - 1.0) < 1e-12


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "numpy")
    with pytest.raises(ValueError):
        kernels.loaded_smi_batch(*_batch(0, 1, 2, 2), np.eye(2), backend="fortran")


def test_pure_python_env(tmp_path):
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-c", "from snrloss import kernels; print(kernels.BACKEND)"],
                         env={"SNRLOSS_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "numpy"
