"""Backend selection for the batch kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``SNRLOSS_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used. ``BACKEND`` names the
active one.
"""

from __future__ import annotations

import importlib.util
import os

import numpy as np

from . import _pykernels
from .errors import Singular

_force_py = os.environ.get("SNRLOSS_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_py:
        raise ImportError("pure-Python backend requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "numpy"


def available_backends():
    out = ["numpy"]
    if importlib.util.find_spec(f"{__package__}._ckernels") is not None:
        out.insert(0, "cython")
    return out


def _module(backend):
    if backend is None:
        return _impl
    if backend == "numpy":
        return _pykernels
    if backend == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {backend!r}")


def loaded_smi_batch(X, v, sigma, load=0.0, want_weights=False, backend=None):
    """SNR losses of ``(X X^H + load I)^{-1} v`` for a stack ``X`` of shape ``(M, N, K)``.

    Returns ``(losses, weights)``; ``weights`` is ``None`` unless requested
    and is normalised to ``w^H v = 1``. Raises :class:`Singular` carrying the
    offending trial position when a Gram matrix cannot be factored.
    """
    X = np.ascontiguousarray(X, dtype=np.complex128)
    v = np.ascontiguousarray(v, dtype=np.complex128)
    sigma = np.ascontiguousarray(sigma, dtype=np.complex128)
    losses, W, bad = _module(backend).loaded_smi_batch(X, v, sigma, float(load), bool(want_weights))
    if bad >= 0:
        err = Singular(f"training Gram matrix {bad} of the batch is not positive definite")
        err.position = bad
        raise err
    return losses, W
