"""Pure numpy version of the batch kernel in ``_ckernels``."""

from __future__ import annotations

import numpy as np


def _first_bad(S, N):
    """Index of the first Gram matrix with a pivot below the kernel threshold."""
    thresh = 1e-14 * np.einsum("mii->m", S).real / N
    for m in range(S.shape[0]):
        try:
            piv = np.diagonal(np.linalg.cholesky(S[m])).real ** 2
        except np.linalg.LinAlgError:
            return m
        if piv.min() <= thresh[m]:
            return m
    return -1


def loaded_smi_batch(X, v, sigma, load=0.0, want_weights=False):
    """Losses (and optionally weights) for a stack of training matrices.

    Same contract as the compiled kernel: returns ``(losses, weights_or_None,
    bad)`` where ``bad`` is the first trial whose Gram matrix failed to
    factor, or ``-1``; results cover the trials before ``bad``.
    """
    X = np.asarray(X, dtype=complex)
    v = np.asarray(v, dtype=complex)
    M, N, _ = X.shape
    S = X @ np.conj(np.swapaxes(X, -1, -2))
    if load:
        S = S + load * np.eye(N)
    try:
        Lc = np.linalg.cholesky(S)
        piv = np.diagonal(Lc, axis1=-2, axis2=-1).real ** 2
        ok = np.all(piv > (1e-14 * np.einsum("mii->m", S).real / N)[:, None])
    except np.linalg.LinAlgError:
        ok = False
    bad = -1 if ok else _first_bad(S, N)
    if bad >= 0:
        S = S[:bad]
    y = np.linalg.solve(S, np.broadcast_to(v, S.shape[:-1])[..., None])[..., 0]
    vsv = np.vdot(v, np.linalg.solve(sigma, v)).real
    g = np.conj(y) @ v
    den = np.einsum("mi,ij,mj->m", np.conj(y), sigma, y).real
    losses = np.minimum(np.abs(g) ** 2 / (vsv * den), 1.0)
    W = y / np.conj(g)[:, None] if want_weights else None
    return losses, W, bad
