"""Complex Hermitian linear algebra.

Square roots, partial Cholesky factors, orthogonal complements, projectors
and a phase-normalised eigendecomposition. Matrices are plain complex
``numpy`` arrays; nothing here keeps state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotPSD, RankDeficient, SingularPivot, ZeroVector

PSD_RTOL = 1e-10
PSD_ATOL = 1e-12
HERMITIAN_ATOL = 1e-12


def H(A):
    """Conjugate transpose."""
    return np.conj(np.swapaxes(A, -1, -2))


def hermitize(A):
    """Return ``(A + A^H) / 2``."""
    A = np.asarray(A, dtype=complex)
    return 0.5 * (A + H(A))


def is_hermitian(A, atol=HERMITIAN_ATOL) -> bool:
    A = np.asarray(A)
    return A.ndim == 2 and A.shape[0] == A.shape[1] and np.allclose(A, H(A), rtol=0.0, atol=atol)


def psd_tolerance(lam_max: float) -> float:
    return max(PSD_RTOL * abs(lam_max), PSD_ATOL)


@dataclass(frozen=True)
class EigenDecomp:
    """Eigenpairs with values in descending order.

    The columns of ``vectors`` are orthonormal and each one has its first
    component of magnitude above 1e-8 real and nonnegative.
    """

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        U = self.vectors
        return (U * self.values) @ H(U)


def _fix_phase(U, thresh=1e-8):
    U = U.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        idx = np.flatnonzero(np.abs(col) > thresh)
        if idx.size:
            c = col[idx[0]]
            U[:, j] = col * (np.conj(c) / abs(c))
    return U


def eigh(A) -> EigenDecomp:
    """Eigendecomposition of a Hermitian matrix, values descending."""
    A = hermitize(A)
    try:
        w, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigenDecomp(values=w[::-1].copy(), vectors=_fix_phase(U[:, ::-1]))


def hermitian_sqrt(A):
    """Unique Hermitian PSD square root ``S`` with ``S S^H = A``."""
    A = hermitize(A)
    w, U = np.linalg.eigh(A)
    tol = psd_tolerance(w[-1])
    if w[0] < -tol:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} below -{tol:.1e}")
    s = np.sqrt(np.clip(w, 0.0, None))
    return hermitize((U * s) @ H(U))


def hermitian_inv_sqrt(A):
    """Inverse of the Hermitian square root of a positive definite ``A``."""
    A = hermitize(A)
    w, U = np.linalg.eigh(A)
    if w[0] <= psd_tolerance(w[-1]):
        raise NotPSD(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return hermitize((U / np.sqrt(w)) @ H(U))


def partial_cholesky(A, R: int):
    """First ``R`` columns of the Cholesky factor of a PSD matrix.

    Returns the ``N x R`` lower-trapezoidal ``G`` with real positive diagonal
    such that ``G G^H`` reproduces the leading ``R`` block columns of ``A``.
    Only ``R`` elimination steps are taken, so the trailing block need not
    be positive definite.
    """
    A = hermitize(A)
    N = A.shape[0]
    if not 1 <= R <= N:
        raise ValueError(f"rank R={R} outside [1, {N}]")
    thresh = 1e-12 * np.real(np.trace(A)) / N
    work = A.copy()
    G = np.zeros((N, R), dtype=complex)
    for k in range(R):
        pivot = work[k, k].real
        if not pivot > thresh:
            raise SingularPivot(f"pivot {k} = {pivot:.3e} below threshold {thresh:.3e}")
        d = np.sqrt(pivot)
        col = work[k:, k] / d
        col[0] = d
        G[k:, k] = col
        work[k:, k:] -= np.outer(col, np.conj(col))
    return G


def orth_complement(v):
    """Orthonormal basis ``V`` of the complement of ``v`` (``N x (N-1)``).

    Built from a Householder reflector so the result depends only on ``v``.
    """
    v = np.asarray(v, dtype=complex).ravel()
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ZeroVector("cannot complement the zero vector")
    u = v / nv
    phase = u[0] / abs(u[0]) if abs(u[0]) > 0 else 1.0
    w = u.copy()
    w[0] += phase
    Hh = np.eye(v.size, dtype=complex) - 2.0 * np.outer(w, np.conj(w)) / np.vdot(w, w).real
    return Hh[:, 1:]


def projector(A):
    """Orthogonal projector onto the range of a full-column-rank ``A``."""
    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        A = A[:, None]
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[-1] <= 1e-10 * s[0]:
        raise RankDeficient("matrix does not have full column rank")
    return hermitize(U @ H(U))


def projector_orth(A):
    """Projector onto the orthogonal complement of ``range(A)``."""
    P = projector(A)
    return np.eye(P.shape[0]) - P


def schur_complement(A, P: int):
    """``A_11 - A_12 A_22^{-1} A_21`` for a leading block of size ``P``."""
    A11, A12 = A[:P, :P], A[:P, P:]
    A21, A22 = A[P:, :P], A[P:, P:]
    return A11 - A12 @ np.linalg.solve(A22, A21)
