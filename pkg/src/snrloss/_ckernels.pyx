# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernel for loaded SMI filters.

For each training matrix ``X[m]`` (``N x K``) forms ``S = X X^H + load I``,
factors it with a complex Cholesky decomposition and solves ``S y = v``.
The weight is ``y / (v^H y)`` and its SNR loss is evaluated against
``sigma``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

ctypedef double complex cplx


cdef inline double absq(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx conj(cplx z) noexcept nogil:
    return z.conjugate()


cdef int _solve_one(const cplx[:, :, :] X, Py_ssize_t m, double load, const cplx[:] v,
                    cplx[:, :] L, cplx[:] y) noexcept nogil:
    """Gram, Cholesky and two triangular solves; returns 1 on a bad pivot."""
    cdef Py_ssize_t N = X.shape[1], K = X.shape[2]
    cdef Py_ssize_t i, j, k
    cdef cplx acc
    cdef double d, trace = 0.0
    # lower triangle of X X^H
    for i in range(N):
        for j in range(i + 1):
            acc = 0.0
            for k in range(K):
                acc = acc + X[m, i, k] * conj(X[m, j, k])
            L[i, j] = acc
        L[i, i] = L[i, i].real + load
        trace += L[i, i].real
    for j in range(N):
        d = L[j, j].real
        for k in range(j):
            d -= absq(L[j, k])
        if d <= 1e-14 * trace / N:
            return 1
        d = sqrt(d)
        L[j, j] = d
        for i in range(j + 1, N):
            acc = L[i, j]
            for k in range(j):
                acc = acc - L[i, k] * conj(L[j, k])
            L[i, j] = acc / d
    # forward: L z = v
    for i in range(N):
        acc = v[i]
        for k in range(i):
            acc = acc - L[i, k] * y[k]
        y[i] = acc / L[i, i].real
    # backward: L^H y = z
    for i in range(N - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, N):
            acc = acc - conj(L[k, i]) * y[k]
        y[i] = acc / L[i, i].real
    return 0


def loaded_smi_batch(cplx[:, :, :] X, cplx[:] v, cplx[:, :] sigma, double load=0.0,
                     bint want_weights=False):
    """Losses (and optionally weights) for a stack of training matrices.

    Returns ``(losses, weights_or_None, bad)`` where ``bad`` is the index of
    the first trial whose Gram matrix failed to factor, or ``-1``.
    """
    cdef Py_ssize_t M = X.shape[0], N = X.shape[1]
    cdef Py_ssize_t m, i, j
    cdef cnp.ndarray[double, ndim=1] loss_arr = np.empty(M)
    cdef double[:] losses = loss_arr
    cdef cplx[:, :] L = np.empty((N, N), dtype=np.complex128)
    cdef cplx[:] y = np.empty(N, dtype=np.complex128)
    cdef cplx[:] sy = np.empty(N, dtype=np.complex128)
    cdef cplx[:] sinv_v = np.linalg.solve(np.asarray(sigma), np.asarray(v))
    W_arr = np.empty((M, N), dtype=np.complex128) if want_weights else None
    cdef cplx[:, :] W
    if want_weights:
        W = W_arr
    cdef cplx g, acc
    cdef double vsv = 0.0, den, num
    cdef Py_ssize_t bad = -1
    for i in range(N):
        vsv += (conj(v[i]) * sinv_v[i]).real
    with nogil:
        for m in range(M):
            if _solve_one(X, m, load, v, L, y):
                bad = m
                break
            g = 0.0
            for i in range(N):
                g = g + conj(y[i]) * v[i]
            den = 0.0
            for i in range(N):
                acc = 0.0
                for j in range(N):
                    acc = acc + sigma[i, j] * y[j]
                den += (conj(y[i]) * acc).real
            num = absq(g)
            losses[m] = num / (vsv * den)
            if losses[m] > 1.0:
                losses[m] = 1.0
            if want_weights:
                # w = y / conj(v^H y) so that w^H v = 1
                for i in range(N):
                    W[m, i] = y[i] / conj(g)
    return loss_arr, W_arr, bad
