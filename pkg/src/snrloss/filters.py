"""Adaptive filter constructors.

Every constructor returns a weight vector normalised to ``w^H v = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import as_rng
from .errors import BadParam, DegenerateProjection, Singular, SingularBlock
from .hermitian import H, eigh, hermitian_inv_sqrt, hermitize, orth_complement, partial_cholesky
from .scenarios import Scenario

COND_MAX = 1e14


def _normalize(w, v):
    g = np.vdot(w, v)  # w^H v
    if abs(g) == 0.0:
        raise DegenerateProjection("filter has no gain towards v")
    return w / np.conj(g)


def _solve_pd(A, b, what="matrix"):
    A = hermitize(A)
    if np.linalg.cond(A) > COND_MAX:
        raise Singular(f"{what} condition number exceeds {COND_MAX:.0e}")
    return np.linalg.solve(A, b)


def w_wnmf(v):
    """White-noise matched filter ``v / ||v||^2``."""
    v = np.asarray(v, dtype=complex)
    return v / np.vdot(v, v).real


def w_optimal(sigma, v):
    """Clairvoyant filter ``sigma^{-1} v / (v^H sigma^{-1} v)``."""
    return _normalize(_solve_pd(sigma, v, "sigma"), v)


def w_smi(S, v):
    """Sample-matrix-inversion filter ``S^{-1} v / (v^H S^{-1} v)``."""
    return _normalize(_solve_pd(S, v, "S_t"), v)


@dataclass(frozen=True)
class Transform:
    """Reduced-dimension transform ``T`` (``N x (R+1)``).

    ``style="gsc"`` means ``T = [w_wnmf, V_perp Psi]``; ``psi`` is kept so the
    sidelobe-canceller form can be evaluated independently.
    """

    matrix: np.ndarray
    style: str = "general"
    psi: np.ndarray | None = None

    @classmethod
    def gsc(cls, v, psi):
        v = np.asarray(v, dtype=complex)
        psi = np.asarray(psi, dtype=complex)
        if psi.ndim == 1:
            psi = psi[:, None]
        T = np.column_stack([w_wnmf(v), orth_complement(v) @ psi])
        return cls(matrix=T, style="gsc", psi=psi)

    @classmethod
    def random_gsc(cls, rng, v, R):
        rng = as_rng(rng)
        N = np.asarray(v).size
        return cls.gsc(v, rng.cnormal((N - 1, R)))

    @property
    def rank(self) -> int:
        return self.matrix.shape[1] - 1


def _tmat(T):
    return T.matrix if isinstance(T, Transform) else np.asarray(T, dtype=complex)


def w_partial(T, S, v):
    """Partially adaptive filter ``T (T^H S T)^{-1} T^H v``, normalised."""
    Tm = _tmat(T)
    Tv = H(Tm) @ v
    x = _solve_pd(H(Tm) @ S @ Tm, Tv, "T^H S T")
    return _normalize(Tm @ x, v)


def w_gsc(S, v, psi):
    """Sidelobe-canceller form ``w_wnmf - V Psi (Psi^H V^H S V Psi)^{-1} Psi^H V^H S w_wnmf``."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim == 1:
        psi = psi[:, None]
    w0 = w_wnmf(v)
    B = orth_complement(v) @ psi
    A = H(B) @ S @ B
    try:
        wa = _solve_pd(A, H(B) @ (S @ w0), "Psi^H V^H S V Psi")
    except Singular as exc:
        raise SingularBlock(str(exc)) from exc
    return w0 - B @ wa


def w_eigencanceler(S, v, R):
    """Project ``v`` off the ``R`` principal eigenvectors of ``S``."""
    v = np.asarray(v, dtype=complex)
    N = v.size
    if not 0 <= R < N:
        raise BadParam(f"R must lie in [0, {N - 1}]")
    if R == 0:
        return w_wnmf(v)
    U = eigh(S).vectors[:, :R]
    return _normalize(v - U @ (H(U) @ v), v)


def w_pchol(S, v, R):
    """Project ``v`` off the range of the rank-``R`` partial Cholesky factor of ``S``."""
    v = np.asarray(v, dtype=complex)
    if R == 0:
        return w_wnmf(v)
    G = partial_cholesky(S, R)
    Q, _ = np.linalg.qr(G)
    w = v - Q @ (H(Q) @ v)
    if abs(np.vdot(v, w)) < 1e-12 * np.vdot(v, v).real:
        raise DegenerateProjection("v lies in the partial Cholesky subspace")
    return _normalize(w, v)


def w_diagonal_loading(S, v, mu, K):
    """``(S + K mu I)^{-1} v``, normalised."""
    if mu < 0:
        raise BadParam("loading level must be nonnegative")
    S = hermitize(S)
    N = S.shape[0]
    if mu == 0:
        return w_smi(S, v)
    return _normalize(np.linalg.solve(S + K * mu * np.eye(N), v), v)


def w_marzetta(rng, S, v, R, L, psis=None):
    """Average of ``L`` random sidelobe cancellers.

    ``Psi_l`` are i.i.d. ``(N-1) x R`` complex Gaussian matrices unless
    ``psis`` supplies them.
    """
    v = np.asarray(v, dtype=complex)
    N = v.size
    if not 0 < R < N or L < 1:
        raise BadParam("need 0 < R < N and L >= 1")
    if psis is None:
        rng = as_rng(rng)
        psis = [rng.cnormal((N - 1, R)) for _ in range(L)]
    w0 = w_wnmf(v)
    V = orth_complement(v)
    VS = H(V) @ S
    VSV = VS @ V
    r = VS @ w0
    acc = np.zeros(N - 1, dtype=complex)
    for psi in psis:
        psi = np.asarray(psi, dtype=complex).reshape(N - 1, -1)
        A = H(psi) @ VSV @ psi
        try:
            acc += psi @ _solve_pd(A, H(psi) @ r, "Psi^H V^H S V Psi")
        except Singular as exc:
            raise SingularBlock(str(exc)) from exc
    return w0 - V @ (acc / len(psis))


def _rep_factor(sigma, v):
    V = orth_complement(v)
    return V @ hermitian_inv_sqrt(H(V) @ sigma @ V)


def weight_rep(rng, scenario: Scenario, K: int, kind: str = "mvdr", size=None):
    """Draw SMI weight vectors from their stochastic representation.

    ``w = w_opt - c V_perp (V_perp^H sigma V_perp)^{-1/2} n / sqrt(V)`` with
    ``n ~ CN(0, I_{N-1})``, ``V ~ CChi2(K-N+2)`` and
    ``c = (v^H sigma^{-1} v)^{-1/2}``, times ``(1 + SNR_opt)^{1/2}`` for MPDR.
    Returns one vector, or an ``(size, N)`` array.
    """
    rng = as_rng(rng)
    if kind not in ("mvdr", "mpdr"):
        raise BadParam(f"kind must be 'mvdr' or 'mpdr', got {kind!r}")
    if kind == "mpdr" and scenario.kind != "mpdr":
        raise BadParam("mpdr weight representation needs an mpdr scenario")
    if kind == "mpdr" and scenario.gamma != 1.0:
        raise BadParam("mpdr weight representation assumes gamma = 1")
    if kind == "mvdr" and scenario.kind not in ("mvdr",):
        raise BadParam("mvdr weight representation needs an mvdr scenario")
    sigma, v = scenario.sigma, scenario.v
    N = v.size
    n_draw = 1 if size is None else int(size)
    wopt = w_optimal(sigma, v)
    vsv = np.vdot(v, np.linalg.solve(sigma, v)).real
    c = 1.0 / math.sqrt(vsv)
    if kind == "mpdr":
        c *= math.sqrt(1.0 + scenario.snr_opt)
    F = _rep_factor(sigma, v)
    n = rng.cnormal((n_draw, N - 1))
    Vchi = rng.gamma(K - N + 2, n_draw)
    W = wopt[None, :] - c * (n @ F.T) / np.sqrt(Vchi)[:, None]
    return W[0] if size is None else W


def expected_wnorm(ct, v, K):
    """Mean squared norm of the SMI weight trained with covariance ``ct``."""
    v = np.asarray(v, dtype=complex)
    N = v.size
    if K < N:
        raise BadParam(f"K={K} must be at least N={N}")
    civ = np.linalg.solve(ct, v)
    vcv = np.vdot(v, civ).real
    V = orth_complement(v)
    tr = np.trace(np.linalg.inv(H(V) @ ct @ V)).real
    return float(np.vdot(civ, civ).real / vcv**2 + tr / (vcv * (K - N + 1)))


def wnorm_gap(sigma, v, P, K):
    """Expected ``||w_mpdr||^2 - ||w_mvdr||^2`` = ``P Tr((V^H sigma V)^{-1}) / (K-N+1)``."""
    v = np.asarray(v, dtype=complex)
    N = v.size
    V = orth_complement(v)
    return float(P * np.trace(np.linalg.inv(H(V) @ sigma @ V)).real / (K - N + 1))
