"""Complex matrix-variate samplers and scalar densities.

Conventions
-----------
A standard complex normal ``z`` has ``E|z|^2 = 1`` (real and imaginary
parts each of variance 1/2). ``CChi2(k, delta)`` is the squared norm of a
``k``-dimensional complex normal vector with identity covariance and mean
of squared norm ``delta``; it has mean ``k + delta`` and equals a
``Gamma(k + J, 1)`` variate with ``J ~ Poisson(delta)``.

Beta laws are parameterised by :class:`BetaParams` whose ``alpha`` is the
exponent (plus one) of ``x`` and ``beta`` that of ``1 - x``. The notation
``beta{K1}{K2}`` used in the SNR-loss literature, whose density is
proportional to ``x^(K2-1) (1-x)^(K1-1)``, maps to
``BetaParams(alpha=K2, beta=K1)``; use :meth:`BetaParams.from_literature`
rather than swapping by hand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import BadParam, InsufficientDoF, NoConvergence, NotPD, SingularBlock
from .hermitian import H, hermitian_inv_sqrt, hermitian_sqrt, hermitize, psd_tolerance

_MASK64 = (1 << 64) - 1


class Rng:
    """Counter-based random stream identified by ``(seed, stream_id)``.

    Backed by a Philox generator whose 128-bit key is the pair, so equal
    pairs replay the same sequence and distinct stream ids are independent.
    """

    __slots__ = ("seed", "stream_id", "gen")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = self.seed | (self.stream_id << 64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream_id={self.stream_id})"

    def stream(self, stream_id: int) -> "Rng":
        return Rng(self.seed, stream_id)

    def cnormal(self, size=None):
        """Standard complex normal draws."""
        if size is None:
            re, im = self.gen.standard_normal(2)
            return complex(re, im) * math.sqrt(0.5)
        shape = (size,) if np.isscalar(size) else tuple(size)
        z = self.gen.standard_normal(shape + (2,))
        return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)

    def gamma(self, shape, size=None):
        return self.gen.standard_gamma(shape, size)


def as_rng(rng) -> Rng:
    if isinstance(rng, Rng):
        return rng
    if isinstance(rng, (int, np.integer)):
        return Rng(int(rng))
    raise TypeError(f"expected Rng or integer seed, got {type(rng).__name__}")


@dataclass(frozen=True)
class BetaParams:
    """Beta law with density proportional to ``x^(alpha-1) (1-x)^(beta-1)``."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise BadParam(f"Beta {name} must be finite and positive, got {val}")

    @classmethod
    def from_literature(cls, K1, K2) -> "BetaParams":
        """Convert ``beta{K1}{K2}`` (density ~ x^(K2-1)(1-x)^(K1-1))."""
        return cls(alpha=K2, beta=K1)

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def var(self) -> float:
        a, b = self.alpha, self.beta
        return a * b / ((a + b) ** 2 * (a + b + 1))


@dataclass(frozen=True)
class StudentParams:
    """Complex matrix-variate Student law ``CT(nu, mean, row_cov, col_cov)``."""

    nu: float
    mean: np.ndarray
    row_cov: np.ndarray
    col_cov: np.ndarray

    def __post_init__(self):
        if not self.nu > 0:
            raise BadParam(f"nu must be positive, got {self.nu}")


def _check_pd(A, name):
    A = hermitize(np.atleast_2d(np.asarray(A, dtype=complex)))
    w = np.linalg.eigvalsh(A)
    if not (w[0] > psd_tolerance(w[-1]) and w[-1] > 0):
        raise NotPD(f"{name} is not positive definite (eigenvalues in [{w[0]:.3e}, {w[-1]:.3e}])")
    return A


def sample_cgauss_matrix(rng, N, K, mean=None, row_cov=None, col_cov=None):
    """Draw ``mean + row_cov^{1/2} Z col_cov^{H/2}`` with ``Z`` standard complex normal."""
    rng = as_rng(rng)
    Z = rng.cnormal((N, K))
    if row_cov is not None:
        Z = hermitian_sqrt(_check_pd(row_cov, "row_cov")) @ Z
    if col_cov is not None:
        Z = Z @ H(hermitian_sqrt(_check_pd(col_cov, "col_cov")))
    if mean is not None:
        Z = Z + np.asarray(mean, dtype=complex)
    return Z


def _bartlett_factor(rng, N, dof):
    L = np.tril(rng.cnormal((N, N)), -1)
    diag = np.sqrt(rng.gamma(dof - np.arange(N)))
    L[np.diag_indices(N)] = diag
    return L


def sample_wishart(rng, N, K, sigma=None, method="auto"):
    """Draw from ``CW(N, K, sigma)``.

    ``method="direct"`` forms ``X X^H`` from an ``N x K`` Gaussian matrix;
    ``"bartlett"`` uses the complex Bartlett decomposition and also accepts
    non-integer ``K``. ``"auto"`` picks direct for integer ``K <= 256``.
    """
    rng = as_rng(rng)
    if K < N:
        raise InsufficientDoF(f"K={K} < N={N}")
    if method == "auto":
        method = "direct" if float(K).is_integer() and K <= 256 else "bartlett"
    root = None if sigma is None else hermitian_sqrt(_check_pd(sigma, "sigma"))
    if method == "direct":
        X = rng.cnormal((N, int(K)))
        if root is not None:
            X = root @ X
        return hermitize(X @ H(X))
    if method == "bartlett":
        L = _bartlett_factor(rng, N, K)
        if root is not None:
            L = root @ L
        return hermitize(L @ H(L))
    raise ValueError(f"unknown method {method!r}")


def sample_cchisq(rng, k, delta=0.0, size=None):
    """Draw ``CChi2(k, delta)`` variates via the Poisson mixture of gammas."""
    rng = as_rng(rng)
    if not (k > 0 and float(k).is_integer()):
        raise BadParam(f"degrees of freedom must be a positive integer, got {k}")
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0):
        raise BadParam("noncentrality must be nonnegative")
    if np.all(delta == 0):
        return rng.gamma(float(k), size)
    shape = size if size is not None else (delta.shape or None)
    J = rng.gen.poisson(delta, shape)
    return rng.gamma(k + J)


def sample_matrix_t(rng, params: StudentParams, K):
    """Draw ``X = mean + Y W^{-1/2}``.

    ``Y ~ CN(0, row_cov, I_K)`` and ``W ~ CW(K, nu + K - 1, col_cov^{-1})``.
    For ``K = 1`` this is ``mean + CN(0, row_cov) / sqrt(CChi2(nu))`` when
    ``col_cov = 1``.
    """
    rng = as_rng(rng)
    row = _check_pd(params.row_cov, "row_cov")
    col = _check_pd(params.col_cov, "col_cov")
    N = row.shape[0]
    Y = sample_cgauss_matrix(rng, N, K, row_cov=row)
    W = sample_wishart(rng, K, params.nu + K - 1, np.linalg.inv(col))
    return np.asarray(params.mean, dtype=complex) + Y @ hermitian_inv_sqrt(W)


def sample_matrix_f(rng, N, K1, K2):
    """Draw ``F = S1^{1/2} S2^{-1} S1^{1/2}`` with identity-scale Wisharts."""
    rng = as_rng(rng)
    if K1 < N or K2 < N:
        raise InsufficientDoF(f"need K1, K2 >= N={N}, got ({K1}, {K2})")
    S1 = sample_wishart(rng, N, K1)
    S2 = sample_wishart(rng, N, K2)
    R1 = hermitian_sqrt(S1)
    return hermitize(R1 @ np.linalg.solve(S2, R1))


@dataclass(frozen=True)
class WishartBlocks:
    s12: np.ndarray  # Schur complement S_1.2
    s22: np.ndarray
    t21: np.ndarray  # S_22^{-1} S_21


def partitioned_wishart_blocks(S, P: int) -> WishartBlocks:
    S = hermitize(np.asarray(S, dtype=complex))
    N = S.shape[0]
    if not 1 <= P < N:
        raise ValueError(f"split index {P} outside [1, {N - 1}]")
    S22 = S[P:, P:]
    w = np.linalg.eigvalsh(S22)
    if w[0] <= psd_tolerance(w[-1]):
        raise SingularBlock("S_22 is singular")
    T21 = np.linalg.solve(S22, S[P:, :P])
    S12 = hermitize(S[:P, :P] - S[:P, P:] @ T21)
    return WishartBlocks(s12=S12, s22=S22, t21=T21)


def _hyp2f1_series(a, b, c, z, rtol, max_terms):
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    term = np.ones_like(z)
    active = np.flatnonzero(z != 0)
    n = 0
    while active.size:
        if n >= max_terms:
            raise NoConvergence(f"2F1 series did not converge in {max_terms} terms")
        zs = z[active]
        term[active] *= (a + n) * (b + n) / ((c + n) * (n + 1)) * zs
        out[active] += term[active]
        n += 1
        # geometric bound on the remaining tail once the term ratio is below one
        ratio = np.maximum(abs((a + n) * (b + n) / ((c + n) * (n + 1))) * zs, zs)
        with np.errstate(divide="ignore"):
            tail = np.abs(term[active]) * ratio / (1.0 - ratio)
        done = (ratio < 1.0) & (tail <= rtol * np.abs(out[active]))
        active = active[~done]
    return out


def gauss_2f1(a, b, c, z, rtol=1e-12, max_terms=1_000_000):
    """Gauss hypergeometric function on ``0 <= z < 1`` by direct summation.

    For ``z > 0.5`` and ``c - a - b < 0`` the Euler transformation
    ``(1-z)^(c-a-b) 2F1(c-a, c-b; c; z)`` is summed instead, since its
    series then decays faster near ``z = 1``. Accepts scalar or array ``z``.
    """
    if not c > 0:
        raise BadParam(f"c must be positive, got {c}")
    zarr = np.asarray(z, dtype=float)
    if np.any(zarr < 0) or np.any(zarr >= 1):
        raise BadParam("z must lie in [0, 1)")
    out = np.empty_like(zarr)
    lo = (zarr <= 0.5) | (c - a - b >= 0)
    if np.any(lo):
        out[lo] = _hyp2f1_series(a, b, c, zarr[lo], rtol, max_terms)
    if np.any(~lo):
        zh = zarr[~lo]
        out[~lo] = (1.0 - zh) ** (c - a - b) * _hyp2f1_series(c - a, c - b, c, zh, rtol, max_terms)
    return float(out) if out.ndim == 0 else out


def beta_pdf(x, p: BetaParams):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise BadParam("x must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        logp = special.xlogy(p.alpha - 1, x) + special.xlog1py(p.beta - 1, -x) - special.betaln(p.alpha, p.beta)
    out = np.exp(logp)
    return float(out) if out.ndim == 0 else out


def beta_cdf(x, p: BetaParams):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise BadParam("x must lie in [0, 1]")
    out = special.betainc(p.alpha, p.beta, x)
    return float(out) if np.ndim(out) == 0 else out


def beta_sample(rng, p: BetaParams, size=None):
    """Gamma-ratio construction ``Ga / (Ga + Gb)``."""
    rng = as_rng(rng)
    ga = rng.gamma(p.alpha, size)
    gb = rng.gamma(p.beta, size)
    return ga / (ga + gb)
