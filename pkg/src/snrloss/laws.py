"""SNR metrics and the distribution laws of the SNR loss.

Every law is described by a :class:`LossLaw`. :func:`sample_rho` draws from
its stochastic representation (built from complex chi-square variates),
while :func:`pdf_rho` / :func:`cdf_rho` evaluate closed forms where they
exist. Laws that only have a representation get an empirical cdf from a
fixed-seed cache of 10^6 draws; those results are flagged approximate.
"""

from __future__ import annotations

import functools
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import interpolate, special

from .distributions import BetaParams, Rng, as_rng, beta_pdf, gauss_2f1
from .errors import BadParam, NoClosedForm, Singular, ZeroVector
from .hermitian import H, hermitian_inv_sqrt, hermitize, orth_complement

KINDS = (
    "mvdr", "mpdr", "ger", "undernulled", "general", "student",
    "pa_mvdr", "pa_mpdr", "ec_approx", "pchol_approx", "dl_approx",
)
APPROXIMATE_KINDS = frozenset({"ec_approx", "pchol_approx", "dl_approx"})
REPRESENTATION_ONLY = frozenset({"ger", "undernulled", "general"})

EMPIRICAL_DRAWS = 1_000_000
EMPIRICAL_SEED = 0x534E52


# --------------------------------------------------------------------------
# SNR metrics
# --------------------------------------------------------------------------


def snr(w, v, sigma, P=1.0) -> float:
    """Output SNR ``P |w^H v|^2 / (w^H sigma w)``."""
    w = np.asarray(w, dtype=complex)
    if not np.any(w):
        raise ZeroVector("filter is the zero vector")
    return float(P * abs(np.vdot(w, v)) ** 2 / np.vdot(w, sigma @ w).real)


def snr_opt(sigma, v, P=1.0) -> float:
    """Optimum SNR ``P v^H sigma^{-1} v``."""
    return float(P * np.vdot(v, np.linalg.solve(sigma, v)).real)


def snr_loss(w, v, sigma) -> float:
    """``|w^H v|^2 / ((v^H sigma^{-1} v)(w^H sigma w))``, a value in [0, 1]."""
    w = np.asarray(w, dtype=complex)
    if not np.any(w):
        raise ZeroVector("filter is the zero vector")
    num = abs(np.vdot(w, v)) ** 2
    den = np.vdot(v, np.linalg.solve(sigma, v)).real * np.vdot(w, sigma @ w).real
    return float(min(num / den, 1.0))


def snr_loss_batch(W, v, sigma):
    """Vectorised :func:`snr_loss` over the rows of ``W`` (shape ``(M, N)``)."""
    W = np.asarray(W, dtype=complex)
    vsv = np.vdot(v, np.linalg.solve(sigma, v)).real
    num = np.abs(W.conj() @ v) ** 2
    den = np.einsum("mi,ij,mj->m", W.conj(), sigma, W).real
    return np.minimum(num / (vsv * den), 1.0)


def mpdr_map(rho_mvdr, snr_opt_value):
    """Map an MVDR-type loss to the MPDR loss: ``rho / (1 + (1 - rho) snr)``."""
    rho = np.asarray(rho_mvdr, dtype=float)
    out = rho / (1.0 + (1.0 - rho) * snr_opt_value)
    return float(out) if out.ndim == 0 else out


def _mpdr_map_inverse(x, s):
    return x * (1.0 + s) / (1.0 + x * s)


def coef_a(T, sigma, v) -> float:
    """Fraction of the energy of ``sigma^{-1/2} v`` inside ``range(sigma^{1/2} T)``."""
    T = np.asarray(T, dtype=complex)
    A = H(T) @ sigma @ T
    try:
        Tv = H(T) @ v
        num = np.vdot(Tv, np.linalg.solve(A, Tv)).real
    except np.linalg.LinAlgError as exc:
        raise Singular("T^H sigma T is singular") from exc
    den = np.vdot(v, np.linalg.solve(sigma, v)).real
    return float(min(num / den, 1.0))


# --------------------------------------------------------------------------
# Law descriptor
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LossLaw:
    """Parameters of one SNR-loss distribution.

    Only the fields relevant to ``kind`` are used. ``ratio`` is
    ``(v^H sigma^{-1} v) / (v^H C_t^{-1} v)`` for the general law, ``lam``
    the generalized eigen-relation constant and ``qcq`` the value of
    ``q^H C_t^{-1} q`` for an undernulled interference.
    """

    kind: str
    N: int
    K: int
    R: int | None = None
    snr_opt_over_gamma: float = 0.0
    lam: float = 1.0
    omega_eigs: tuple = ()
    deltas: tuple = ()
    nu: float | None = None
    a: float = 1.0
    a_prime: float = 1.0
    ratio: float = 1.0
    qcq: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadParam(f"unknown law kind {self.kind!r}")
        N, K, R = self.N, self.K, self.R
        if N < 2:
            raise BadParam("N must be at least 2")
        if self.kind in ("pa_mvdr", "pa_mpdr", "ec_approx", "pchol_approx", "dl_approx"):
            if R is None or not 1 <= R < N:
                raise BadParam(f"{self.kind} needs 1 <= R < N, got R={R}")
            if K < R:
                raise BadParam(f"{self.kind} needs K >= R")
        elif K < N:
            raise BadParam(f"{self.kind} needs K >= N, got K={K}, N={N}")
        if self.kind == "student" and not (self.nu is not None and self.nu > 0):
            raise BadParam("student law needs nu > 0")
        if self.kind in ("ger", "general"):
            if len(self.omega_eigs) != N - 1:
                raise BadParam(f"omega_eigs must have N-1={N - 1} entries")
            if any(x <= 0 for x in self.omega_eigs):
                raise BadParam("omega_eigs must be positive")
        if self.kind == "general":
            if len(self.deltas) != N - 1 or any(d < 0 for d in self.deltas):
                raise BadParam("deltas must be N-1 nonnegative values")
            if not self.ratio > 0:
                raise BadParam("ratio must be positive")
        if self.kind in ("pa_mvdr", "pa_mpdr") and not 0 < self.a <= 1 + 1e-12:
            raise BadParam(f"a must lie in (0, 1], got {self.a}")
        if self.kind == "pchol_approx" and not 0 < self.a_prime <= 1 + 1e-12:
            raise BadParam(f"a_prime must lie in (0, 1], got {self.a_prime}")
        if self.snr_opt_over_gamma < 0 or self.qcq < 0 or self.lam <= 0:
            raise BadParam("snr_opt_over_gamma, qcq must be >= 0 and lam > 0")

    # constructors ------------------------------------------------------
    @classmethod
    def mvdr(cls, N, K):
        return cls("mvdr", N, K)

    @classmethod
    def mpdr(cls, N, K, snr_opt_over_gamma):
        return cls("mpdr", N, K, snr_opt_over_gamma=float(snr_opt_over_gamma))

    @classmethod
    def student(cls, N, K, nu):
        return cls("student", N, K, nu=float(nu))

    @classmethod
    def ger(cls, N, K, lam, omega_eigs):
        return cls("ger", N, K, lam=float(lam), omega_eigs=tuple(float(x) for x in omega_eigs))

    @classmethod
    def undernulled(cls, N, K, qcq):
        return cls("undernulled", N, K, qcq=float(qcq))

    @classmethod
    def general(cls, N, K, params: "GeneralRepParams"):
        return cls("general", N, K, ratio=float(params.ratio),
                   omega_eigs=tuple(float(x) for x in params.omega_eigs),
                   deltas=tuple(float(x) for x in params.deltas))

    @classmethod
    def pa_mvdr(cls, N, K, R, a):
        return cls("pa_mvdr", N, K, R=R, a=float(a))

    @classmethod
    def pa_mpdr(cls, N, K, R, a, snr_opt_over_gamma):
        return cls("pa_mpdr", N, K, R=R, a=float(a), snr_opt_over_gamma=float(snr_opt_over_gamma))

    # derived properties --------------------------------------------------
    @property
    def approximate(self) -> bool:
        return self.kind in APPROXIMATE_KINDS

    @property
    def has_closed_form(self) -> bool:
        return self.kind not in REPRESENTATION_ONLY

    @property
    def scale(self) -> float:
        """Upper end of the support."""
        if self.kind in ("pa_mvdr", "pa_mpdr"):
            return self.a
        if self.kind == "pchol_approx":
            return self.a_prime
        return 1.0

    @property
    def beta_params(self) -> BetaParams:
        """Beta law of the (unscaled) MVDR-type core of this law."""
        if self.kind in ("mvdr", "mpdr", "student", "ger", "undernulled", "general"):
            return BetaParams.from_literature(self.N - 1, self.K - self.N + 2)
        return BetaParams.from_literature(self.R, self.K - self.R + 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["omega_eigs"] = list(self.omega_eigs)
        d["deltas"] = list(self.deltas)
        d["lambda"] = d.pop("lam")
        d["approximate"] = self.approximate
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LossLaw":
        d = dict(d)
        d.pop("approximate", None)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        for key in ("omega_eigs", "deltas"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LossLaw":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GeneralRepParams:
    ratio: float
    omega_eigs: np.ndarray = field(repr=False)
    deltas: np.ndarray = field(repr=False)


def derive_general_params(sigma, ct, v) -> GeneralRepParams:
    """Scenario constants of the arbitrary-mismatch representation.

    Builds a unitary ``Q`` whose first column is ``C_t^{-1/2} v`` normalised,
    forms ``Omega = Q^H C_t^{-1/2} sigma C_t^{-1/2} Q`` and returns the
    eigenvalues of ``Omega_22`` together with the noncentralities
    ``|u_i^H Omega_22^{-1} Omega_21|^2``.
    """
    sigma = hermitize(sigma)
    ct = hermitize(ct)
    v = np.asarray(v, dtype=complex)
    try:
        ct_is = hermitian_inv_sqrt(ct)
        vsv = np.vdot(v, np.linalg.solve(sigma, v)).real
        vcv = np.vdot(v, np.linalg.solve(ct, v)).real
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise Singular(str(exc)) from exc
    u = ct_is @ v
    Q = np.column_stack([u / np.linalg.norm(u), orth_complement(u)])
    Omega = hermitize(H(Q) @ ct_is @ sigma @ ct_is @ Q)
    O22 = Omega[1:, 1:]
    O21 = Omega[1:, 0]
    lam, U = np.linalg.eigh(O22)
    lam, U = lam[::-1], U[:, ::-1]
    tbar = np.linalg.solve(O22, O21)
    deltas = np.abs(H(U) @ tbar) ** 2
    return GeneralRepParams(ratio=float(vsv / vcv), omega_eigs=lam, deltas=deltas)


# --------------------------------------------------------------------------
# Representation sampler
# --------------------------------------------------------------------------


def sample_rho(rng, law: LossLaw, size=None):
    """Draw SNR losses from the stochastic representation of ``law``."""
    rng = as_rng(rng)
    n = 1 if size is None else int(size)
    G = rng.gamma
    N, K, R = law.N, law.K, law.R
    kind = law.kind
    if kind == "mvdr":
        rho = 1.0 / (1.0 + G(N - 1, n) / G(K - N + 2, n))
    elif kind == "mpdr":
        rho = 1.0 / (1.0 + (1.0 + law.snr_opt_over_gamma) * G(N - 1, n) / G(K - N + 2, n))
    elif kind == "ger":
        lam_i = np.asarray(law.omega_eigs)
        num = G(1.0, (n, N - 1)) @ lam_i
        rho = 1.0 / (1.0 + num / (law.lam * G(K - N + 2, n)))
    elif kind == "undernulled":
        num = (G(N - 2, n) if N > 2 else 0.0) + (1.0 + law.qcq) * G(1.0, n)
        rho = 1.0 / (1.0 + num / G(K - N + 2, n))
    elif kind == "general":
        lam_i = np.asarray(law.omega_eigs)
        delta = np.asarray(law.deltas)
        V = G(K - N + 2, n)
        J = rng.gen.poisson(V[:, None] * delta[None, :])
        chi = G(1.0 + J)
        rho = 1.0 / (1.0 + law.ratio * (chi @ lam_i) / V)
    elif kind == "student":
        rho = 1.0 / (1.0 + (1.0 + G(K - N + 1, n) / G(law.nu, n)) * G(N - 1, n) / G(K - N + 2, n))
    elif kind == "pa_mvdr":
        rho = law.a / (1.0 + G(R, n) / G(K - R + 1, n))
    elif kind == "pa_mpdr":
        rho = law.a / (1.0 + (1.0 + law.a * law.snr_opt_over_gamma) * G(R, n) / G(K - R + 1, n))
    elif kind in ("ec_approx", "dl_approx", "pchol_approx"):
        rho = law.scale / (1.0 + G(R, n) / G(K - R + 1, n))
    else:  # pragma: no cover - guarded by LossLaw validation
        raise BadParam(kind)
    return float(rho[0]) if size is None else rho


# --------------------------------------------------------------------------
# Densities
# --------------------------------------------------------------------------


def _log_mvdr_core(rho, bp: BetaParams):
    with np.errstate(divide="ignore"):
        return special.xlogy(bp.alpha - 1, rho) + special.xlog1py(bp.beta - 1, -rho) - special.betaln(bp.alpha, bp.beta)


def _log_student_prefactor(N, K, nu):
    """``log[B(K-N+1, nu+N-1) / B(K-N+1, nu)]``.

    With integer ``N`` the ratio telescopes to
    ``prod_{j<N-1} (nu+j) / (nu+K-N+1+j)``, which stays accurate for huge ``nu``
    where differencing two log-Beta values does not.
    """
    j = np.arange(N - 1)
    return -float(np.sum(np.log1p((K - N + 1) / (nu + j))))


def _student_pdf(rho, law: LossLaw):
    N, K, nu = law.N, law.K, law.nu
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    inside = (rho > 0) & (rho < 1)
    r = rho[inside]
    log_pref = _log_student_prefactor(N, K, nu)
    f21 = gauss_2f1(K + 1, K - N + 1, nu + K, 1.0 - r)
    out[inside] = np.exp(_log_mvdr_core(r, law.beta_params) + log_pref) * f21
    if N == 2:
        out[rho == 1.0] = np.exp(log_pref - special.betaln(1, K))
    return out


def pdf_rho(rho, law: LossLaw):
    """Closed-form density of the SNR loss."""
    if not law.has_closed_form:
        raise NoClosedForm(f"no closed-form density for kind {law.kind!r}")
    x = np.asarray(rho, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise BadParam("rho must lie in [0, 1]")
    kind = law.kind
    bp = law.beta_params
    if kind in ("mvdr", "ec_approx", "dl_approx"):
        out = np.asarray(beta_pdf(x, bp))
    elif kind == "mpdr":
        s = law.snr_opt_over_gamma
        K, N = law.K, law.N
        out = np.exp(_log_mvdr_core(x, bp) + (K - N + 2) * np.log1p(s) - (K + 1) * np.log1p(x * s))
    elif kind == "student":
        out = _student_pdf(x, law)
    else:
        scale = law.scale
        y = x / scale
        inside = y <= 1.0
        out = np.zeros_like(x)
        core = _log_mvdr_core(y[inside], bp) - np.log(scale)
        if kind == "pa_mpdr":
            s = law.snr_opt_over_gamma
            K, R = law.K, law.R
            core = core + (K - R + 1) * np.log1p(law.a * s) - (K + 1) * np.log1p(x[inside] * s)
        out[inside] = np.exp(core)
    return float(out) if out.ndim == 0 else out


def cdf_rho(rho, law: LossLaw, allow_empirical=True):
    """Cumulative distribution function of the SNR loss.

    Beta-type laws use the regularized incomplete beta function, the MPDR
    variants an exact change of variables, the Student law a cached
    quadrature of its density. Representation-only laws fall back to an
    empirical cdf (see :func:`cdf_is_empirical`).
    """
    x = np.asarray(rho, dtype=float)
    kind = law.kind
    bp = law.beta_params
    if kind in REPRESENTATION_ONLY:
        if not allow_empirical:
            raise NoClosedForm(f"no closed-form cdf for kind {kind!r}")
        samples = _empirical_samples(law)
        out = np.searchsorted(samples, x, side="right") / samples.size
    elif kind in ("mvdr", "ec_approx", "dl_approx"):
        out = special.betainc(bp.alpha, bp.beta, np.clip(x, 0.0, 1.0))
    elif kind == "mpdr":
        y = _mpdr_map_inverse(np.clip(x, 0.0, 1.0), law.snr_opt_over_gamma)
        out = special.betainc(bp.alpha, bp.beta, np.clip(y, 0.0, 1.0))
    elif kind in ("pa_mvdr", "pchol_approx"):
        out = special.betainc(bp.alpha, bp.beta, np.clip(x / law.scale, 0.0, 1.0))
    elif kind == "pa_mpdr":
        y = np.clip(x / law.a, 0.0, 1.0)
        y = _mpdr_map_inverse(y, law.a * law.snr_opt_over_gamma)
        out = special.betainc(bp.alpha, bp.beta, np.clip(y, 0.0, 1.0))
    elif kind == "student":
        out = _student_cdf_spline(law)(np.clip(x, 0.0, 1.0))
        out = np.clip(out, 0.0, 1.0)
    else:  # pragma: no cover
        raise BadParam(kind)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def cdf_is_empirical(law: LossLaw) -> bool:
    return law.kind in REPRESENTATION_ONLY


@functools.lru_cache(maxsize=16)
def _empirical_samples(law: LossLaw):
    samples = sample_rho(Rng(EMPIRICAL_SEED, 0), law, EMPIRICAL_DRAWS)
    samples.sort()
    samples.setflags(write=False)
    return samples


STUDENT_RHO_LO = 1e-3
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


@functools.lru_cache(maxsize=32)
def _student_cdf_spline(law: LossLaw, intervals=4096):
    """Cubic Hermite interpolant of the Student cdf.

    Nodes are uniform on ``[rho_lo, 1]``; each interval is integrated with
    12-point Gauss-Legendre. Below ``rho_lo`` the density behaves like a
    power ``rho^q`` with ``q = min(K-N+1, nu-1)``, which fixes the head mass.
    """
    N, K, nu = law.N, law.K, law.nu
    lo = STUDENT_RHO_LO
    nodes = np.linspace(lo, 1.0, intervals + 1)
    a, b = nodes[:-1], nodes[1:]
    half = 0.5 * (b - a)
    pts = (0.5 * (a + b))[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = _student_pdf(pts.ravel(), law).reshape(pts.shape)
    pieces = half * (vals @ _GL_WEIGHTS)
    q = min(K - N + 1, nu - 1)
    pdf_nodes = _student_pdf(nodes, law)
    head = lo * pdf_nodes[0] / (q + 1.0)
    cdf_nodes = head + np.concatenate([[0.0], np.cumsum(pieces)])
    spline = interpolate.CubicHermiteSpline(nodes, cdf_nodes, pdf_nodes)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= lo, spline(np.maximum(x, lo)), head * (np.maximum(x, 0.0) / lo) ** (q + 1.0))
        return out

    return cdf


# --------------------------------------------------------------------------
# Helpers tying scenarios to laws
# --------------------------------------------------------------------------


def law_mean(law: LossLaw) -> float:
    """Mean of the law when it is a scaled Beta, else NoClosedForm."""
    if law.kind in ("mvdr", "pa_mvdr", "ec_approx", "dl_approx", "pchol_approx"):
        return law.scale * law.beta_params.mean
    raise NoClosedForm(f"no closed-form mean for kind {law.kind!r}")
