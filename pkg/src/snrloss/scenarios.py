"""Covariance-mismatch scenarios and training-set generation.

A :class:`Scenario` bundles the covariance of the data to be filtered
(``sigma``), the covariance of the training samples (``ct``), the signal
signature ``v`` and the kind-specific constants needed to pick the matching
SNR-loss law.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import Rng, as_rng, sample_wishart
from .errors import BadAngle, BadParam, DegenerateQ, InsufficientDoF, NotPD
from .hermitian import H, hermitian_inv_sqrt, hermitian_sqrt, hermitize, psd_tolerance
from .laws import LossLaw, derive_general_params, snr_opt

SCENARIO_KINDS = ("mvdr", "homog", "mpdr", "ger", "surprise", "wishart_mismatch", "student")

# interference used throughout the figures: ULA, N=16, three jammers
JAMMERS = ((-12.0, 35.0), (9.0, 25.0), (25.0, 30.0))


@dataclass(frozen=True)
class Interferer:
    angle_deg: float
    power_db: float

    def __post_init__(self):
        if not -90.0 < self.angle_deg < 90.0:
            raise BadAngle(f"angle {self.angle_deg} outside (-90, 90)")


def ula_steering(N: int, angle_deg: float):
    """Half-wavelength ULA response ``exp(j pi n sin(theta))``, n = 0..N-1."""
    if not -90.0 < angle_deg < 90.0:
        raise BadAngle(f"angle {angle_deg} outside (-90, 90)")
    n = np.arange(N)
    return np.exp(1j * np.pi * n * math.sin(math.radians(angle_deg)))


def build_sigma(N: int, interferers=(), gamma: float = 1.0):
    """Return ``(sigma, G)`` with ``sigma = G G^H + gamma I``.

    Column ``r`` of ``G`` is the steering vector of interferer ``r`` scaled
    by ``10^(power_db / 20)``, i.e. its per-element power above a unit noise
    floor.
    """
    if not gamma > 0:
        raise BadParam("gamma must be positive")
    interferers = [i if isinstance(i, Interferer) else Interferer(*i) for i in interferers]
    G = np.zeros((N, len(interferers)), dtype=complex)
    for r, itf in enumerate(interferers):
        G[:, r] = 10.0 ** (itf.power_db / 20.0) * ula_steering(N, itf.angle_deg)
    sigma = hermitize(G @ H(G) + gamma * np.eye(N))
    return sigma, G


def jammer_sigma(N: int = 16, gamma: float = 1.0):
    """``(sigma, G)`` for the three jammers of ``JAMMERS`` on an ``N``-element ULA."""
    return build_sigma(N, [Interferer(a, p) for a, p in JAMMERS], gamma)


def _check_pd(A, name="matrix"):
    w = np.linalg.eigvalsh(hermitize(A))
    if not w[0] > psd_tolerance(w[-1]):
        raise NotPD(f"{name} is not positive definite")


@dataclass
class Scenario:
    sigma: np.ndarray
    ct: np.ndarray
    v: np.ndarray
    kind: str
    soi_power: float = 0.0
    gamma: float = 1.0
    extras: dict = field(default_factory=dict)
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise BadParam(f"unknown scenario kind {self.kind!r}")
        self.sigma = hermitize(self.sigma)
        self.ct = hermitize(self.ct)
        self.v = np.asarray(self.v, dtype=complex).ravel()
        _check_pd(self.sigma, "sigma")
        _check_pd(self.ct, "ct")

    @property
    def N(self) -> int:
        return self.v.size

    @property
    def snr_opt(self) -> float:
        return snr_opt(self.sigma, self.v, self.soi_power)

    def loss_law(self, K: int) -> LossLaw:
        """SNR-loss law of the fully adaptive filter trained on ``K`` samples."""
        N = self.N
        if self.kind in ("mvdr", "homog"):
            return LossLaw.mvdr(N, K)
        if self.kind == "mpdr":
            return LossLaw.mpdr(N, K, self.snr_opt / self.gamma)
        if self.kind == "student":
            return LossLaw.student(N, K, self.extras["nu"])
        if self.kind == "surprise":
            return LossLaw.undernulled(N, K, self.extras["qcq"])
        params = derive_general_params(self.sigma, self.ct, self.v)
        if self.kind == "ger":
            return LossLaw.ger(N, K, 1.0 / params.ratio, params.omega_eigs)
        return LossLaw.general(N, K, params)

    # serialisation -------------------------------------------------------
    def to_dict(self) -> dict:
        def cplx(a):
            a = np.asarray(a)
            return np.stack([a.real, a.imag], axis=-1).tolist()

        extras = {k: (cplx(val) if np.iscomplexobj(val) else
                      (val.tolist() if isinstance(val, np.ndarray) else val))
                  for k, val in self.extras.items()}
        return {
            "kind": self.kind,
            "sigma": cplx(self.sigma),
            "ct": cplx(self.ct),
            "v": cplx(self.v),
            "soi_power": self.soi_power,
            "gamma": self.gamma,
            "extras": extras,
            "labels": dict(self.labels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        def cplx(x):
            a = np.asarray(x, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        extras = dict(d.get("extras", {}))
        if "q" in extras:
            extras["q"] = cplx(extras["q"])
        return cls(sigma=cplx(d["sigma"]), ct=cplx(d["ct"]), v=cplx(d["v"]), kind=d["kind"],
                   soi_power=float(d.get("soi_power", 0.0)), gamma=float(d.get("gamma", 1.0)),
                   extras=extras, labels=dict(d.get("labels", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


def make_mvdr(sigma, v) -> Scenario:
    return Scenario(sigma=sigma, ct=np.array(sigma, dtype=complex), v=v, kind="mvdr")


def make_homog(sigma, v, gamma) -> Scenario:
    return Scenario(sigma=sigma, ct=gamma * np.asarray(sigma), v=v, kind="homog", gamma=gamma)


def make_mpdr(sigma, v, P, gamma=1.0) -> Scenario:
    """Training covariance ``gamma sigma + P v v^H``."""
    if P < 0:
        raise BadParam("P must be nonnegative")
    v = np.asarray(v, dtype=complex)
    ct = gamma * np.asarray(sigma) + P * np.outer(v, v.conj())
    return Scenario(sigma=sigma, ct=ct, v=v, kind="mpdr", soi_power=float(P), gamma=gamma)


def make_mpdr_snr(sigma, v, snr_opt_value, gamma=1.0) -> Scenario:
    """MPDR scenario with the SoI power chosen to reach a given optimum SNR."""
    P = snr_opt_value / snr_opt(sigma, v, 1.0)
    return make_mpdr(sigma, v, P, gamma)


def make_surprise(ct, v, q_angle, q_power=1.0, target_qcq=None) -> Scenario:
    """Data covariance ``ct + q q^H`` with ``q^H ct^{-1} v = 0``.

    ``q`` starts as a steering vector towards ``q_angle`` and is projected
    obliquely (in the ``ct^{-1}`` metric) off ``v``. It is then scaled to a
    per-element power ``q_power`` (``||q||^2 = N q_power``) or, when
    ``target_qcq`` is given, so that ``q^H ct^{-1} q = target_qcq``.
    """
    ct = hermitize(ct)
    v = np.asarray(v, dtype=complex)
    N = v.size
    q0 = ula_steering(N, q_angle)
    civ = np.linalg.solve(ct, v)
    q = q0 - (np.vdot(civ, q0) / np.vdot(civ, v)) * v
    nq = np.linalg.norm(q)
    if nq < 1e-10:
        raise DegenerateQ("interference direction collapses onto v after projection")
    q = q / nq
    if target_qcq is not None:
        q = q * math.sqrt(target_qcq / np.vdot(q, np.linalg.solve(ct, q)).real)
    else:
        q = q * math.sqrt(N * q_power)
    qcq = float(np.vdot(q, np.linalg.solve(ct, q)).real)
    sigma = ct + np.outer(q, q.conj())
    return Scenario(sigma=sigma, ct=ct, v=v, kind="surprise",
                    extras={"q": q, "qcq": qcq, "q_angle": float(q_angle)})


def _omega_extras(sigma, ct, v):
    params = derive_general_params(sigma, ct, v)
    return {"lambda": 1.0 / params.ratio, "omega_eigs": params.omega_eigs.tolist(),
            "deltas": params.deltas.tolist(), "ratio": params.ratio}


def make_ger(sigma, v, rng, strength=1.0) -> Scenario:
    """Training covariance satisfying ``ct^{-1} v = sigma^{-1} v``.

    ``ct = sigma + strength * B B^H`` where ``B`` is an ``N x (N-2)`` Gaussian
    matrix projected so that ``B^H sigma^{-1} v = 0``. Then
    ``ct (sigma^{-1} v) = v`` exactly, so the relation holds with
    ``lambda = 1`` while ``ct != sigma``.
    """
    rng = as_rng(rng)
    sigma = hermitize(sigma)
    v = np.asarray(v, dtype=complex)
    N = v.size
    u = np.linalg.solve(sigma, v)
    u = u / np.linalg.norm(u)
    B = rng.cnormal((N, N - 2))
    B = B - np.outer(u, u.conj() @ B)
    ct = sigma + strength * (B @ H(B))
    extras = _omega_extras(sigma, ct, v)
    extras["strength"] = float(strength)
    return Scenario(sigma=sigma, ct=ct, v=v, kind="ger", extras=extras)


def make_wishart_mismatch(sigma, v, rng, eta_db_range=(-6.0, 6.0), dof=None) -> Scenario:
    """``ct = sigma^{1/2} W^{-1} sigma^{1/2}`` with ``W`` Wishart of mean ``eta I``.

    ``10 log10(eta)`` is uniform on ``eta_db_range``; ``W = (eta/dof) CW(dof, I)``.
    ``dof`` defaults to ``2N``.
    """
    rng = as_rng(rng)
    sigma = hermitize(sigma)
    N = sigma.shape[0]
    dof = 2 * N if dof is None else dof
    if dof < N:
        raise InsufficientDoF(f"dof={dof} < N={N}")
    lo, hi = eta_db_range
    eta_db = lo + (hi - lo) * rng.gen.random()
    eta = 10.0 ** (eta_db / 10.0)
    W = (eta / dof) * sample_wishart(rng, N, dof)
    root = hermitian_sqrt(sigma)
    ct = root @ np.linalg.solve(W, root)
    extras = _omega_extras(sigma, ct, v)
    extras.update(eta=eta, eta_db=eta_db, dof=dof)
    return Scenario(sigma=sigma, ct=ct, v=v, kind="wishart_mismatch", extras=extras)


def make_student(sigma, v, nu, mu_scale=None) -> Scenario:
    """Student-distributed training samples with scale ``mu`` (default ``nu - N``)."""
    sigma = hermitize(sigma)
    N = sigma.shape[0]
    if not nu > N:
        raise BadParam(f"nu must exceed N={N}, got {nu}")
    mu = float(nu - N) if mu_scale is None else float(mu_scale)
    if not mu > 0:
        raise BadParam("mu_scale must be positive")
    return Scenario(sigma=sigma, ct=np.array(sigma), v=v, kind="student",
                    extras={"nu": float(nu), "mu": mu})


# --------------------------------------------------------------------------
# training data
# --------------------------------------------------------------------------


class TrainingSampler:
    """Precomputes the square roots a scenario needs to draw training sets."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        if scenario.kind == "student":
            self.root = math.sqrt(scenario.extras["mu"]) * hermitian_sqrt(scenario.sigma)
            self.nu = scenario.extras["nu"]
        else:
            self.root = hermitian_sqrt(scenario.ct)

    def draw(self, rng, K):
        rng = as_rng(rng)
        N = self.scenario.N
        if K < 1:
            raise BadParam("K must be at least 1")
        Z = rng.cnormal((N, K))
        if self.scenario.kind == "student":
            Wnu = sample_wishart(rng, N, self.nu)
            return self.root @ (hermitian_inv_sqrt(Wnu) @ Z)
        return self.root @ Z


def draw_training_set(rng, scenario: Scenario, K: int):
    """``N x K`` training matrix for ``scenario``.

    Gaussian kinds draw ``ct^{1/2} Z``; the Student kind draws
    ``(mu sigma)^{1/2} W_nu^{-1/2} Z`` with ``W_nu ~ CW(N, nu, I)``.
    """
    return TrainingSampler(scenario).draw(rng, K)


def build_scenario(spec: dict) -> Scenario:
    """Build a scenario from a plain description.

    A dict holding ``sigma`` is read with :meth:`Scenario.from_dict`.
    Otherwise the keys are ``kind``, ``N`` (16), ``interferers`` (list of
    ``[angle_deg, power_db]`` or ``"default"``, the three jammers of ``JAMMERS``), ``look_angle``
    (0), ``gamma`` (1) and per-kind extras: ``snr_opt`` or ``P`` for mpdr,
    ``nu`` and ``mu`` for student, ``q_angle`` and ``qcq`` for surprise,
    ``seed``, ``strength``, ``eta_db_range``, ``dof`` for the random kinds.
    """
    if "sigma" in spec:
        return Scenario.from_dict(spec)
    spec = dict(spec)
    kind = spec.pop("kind", "mvdr")
    N = int(spec.pop("N", 16))
    itf = spec.pop("interferers", "default")
    gamma = float(spec.pop("gamma", 1.0))
    look = float(spec.pop("look_angle", 0.0))
    if itf == "default":
        itf = JAMMERS
    sigma, _ = build_sigma(N, [Interferer(float(a), float(p)) for a, p in itf], 1.0)
    v = ula_steering(N, look)
    seed = int(spec.pop("seed", 0))
    if kind == "mvdr":
        sc = make_mvdr(sigma, v)
    elif kind == "homog":
        sc = make_homog(sigma, v, gamma)
    elif kind == "mpdr":
        if "P" in spec:
            sc = make_mpdr(sigma, v, float(spec.pop("P")), gamma)
        else:
            sc = make_mpdr_snr(sigma, v, float(spec.pop("snr_opt", 0.0)), gamma)
    elif kind == "student":
        sc = make_student(sigma, v, float(spec.pop("nu")), spec.pop("mu", None))
    elif kind == "surprise":
        qcq = spec.pop("qcq", None)
        sc = make_surprise(sigma, v, float(spec.pop("q_angle", 40.0)),
                           float(spec.pop("q_power", 1.0)),
                           None if qcq is None else float(qcq))
    elif kind == "ger":
        sc = make_ger(sigma, v, Rng(seed, 0), float(spec.pop("strength", 1.0)))
    elif kind == "wishart_mismatch":
        sc = make_wishart_mismatch(sigma, v, Rng(seed, 0),
                                   tuple(spec.pop("eta_db_range", (-6.0, 6.0))), spec.pop("dof", None))
    else:
        raise BadParam(f"unknown scenario kind {kind!r}")
    if spec:
        raise BadParam(f"unused scenario keys: {sorted(spec)}")
    return sc
