"""Acceptance criteria A1-A9.

Each criterion returns a :class:`Criterion` made of named sub-checks. The
``quick`` level runs A1-A5 with 10^3 trials; ``full`` runs everything at
the stated trial counts. ``tamper_beta`` swaps the MVDR Beta parameters
used as the reference in A1/A2, which must make A1 fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import filters as fl
from . import hermitian as hm
from . import kernels
from .distributions import BetaParams, Rng, beta_cdf, beta_pdf, gauss_2f1, sample_wishart
from .laws import LossLaw, cdf_rho, coef_a, pdf_rho, sample_rho, snr_loss, snr_opt
from .montecarlo import ExperimentConfig, FilterSpec, ks_distance, ks_two_sample, run_losses
from .scenarios import (TrainingSampler, make_ger, make_mpdr_snr, make_mvdr,
                        make_student, make_surprise, make_wishart_mismatch, jammer_sigma,
                        ula_steering)

DEFAULT_SEED = 20240607
QUICK_TRIALS = 1000


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class Criterion:
    cid: str
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, detail):
        self.checks.append(Check(name, bool(passed), detail))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [c.name for c in self.checks if not c.passed]
        extra = f" (failed: {', '.join(failed)})" if failed else ""
        return f"{self.cid} {status} {self.title} [{self.seconds:.1f}s]{extra}"


def sub_seed(seed: int, tag: int) -> int:
    """Independent 64-bit seed for sub-experiment ``tag``."""
    state = np.random.SeedSequence([seed & ((1 << 64) - 1), tag]).generate_state(2, np.uint64)
    return int(state[0])


def _scenario_N(N):
    sigma, _ = jammer_sigma(N)
    return sigma, ula_steering(N, 0.0)


def _direct(scenario, K, M, seed, filt=None):
    cfg = ExperimentConfig(scenario=scenario, K=K, trials=M, seed=seed, filter=filt or FilterSpec())
    return np.sort(run_losses(cfg))


def _mvdr_ref(N, K, tamper):
    bp = LossLaw.mvdr(N, K).beta_params
    return BetaParams(bp.beta, bp.alpha) if tamper else bp


# --------------------------------------------------------------------------


def a1(level="full", seed=DEFAULT_SEED, tamper_beta=False):
    c = Criterion("A1", "mean SNR loss of the fully adaptive filter")
    M = QUICK_TRIALS if level == "quick" else 100_000
    sigma, v = _scenario_N(16)
    x = _direct(make_mvdr(sigma, v), 29, M, sub_seed(seed, 1))
    c.add("K=2N-3 mean 0.5+-0.01", abs(x.mean() - 0.5) <= 0.01, f"mean={x.mean():.5f} M={M}")
    for i, (N, K) in enumerate([(16, 29), (8, 12), (16, 32), (16, 64)]):
        if i == 0:
            y = x
        else:
            s2, v2 = _scenario_N(N)
            y = _direct(make_mvdr(s2, v2), K, M, sub_seed(seed, 10 + i))
        target = _mvdr_ref(N, K, tamper_beta).mean
        se = y.std(ddof=1) / math.sqrt(y.size)
        c.add(f"N={N},K={K} mean within 3 SE", abs(y.mean() - target) <= 3 * se,
              f"mean={y.mean():.5f} target={target:.5f} se={se:.2e}")
    return c


def a2(level="full", seed=DEFAULT_SEED, tamper_beta=False):
    c = Criterion("A2", "distribution of the fully adaptive loss")
    M = QUICK_TRIALS if level == "quick" else 10_000
    N, K = 8, 16
    sigma, v = _scenario_N(N)
    x = _direct(make_mvdr(sigma, v), K, M, sub_seed(seed, 2))
    bp = _mvdr_ref(N, K, tamper_beta)
    ks = ks_distance(x, lambda t: beta_cdf(t, bp))
    c.add("KS vs Beta law", ks.passed, f"D={ks.statistic:.4f} thr={ks.threshold_1pct:.4f}")
    return c


def a3(level="full", seed=DEFAULT_SEED, tamper_beta=False):
    c = Criterion("A3", "MPDR per-realisation identity and law")
    rng = Rng(sub_seed(seed, 3), 0)
    worst = 0.0
    for _ in range(1000):
        N = int(rng.gen.integers(3, 17))
        A = rng.cnormal((N, 2 * N))
        sigma = A @ A.conj().T / (2 * N) + 0.1 * np.eye(N)
        v = rng.cnormal(N)
        P = float(10.0 ** rng.gen.uniform(-2, 2))
        ct = sigma + P * np.outer(v, v.conj())
        S = sample_wishart(rng, N, N + int(rng.gen.integers(0, 2 * N)), ct)
        w = fl.w_smi(S, v)
        lhs = snr_loss(w, v, sigma)
        rt = snr_loss(w, v, ct)
        rhs = rt / (1.0 + (1.0 - rt) * snr_opt(sigma, v, P))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    c.add("identity on 1000 draws", worst < 1e-9, f"max rel err={worst:.2e}")
    M = QUICK_TRIALS if level == "quick" else 10_000
    sigma, v = _scenario_N(16)
    sc = make_mpdr_snr(sigma, v, 100.0)
    law = sc.loss_law(32)
    x = _direct(sc, 32, M, sub_seed(seed, 31))
    ks = ks_distance(x, lambda t: cdf_rho(t, law))
    c.add("KS vs MPDR law (SNR_opt=100)", ks.passed, f"D={ks.statistic:.4f} thr={ks.threshold_1pct:.4f}")
    return c


def a4(level="full", seed=DEFAULT_SEED, tamper_beta=False):
    c = Criterion("A4", "general, GER and undernulled representations")
    M = QUICK_TRIALS if level == "quick" else 10_000
    N, K = 16, 32
    sigma, v = _scenario_N(N)
    scenarios = {
        "wishart_mismatch": make_wishart_mismatch(sigma, v, Rng(sub_seed(seed, 40), 0)),
        "ger": make_ger(sigma, v, Rng(sub_seed(seed, 41), 0)),
        "surprise": make_surprise(sigma, v, 40.0, target_qcq=10.0),
    }
    thr = 1.92 * math.sqrt(2.0 / M)
    for i, (name, sc) in enumerate(scenarios.items()):
        x = _direct(sc, K, M, sub_seed(seed, 42 + i))
        r = sample_rho(Rng(sub_seed(seed, 52 + i), 0), sc.loss_law(K), M)
        ks = ks_two_sample(x, r)
        c.add(f"{name} direct~representation", ks.statistic < thr,
              f"D={ks.statistic:.4f} thr={thr:.4f}")
    return c


def a5(level="full", seed=DEFAULT_SEED, tamper_beta=False):
    c = Criterion("A5", "Student-distributed training")
    M = QUICK_TRIALS if level == "quick" else 10_000
    N, K, nu = 16, 32, 32
    sigma, v = _scenario_N(N)
    law = LossLaw.student(N, K, nu)
    x = _direct(make_student(sigma, v, nu), K, M, sub_seed(seed, 5))
    ks = ks_distance(x, lambda t: cdf_rho(t, law))
    c.add("KS vs Student law", ks.passed, f"D={ks.statistic:.4f} thr={ks.threshold_1pct:.4f}")
    total, err = integrate.quad(lambda t: pdf_rho(t, law), 0.0, 1.0, limit=200, epsabs=1e-12)
    c.add("pdf integrates to 1", abs(total - 1.0) < 1e-6, f"integral={total:.12f}")
    grid = np.linspace(0.0, 1.0, 1001)
    diff = np.max(np.abs(pdf_rho(grid, LossLaw.student(N, K, 1e6)) - pdf_rho(grid, LossLaw.mvdr(N, K))))
    c.add("nu=1e6 matches MVDR pdf within 1e-4", diff < 1e-4, f"max |diff|={diff:.3e}")
    return c


def a6(level="full", seed=DEFAULT_SEED, tamper_beta=False):
    c = Criterion("A6", "partially adaptive filters")
    M = QUICK_TRIALS if level == "quick" else 10_000
    N, K, R = 16, 16, 4
    sigma, v = _scenario_N(N)
    psi = Rng(sub_seed(seed, 60), 0).cnormal((N - 1, R))
    T = fl.Transform.gsc(v, psi)
    a = coef_a(T.matrix, sigma, v)
    filt = FilterSpec(kind="pa", R=R, psi=psi)
    x = _direct(make_mvdr(sigma, v), K, M, sub_seed(seed, 61), filt)
    c.add("losses <= a", bool(np.all(x <= a + 1e-9)), f"max={x.max():.6f} a={a:.6f}")
    law = LossLaw.pa_mvdr(N, K, R, min(a, 1.0))
    ks = ks_distance(x / a, lambda t: beta_cdf(np.clip(t, 0, 1), law.beta_params))
    c.add("losses/a KS vs Beta", ks.passed, f"D={ks.statistic:.4f} thr={ks.threshold_1pct:.4f}")
    sc = make_mpdr_snr(sigma, v, 10.0)
    lawm = LossLaw.pa_mpdr(N, K, R, min(a, 1.0), sc.snr_opt / sc.gamma)
    y = _direct(sc, K, M, sub_seed(seed, 62), filt)
    ks = ks_distance(y, lambda t: cdf_rho(t, lawm))
    c.add("PA-MPDR KS (SNR_opt=10)", ks.passed, f"D={ks.statistic:.4f} thr={ks.threshold_1pct:.4f}")
    return c


def dl_loading(sigma, R, gamma=1.0):
    """Loading ``K mu`` halfway (geometrically) between ``gamma`` and ``lambda_R``."""
    lam = hm.eigh(sigma).values
    return math.sqrt(gamma * (lam[R - 1] - gamma))


def a7(level="full", seed=DEFAULT_SEED, tamper_beta=False):
    c = Criterion("A7", "approximate reduced-rank laws (property level)")
    M = QUICK_TRIALS if level == "quick" else 10_000
    N, R = 16, 3
    sigma, v = _scenario_N(N)
    sc = make_mvdr(sigma, v)
    for i, K in enumerate((6, 16)):
        x = _direct(sc, K, M, sub_seed(seed, 70 + i), FilterSpec(kind="ec", R=R))
        target = BetaParams(K - R + 1, R).mean
        c.add(f"eigencanceler K={K} mean", abs(x.mean() - target) < 0.05,
              f"mean={x.mean():.4f} target={target:.4f}")
    K = 6
    load = dl_loading(sigma, R)
    x = _direct(sc, K, M, sub_seed(seed, 72), FilterSpec(kind="dl", mu=load / K))
    target = BetaParams(K - R + 1, R).mean
    c.add("diagonal loading K=6 mean", abs(x.mean() - target) < 0.05,
          f"mean={x.mean():.4f} target={target:.4f} K*mu={load:.2f}")
    ec = _direct(sc, K, M, sub_seed(seed, 73), FilterSpec(kind="ec", R=R))
    pc = _direct(sc, K, M, sub_seed(seed, 73), FilterSpec(kind="pchol", R=R))
    ks = ks_two_sample(ec, pc)
    c.add("pchol ~ eigencanceler (KS < 0.05)", ks.statistic < 0.05, f"D={ks.statistic:.4f}")
    return c


def _weights(scenario, K, M, seed):
    sampler = TrainingSampler(scenario)
    X = np.stack([sampler.draw(Rng(seed, i), K) for i in range(M)])
    return kernels.loaded_smi_batch(X, scenario.v, scenario.sigma, 0.0, True)[1]


def _moment_check(A, B):
    """Largest entrywise |mean difference| in units of its standard error."""
    da = A.mean(0) - B.mean(0)
    se = np.sqrt((A.var(0) + B.var(0)) / A.shape[0])
    return float(np.max(np.abs(da) / se))


def a8(level="full", seed=DEFAULT_SEED, tamper_beta=False):
    c = Criterion("A8", "weight-vector identities")
    M = QUICK_TRIALS if level == "quick" else 100_000
    N, K = 16, 32
    sigma, v = _scenario_N(N)
    mv = make_mvdr(sigma, v)
    mp_ = make_mpdr_snr(sigma, v, 10.0)
    s = sub_seed(seed, 8)
    # the same stream ids give common random numbers for the two scenarios
    Wv = _weights(mv, K, M, s)
    Wp = _weights(mp_, K, M, s)
    gap = np.mean(np.sum(np.abs(Wp) ** 2, 1) - np.sum(np.abs(Wv) ** 2, 1))
    target = fl.wnorm_gap(sigma, v, mp_.soi_power, K)
    c.add("norm gap within 2%", abs(gap / target - 1) < 0.02, f"MC={gap:.5e} formula={target:.5e}")
    Rv = fl.weight_rep(Rng(sub_seed(seed, 81), 0), mv, K, "mvdr", size=M)
    Rp = fl.weight_rep(Rng(sub_seed(seed, 82), 0), mp_, K, "mpdr", size=M)
    for name, A, B in (("mvdr", Wv, Rv), ("mpdr", Wp, Rp)):
        z1 = _moment_check(A, B)
        z2 = _moment_check(np.abs(A) ** 2, np.abs(B) ** 2)
        c.add(f"{name} first moments 3 sigma", z1 < 3.0, f"max z={z1:.2f}")
        c.add(f"{name} second moments 3 sigma", z2 < 3.0, f"max z={z2:.2f}")
    return c


def a9(level="full", seed=DEFAULT_SEED, tamper_beta=False):
    c = Criterion("A9", "numerical building blocks")
    rng = Rng(sub_seed(seed, 9), 0)
    worst = 0.0
    for N in (2, 5, 16, 40):
        A = rng.cnormal((N, N))
        Hm = A + A.conj().T
        worst = max(worst, np.max(np.abs(hm.eigh(Hm).reconstruct() - Hm)) / np.max(np.abs(Hm)))
    c.add("eigh reconstruction 1e-9", worst < 1e-9, f"max rel err={worst:.1e}")
    A = rng.cnormal((12, 4))
    P = hm.projector(A)
    idem = float(np.max(np.abs(P @ P - P)))
    c.add("projector idempotent 1e-10", idem < 1e-10, f"err={idem:.1e}")
    B = rng.cnormal((10, 20))
    S = B @ B.conj().T
    full = np.linalg.cholesky(S)
    nest = max(float(np.max(np.abs(hm.partial_cholesky(S, r) - full[:, :r]))) for r in range(1, 11))
    c.add("partial Cholesky nesting", nest < 1e-10, f"max err={nest:.1e}")
    z = np.array([0.0, 0.2, 0.5, 0.8, 0.95])
    e1 = np.max(np.abs(gauss_2f1(1, 1, 2, z[1:]) + np.log1p(-z[1:]) / z[1:]))
    e2 = np.max(np.abs(gauss_2f1(2.5, 1.5, 1.5, z) - (1 - z) ** -2.5))
    # Gauss summation: 2F1(1, 1; 8; 1) = G(8) G(6) / G(7)^2 = 7/6
    e3 = abs(gauss_2f1(1, 1, 8, 1 - 1e-13) - 7.0 / 6.0)
    ok = e1 < 1e-10 and e2 < 1e-10 and e3 < 1e-8
    c.add("2F1 identities", ok, f"log={e1:.1e} power={e2:.1e} gauss={e3:.1e}")
    bp = BetaParams(17, 15)
    tot, _ = integrate.quad(lambda t: beta_pdf(t, bp), 0, 1, epsabs=1e-13)
    c.add("Beta normalisation 1e-8", abs(tot - 1) < 1e-8, f"integral={tot:.12f}")
    t0 = time.perf_counter()
    quick = run_all("quick", seed)
    dt = time.perf_counter() - t0
    c.add("quick level under 2 minutes", dt < 120.0,
          f"{dt:.1f}s, quick criteria passing: {sum(q.passed for q in quick)}/{len(quick)}")
    return c


CRITERIA = {"A1": a1, "A2": a2, "A3": a3, "A4": a4, "A5": a5, "A6": a6, "A7": a7, "A8": a8, "A9": a9}
QUICK = ("A1", "A2", "A3", "A4", "A5")


def run_all(level="quick", seed=DEFAULT_SEED, tamper_beta=False, only=None, report=None):
    """Run the criteria of ``level`` and return them in order."""
    ids = only or (QUICK if level == "quick" else tuple(CRITERIA))
    out = []
    for cid in ids:
        t0 = time.perf_counter()
        crit = CRITERIA[cid](level, seed, tamper_beta)
        crit.seconds = time.perf_counter() - t0
        out.append(crit)
        if report is not None:
            report(crit)
    return out
