import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from snrloss.distributions import Rng, sample_wishart
from snrloss.errors import BadParam, NoClosedForm
from snrloss.filters import Transform, w_optimal, w_partial, w_smi
from snrloss.laws import (KINDS, GeneralRepParams, LossLaw, cdf_is_empirical, cdf_rho, coef_a,
                          derive_general_params, law_mean, mpdr_map, pdf_rho, sample_rho, snr,
                          snr_loss, snr_opt)
from snrloss.scenarios import make_ger, make_student

from conftest import random_pd

CLOSED = [
    LossLaw.mvdr(16, 32),
    LossLaw.mvdr(2, 5),
    LossLaw.mpdr(16, 32, 10.0),
    LossLaw.mpdr(8, 16, 100.0),
    LossLaw.student(16, 32, 32.0),
    LossLaw.student(8, 16, 9.0),
    LossLaw.pa_mvdr(16, 32, 4, 0.8),
    LossLaw.pa_mpdr(16, 32, 4, 0.7, 10.0),
    LossLaw("ec_approx", 16, 8, R=3),
    LossLaw("dl_approx", 16, 12, R=3),
    LossLaw("pchol_approx", 16, 8, R=3, a_prime=0.9),
]


def test_snr_examples():
    rng = Rng(1)
    N = 6
    sigma = random_pd(rng, N)
    v = rng.cnormal(N)
    assert abs(snr_loss(w_optimal(sigma, v), v, sigma) - 1) < 1e-12
    w = rng.cnormal(N)
    cos2 = abs(np.vdot(w, v)) ** 2 / (np.vdot(v, v).real * np.vdot(w, w).real)
    assert abs(snr_loss(w, v, np.eye(N)) - cos2) < 1e-12
    # brute evaluation with explicit inverse and sums
    si = np.linalg.inv(sigma)
    num = abs(sum(np.conj(w[i]) * v[i] for i in range(N))) ** 2
    den = (sum(np.conj(v[i]) * si[i, j] * v[j] for i in range(N) for j in range(N)).real
           * sum(np.conj(w[i]) * sigma[i, j] * w[j] for i in range(N) for j in range(N)).real)
    assert abs(snr_loss(w, v, sigma) - num / den) < 1e-12
    assert abs(snr(w, v, sigma, 2.0) / snr_opt(sigma, v, 2.0) - snr_loss(w, v, sigma)) < 1e-12


def test_mpdr_map():
    assert mpdr_map(1.0, 37.0) == 1.0
    assert mpdr_map(0.3, 0.0) == pytest.approx(0.3)
    assert mpdr_map(0.5, 10.0) == pytest.approx(0.5 / 6)


def test_general_params(jammers):
    sigma, v, _ = jammers
    p = derive_general_params(sigma, sigma, v)
    assert abs(p.ratio - 1) < 1e-9 and np.allclose(p.omega_eigs, 1) and np.allclose(p.deltas, 0, atol=1e-12)
    g = 3.0
    p = derive_general_params(sigma, g * sigma, v)
    assert np.allclose(p.omega_eigs, 1 / g) and np.allclose(p.deltas, 0, atol=1e-12)
    assert abs(p.ratio - g) < 1e-9
    sc = make_ger(sigma, v, Rng(2), strength=3.0)
    assert max(derive_general_params(sc.sigma, sc.ct, v).deltas) < 1e-12


def test_general_law_is_scale_invariant(jammers):
    sigma, v, _ = jammers
    ct = random_pd(Rng(3), 16) + sigma
    a = sample_rho(Rng(4), LossLaw.general(16, 24, derive_general_params(sigma, ct, v)), 20_000)
    b = sample_rho(Rng(5), LossLaw.general(16, 24, derive_general_params(sigma, 5 * ct, v)), 20_000)
    assert stats.ks_2samp(a, b).statistic < 1.63 * math.sqrt(2 / 20_000)


def test_mvdr_sampler_mean_half():
    x = sample_rho(Rng(6), LossLaw.mvdr(16, 29), 1_000_000)
    assert abs(x.mean() - 0.5) < 0.005


def test_degenerate_laws_reduce_to_mvdr():
    N, K, M = 8, 16, 100_000
    base = sample_rho(Rng(7), LossLaw.mvdr(N, K), M)
    gen = LossLaw.general(N, K, GeneralRepParams(1.0, np.ones(N - 1), np.zeros(N - 1)))
    und = LossLaw.undernulled(N, K, 0.0)
    for law in (gen, und):
        x = sample_rho(Rng(8), law, M)
        assert stats.ks_2samp(base, x).statistic < 0.01


@pytest.mark.parametrize("law", CLOSED, ids=lambda l: f"{l.kind}-{l.N}-{l.K}")
def test_pdf_normalised_and_coherent(law):
    val, _ = integrate.quad(lambda t: pdf_rho(t, law), 0, law.scale, limit=400, epsabs=1e-12,
                            points=[law.scale * 0.5])
    assert abs(val - 1) < 1e-8
    grid = np.linspace(1e-3, law.scale - 1e-3, 1000)
    h = 1e-6
    deriv = (cdf_rho(grid + h, law) - cdf_rho(grid - h, law)) / (2 * h)
    assert np.max(np.abs(deriv - pdf_rho(grid, law))) < 1e-4
    assert cdf_rho(0.0, law) == pytest.approx(0, abs=1e-12)
    assert cdf_rho(law.scale, law) == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize("law", CLOSED, ids=lambda l: f"{l.kind}-{l.N}-{l.K}")
def test_sampler_matches_cdf(law):
    x = sample_rho(Rng(9), law, 20_000)
    assert np.all((x >= 0) & (x <= law.scale + 1e-12))
    assert stats.kstest(x, lambda t: cdf_rho(t, law)).statistic < 1.63 / math.sqrt(x.size)


def test_mvdr_pdf_matches_scipy():
    N, K = 16, 32
    x = np.linspace(0.01, 0.99, 50)
    ref = stats.beta(K - N + 2, N - 1).pdf(x)
    assert np.allclose(pdf_rho(x, LossLaw.mvdr(N, K)), ref, rtol=1e-12)


def test_mpdr_factored_form():
    N, K = 16, 32
    x = np.linspace(0.01, 0.99, 99)
    for s in (0.0, 1.0, 10.0, 100.0):
        f = pdf_rho(x, LossLaw.mvdr(N, K)) * (1 + s) ** (K - N + 2) / (1 + x * s) ** (K + 1)
        assert np.allclose(pdf_rho(x, LossLaw.mpdr(N, K, s)), f, rtol=1e-10, atol=1e-300)


def _student_mp(rho, N, K, nu):
    mpmath.mp.dps = 40
    rho, nu = mpmath.mpf(rho), mpmath.mpf(nu)
    core = rho ** (K - N + 1) * (1 - rho) ** (N - 2) / mpmath.beta(K - N + 2, N - 1)
    pref = mpmath.beta(K - N + 1, nu + N - 1) / mpmath.beta(K - N + 1, nu)
    return float(core * pref * mpmath.hyp2f1(K + 1, K - N + 1, nu + K, 1 - rho, maxterms=10**6))


@pytest.mark.parametrize("N,K,nu", [(16, 32, 32.0), (8, 16, 9.0), (16, 32, 1e6), (4, 40, 6.0)])
def test_student_pdf_vs_mpmath(N, K, nu):
    law = LossLaw.student(N, K, nu)
    for r in (0.05, 0.3, 0.5, 0.8, 0.97):
        ref = _student_mp(r, N, K, nu)
        assert abs(pdf_rho(r, law) - ref) <= 1e-9 * max(ref, 1e-12)


def test_student_large_nu_approaches_mvdr():
    N, K = 16, 32
    grid = np.linspace(0.001, 0.999, 999)
    mv = pdf_rho(grid, LossLaw.mvdr(N, K))
    gaps = [np.max(np.abs(pdf_rho(grid, LossLaw.student(N, K, nu)) - mv)) for nu in (1e4, 1e5, 1e6, 1e7)]
    # first-order convergence in 1/nu
    assert all(b < a / 5 for a, b in zip(gaps[:-1], gaps[1:]))
    assert gaps[-1] < 1e-4


def test_student_dominated_by_mvdr():
    N, K = 16, 32
    a = sample_rho(Rng(10), LossLaw.student(N, K, 2.0 * N), 50_000)
    b = sample_rho(Rng(11), LossLaw.mvdr(N, K), 50_000)
    assert a.mean() < b.mean()


def test_student_direct_simulation(jammers):
    sigma, v, _ = jammers
    N, K, nu = 16, 32, 32.0
    sc = make_student(sigma, v, nu)
    from snrloss.scenarios import draw_training_set
    x = []
    for i in range(3000):
        X = draw_training_set(Rng(12, i), sc, K)
        x.append(snr_loss(w_smi(X @ X.conj().T, v), v, sigma))
    law = LossLaw.student(N, K, nu)
    assert stats.kstest(x, lambda t: cdf_rho(t, law)).statistic < 1.63 / math.sqrt(3000)


def test_coef_a(jammers):
    sigma, v, G = jammers
    assert coef_a(np.eye(16), sigma, v) == pytest.approx(1.0, abs=1e-12)
    assert coef_a(np.column_stack([v, G]), sigma, v) == pytest.approx(1.0, abs=1e-9)
    # one spare dimension above the three jammers puts mass in both tails
    vals = [coef_a(Transform.random_gsc(Rng(13, i), v, 4).matrix, sigma, v) for i in range(100)]
    assert all(0 < a <= 1 + 1e-12 for a in vals)
    assert min(vals) < 0.5 and max(vals) > 0.9


def test_pa_mvdr_support_and_law(jammers):
    sigma, v, _ = jammers
    N, K, R = 16, 24, 4
    T = Transform.random_gsc(Rng(14), v, R)
    a = coef_a(T.matrix, sigma, v)
    rng = Rng(15)
    x = np.array([snr_loss(w_partial(T, sample_wishart(rng, N, K, sigma), v), v, sigma) for _ in range(4000)])
    assert np.all(x <= a + 1e-9)
    law = LossLaw.pa_mvdr(N, K, R, a)
    assert stats.kstest(x, lambda t: cdf_rho(t, law)).statistic < 1.63 / math.sqrt(x.size)


def test_representation_only_flags():
    law = LossLaw.undernulled(8, 16, 1.0)
    assert cdf_is_empirical(law) and not law.has_closed_form
    with pytest.raises(NoClosedForm):
        pdf_rho(0.5, law)
    with pytest.raises(NoClosedForm):
        cdf_rho(0.5, law, allow_empirical=False)
    c = cdf_rho(np.array([0.0, 1.0]), law)
    assert c[0] == 0 and c[1] == 1


def test_undernulled_lowers_loss():
    a = sample_rho(Rng(16), LossLaw.undernulled(8, 16, 5.0), 20_000)
    b = sample_rho(Rng(17), LossLaw.mvdr(8, 16), 20_000)
    assert a.mean() < b.mean()


def test_law_means():
    assert law_mean(LossLaw.mvdr(16, 29)) == pytest.approx(0.5)
    assert law_mean(LossLaw.pa_mvdr(16, 29, 4, 0.5)) == pytest.approx(0.5 * 26 / 30)
    with pytest.raises(NoClosedForm):
        law_mean(LossLaw.undernulled(8, 16, 1.0))


@pytest.mark.parametrize("law", CLOSED + [LossLaw.ger(4, 8, 0.5, (1.0, 2.0, 3.0)),
                                          LossLaw.undernulled(4, 8, 2.0)],
                         ids=lambda l: l.kind)
def test_json_round_trip(law):
    back = LossLaw.from_json(law.to_json())
    assert back == law
    assert law.to_dict()["approximate"] == (law.kind in ("ec_approx", "dl_approx", "pchol_approx"))


def test_law_validation():
    with pytest.raises(BadParam):
        LossLaw("nope", 8, 16)
    with pytest.raises(BadParam):
        LossLaw.mvdr(8, 7)
    with pytest.raises(BadParam):
        LossLaw.pa_mvdr(8, 16, 3, 1.5)
    with pytest.raises(BadParam):
        pdf_rho(1.5, LossLaw.mvdr(8, 16))
    assert set(KINDS) >= {l.kind for l in CLOSED}


@given(st.floats(0, 1), st.floats(0, 1e4))
@settings(max_examples=100, deadline=None)
def test_mpdr_map_monotone(r, s):
    y = mpdr_map(r, s)
    assert 0 <= y <= r + 1e-15
