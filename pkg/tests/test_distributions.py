import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from snrloss.distributions import (BetaParams, Rng, StudentParams, beta_cdf, beta_pdf, beta_sample,
                                   gauss_2f1, partitioned_wishart_blocks, sample_cchisq,
                                   sample_cgauss_matrix, sample_matrix_f, sample_matrix_t,
                                   sample_wishart)
from snrloss.errors import BadParam, InsufficientDoF, NotPD


def test_rng_streams_replay_and_differ():
    a = Rng(5, 3).cnormal(4)
    assert np.array_equal(a, Rng(5, 3).cnormal(4))
    assert not np.allclose(a, Rng(5, 4).cnormal(4))
    assert not np.allclose(a, Rng(6, 3).cnormal(4))


def test_cgauss_unit_power():
    z = sample_cgauss_matrix(Rng(1), 1, 100_000)
    assert abs(np.mean(np.abs(z) ** 2) - 1) < 0.02


def test_cgauss_mean_and_column_covariance():
    rng = Rng(2)
    M = np.array([[1 + 1j], [-2.0]])
    draws = np.stack([sample_cgauss_matrix(rng, 2, 1, mean=M) for _ in range(4000)])
    se = 1 / math.sqrt(2 * 4000)
    assert np.all(np.abs(draws.mean(0).real - M.real) < 4 * se)
    assert np.all(np.abs(draws.mean(0).imag - M.imag) < 4 * se)
    row = np.array([[2.0, 0.5j], [-0.5j, 1.0]])
    K = 20_000
    X = sample_cgauss_matrix(rng, 2, K, row_cov=row)
    assert np.allclose(X @ X.conj().T / K, row, atol=5 * math.sqrt(2 * 2 / K))


def test_cgauss_rejects_non_pd():
    with pytest.raises(NotPD):
        sample_cgauss_matrix(Rng(0), 2, 3, row_cov=np.zeros((2, 2)))


def test_wishart_scalar_and_mean():
    s = np.array([sample_wishart(Rng(3, i), 1, 5)[0, 0].real for i in range(20_000)])
    assert abs(s.mean() - 5) < 0.1
    sigma = np.array([[2.0, 0.3 + 0.4j], [0.3 - 0.4j, 1.0]])
    rng = Rng(4)
    S = np.stack([sample_wishart(rng, 2, 6, sigma) for _ in range(10_000)])
    se = S.std(0) / math.sqrt(len(S))
    assert np.all(np.abs(S.mean(0) - 6 * sigma) < 4 * np.maximum(se, 1e-12))


def test_wishart_methods_agree():
    rng = Rng(5)
    a = np.array([sample_wishart(rng, 3, 5, method="bartlett")[1, 1].real for _ in range(4000)])
    b = np.array([sample_wishart(rng, 3, 5, method="direct")[1, 1].real for _ in range(4000)])
    assert stats.ks_2samp(a, b).pvalue > 0.001


def test_wishart_additivity():
    rng = Rng(6)
    n = 5000
    a = np.array([(sample_wishart(rng, 2, 3) + sample_wishart(rng, 2, 4))[0, 1] for _ in range(n)])
    b = np.array([sample_wishart(rng, 2, 7)[0, 1] for _ in range(n)])
    for f in (np.real, lambda z: np.abs(z) ** 2):
        x, y = f(a), f(b)
        se = math.sqrt(x.var() / n + y.var() / n)
        assert abs(x.mean() - y.mean()) < 3 * se


def test_wishart_insufficient_dof():
    with pytest.raises(InsufficientDoF):
        sample_wishart(Rng(0), 4, 3)


def test_cchisq_moments():
    assert abs(sample_cchisq(Rng(7), 3, 0.0, 100_000).mean() - 3) < 0.05
    assert abs(sample_cchisq(Rng(8), 2, 4.0, 100_000).mean() - 6) < 0.1
    # half of a real chi-square with twice the degrees of freedom
    x = sample_cchisq(Rng(9), 3, 0.0, 10_000)
    assert stats.kstest(2 * x, stats.chi2(6).cdf).statistic < 0.02
    with pytest.raises(BadParam):
        sample_cchisq(Rng(0), 0)


def test_cchisq_noncentral_law():
    x = sample_cchisq(Rng(10), 2, 4.0, 20_000)
    # 2 x ~ noncentral chi2 with 4 dof and noncentrality 8
    assert stats.kstest(2 * x, stats.ncx2(4, 8).cdf).statistic < 0.015


def test_matrix_t_vector_covariance():
    N, nu = 2, 8.0
    sigma = np.array([[1.0, 0.4j], [-0.4j, 1.5]])
    p = StudentParams(nu=nu, mean=np.zeros((N, 1)), row_cov=sigma, col_cov=np.eye(1))
    rng = Rng(11)
    X = np.hstack([sample_matrix_t(rng, p, 1) for _ in range(40_000)])
    C = X @ X.conj().T / X.shape[1]
    target = sigma / (nu - 1)
    assert np.linalg.norm(C - target) / np.linalg.norm(target) < 0.05


def test_matrix_t_gaussian_limit():
    nu = 1e5
    p = StudentParams(nu=nu, mean=np.zeros((1, 1)), row_cov=np.eye(1) * nu, col_cov=np.eye(1))
    rng = Rng(12)
    x = np.array([sample_matrix_t(rng, p, 1)[0, 0] for _ in range(10_000)])
    assert stats.kstest(x.real * math.sqrt(2), "norm").statistic < 0.02
    assert abs(np.mean(np.abs(x) ** 2) - 1) < 0.05


def test_matrix_t_non_pd():
    p = StudentParams(nu=4.0, mean=np.zeros((2, 1)), row_cov=np.diag([1.0, -1.0]), col_cov=np.eye(1))
    with pytest.raises(NotPD):
        sample_matrix_t(Rng(0), p, 1)


def test_matrix_f_scalar():
    rng = Rng(13)
    F = np.array([sample_matrix_f(rng, 1, 8, 16)[0, 0].real for _ in range(20_000)])
    assert abs(F.mean() / (8 / 15) - 1) < 0.02
    B = 1 / (1 + F)
    assert stats.kstest(B, lambda x: beta_cdf(x, BetaParams(16, 8))).statistic < 0.02
    with pytest.raises(InsufficientDoF):
        sample_matrix_f(rng, 3, 2, 5)


def test_partitioned_blocks_examples():
    b = partitioned_wishart_blocks(np.eye(3), 1)
    assert np.allclose(b.s12, np.eye(1)) and np.allclose(b.t21, 0)
    b = partitioned_wishart_blocks(np.array([[2.0, 1.0], [1.0, 2.0]]), 1)
    assert np.allclose(b.s12, [[1.5]]) and np.allclose(b.t21, [[0.5]])
    A = np.zeros((4, 4), complex)
    A[:2, :2] = [[2, 1j], [-1j, 3]]
    A[2:, 2:] = [[1, 0.2], [0.2, 1]]
    assert np.allclose(partitioned_wishart_blocks(A, 2).t21, 0)


def test_partitioned_schur_is_cchisq():
    N, K = 4, 9
    rng = Rng(14)
    s = np.array([partitioned_wishart_blocks(sample_wishart(rng, N, K), 1).s12[0, 0].real
                  for _ in range(10_000)])
    assert stats.kstest(s, stats.gamma(K - N + 1).cdf).statistic < 0.02


def test_2f1_examples():
    assert gauss_2f1(2.3, 1.1, 4.0, 0.0) == 1.0
    assert abs(gauss_2f1(1, 1, 2, 0.5) - 2 * math.log(2)) < 1e-12
    # raw series summed term by term
    term, total = 1.0, 1.0
    for n in range(1_000_000):
        term *= (3 + n) * (2 + n) / ((5 + n) * (n + 1)) * 0.3
        total += term
        if term < 1e-18 * total:
            break
    assert abs(gauss_2f1(3, 2, 5, 0.3) / total - 1) < 1e-12


@given(st.floats(0.5, 20), st.floats(0.5, 20), st.floats(0.5, 40), st.floats(0.0, 0.99))
@settings(max_examples=60, deadline=None)
def test_2f1_matches_scipy(a, b, c, z):
    ref = special.hyp2f1(a, b, c, z)
    got = gauss_2f1(a, b, c, z)
    if np.isfinite(ref) and abs(ref) < 1e12:
        assert abs(got - ref) <= 1e-9 * abs(ref)


def test_2f1_large_parameter_regime():
    # parameters of the Student density at very large nu
    for a, b, c, z in [(17, 1e6 + 1, 1e6 + 9, 0.7), (33, 40, 44, 0.95), (10, 3, 12, 0.999)]:
        ref = float(mpmath.hyp2f1(a, b, c, z))
        assert abs(gauss_2f1(a, b, c, z) / ref - 1) < 1e-10


def test_beta_uniform_and_mapping():
    p = BetaParams(1, 1)
    x = np.linspace(0, 1, 11)
    assert np.allclose(beta_pdf(x, p), 1) and np.allclose(beta_cdf(x, p), x)
    N, K = 16, 29
    q = BetaParams.from_literature(N - 1, K - N + 2)
    assert (q.alpha, q.beta) == (K - N + 2, N - 1)
    assert q.mean == pytest.approx(0.5)
    with pytest.raises(BadParam):
        BetaParams(0, 1)


def test_beta_sampler():
    p = BetaParams(3.5, 2.0)
    x = beta_sample(Rng(15), p, 100_000)
    assert abs(x.mean() - p.mean) < 3 * math.sqrt(p.var / x.size)
    u = beta_cdf(x[:10_000], p)
    assert stats.kstest(u, "uniform").statistic < 0.02


def test_beta_pdf_normalised():
    from scipy.integrate import quad
    for a, b in [(2, 15), (17, 15), (0.5, 3)]:
        val, _ = quad(lambda t: beta_pdf(t, BetaParams(a, b)), 0, 1, limit=200)
        assert abs(val - 1) < 1e-8
