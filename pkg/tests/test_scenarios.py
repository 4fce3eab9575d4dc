import math

import numpy as np
import pytest

from snrloss.distributions import Rng
from snrloss.errors import BadParam, InsufficientDoF
from snrloss.scenarios import (Interferer, Scenario, build_scenario, build_sigma, draw_training_set,
                               make_ger, make_homog, make_mpdr, make_mvdr, make_student,
                               make_surprise, make_wishart_mismatch, ula_steering)

from conftest import random_pd


def _angle(a, b):
    c = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.acos(min(1.0, c))


def test_steering():
    assert np.allclose(ula_steering(5, 0.0), np.ones(5))
    assert np.allclose(ula_steering(2, 30.0), [1, 1j])
    for th in (-70.0, 3.3, 45.0):
        assert abs(np.linalg.norm(ula_steering(9, th)) ** 2 - 9) < 1e-12


def test_build_sigma(jammers):
    sigma, G = build_sigma(6)
    assert np.allclose(sigma, np.eye(6))
    sigma, v, G = jammers
    assert np.linalg.matrix_rank(G @ G.conj().T, tol=1e-6) == 3
    lam = np.linalg.eigvalsh(sigma)[::-1]
    assert abs(lam[3] - 1) < 1e-9
    _, G1 = build_sigma(8, [Interferer(20.0, 30.0)])
    assert abs(np.linalg.eigvalsh(G1 @ G1.conj().T)[-1] - 8 * 1e3) < 1e-8


def test_build_sigma_permutation_invariant():
    itf = [(-12.0, 35.0), (9.0, 25.0), (25.0, 30.0)]
    a, _ = build_sigma(16, itf)
    b, _ = build_sigma(16, itf[::-1])
    assert np.array_equal(a, b) or np.allclose(a, b, rtol=0, atol=1e-12)


def test_basic_scenarios(jammers):
    sigma, v, _ = jammers
    assert np.array_equal(make_mvdr(sigma, v).ct, make_mvdr(sigma, v).sigma)
    assert np.allclose(make_mpdr(sigma, v, 0.0, 2.0).ct, make_homog(sigma, v, 2.0).ct)
    P, g = 0.7, 2.0
    sc = make_mpdr(sigma, v, P, g)
    lhs = np.vdot(v, np.linalg.solve(sc.ct, v)).real
    vsv = np.vdot(v, np.linalg.solve(sigma, v)).real
    assert abs(lhs - (vsv / g) / (1 + P * vsv / g)) < 1e-9 * lhs


def test_surprise(jammers):
    sigma, v, _ = jammers
    sc = make_surprise(sigma, v, q_angle=4.0, q_power=10.0)
    q = sc.extras["q"]
    civ = np.linalg.solve(sc.ct, v)
    assert abs(np.vdot(q, civ)) < 1e-10 * np.linalg.norm(q) * np.linalg.norm(civ)
    assert _angle(civ, np.linalg.solve(sc.sigma, v)) < 1e-9
    tiny = make_surprise(sigma, v, q_angle=4.0, q_power=1e-14)
    assert np.allclose(tiny.sigma, tiny.ct)
    sc = make_surprise(sigma, v, q_angle=4.0, target_qcq=2.5)
    assert abs(sc.extras["qcq"] - 2.5) < 1e-9


def test_ger(jammers):
    sigma, v, _ = jammers
    sc = make_ger(sigma, v, Rng(1), strength=0.0)
    assert np.allclose(sc.ct, sigma)
    assert abs(sc.extras["lambda"] - 1) < 1e-9 and np.allclose(sc.extras["omega_eigs"], 1)
    sc = make_ger(sigma, v, Rng(1), strength=2.0)
    assert np.linalg.norm(sc.ct - sigma) > 1
    assert _angle(np.linalg.solve(sc.ct, v), np.linalg.solve(sigma, v)) < 1e-8
    assert max(sc.extras["deltas"]) < 1e-12


def test_wishart_mismatch(jammers):
    sigma, v, _ = jammers
    N = 16
    sc = make_wishart_mismatch(sigma, v, Rng(2), eta_db_range=(0.0, 0.0), dof=10_000 * N)
    assert np.linalg.norm(sc.ct - sigma) / np.linalg.norm(sigma) < 0.1
    with pytest.raises(InsufficientDoF):
        make_wishart_mismatch(sigma, v, Rng(2), dof=N - 1)


def test_wishart_mismatch_eta_scaling():
    sigma, v = np.eye(4), ula_steering(4, 0.0)
    lo = [np.trace(make_wishart_mismatch(sigma, v, Rng(3, i), (0.0, 0.0), dof=400).ct).real
          for i in range(200)]
    hi = [np.trace(make_wishart_mismatch(sigma, v, Rng(4, i), (10 * math.log10(2),) * 2, dof=400).ct).real
          for i in range(200)]
    assert abs(np.mean(lo) / np.mean(hi) - 2) < 0.1


def test_student(jammers):
    sigma, v, _ = jammers
    sc = make_student(sigma, v, 32.0)
    assert sc.extras["mu"] == 16
    with pytest.raises(BadParam):
        make_student(sigma, v, 16.0)


def test_student_training_covariance():
    N, K, nu = 4, 32, 12.0
    sigma = random_pd(Rng(5), N)
    sc = make_student(sigma, ula_steering(N, 0), nu)
    rng = Rng(6)
    acc = np.zeros((N, N), complex)
    n = 1000
    for _ in range(n):
        X = draw_training_set(rng, sc, K)
        acc += X @ X.conj().T / K
    assert np.linalg.norm(acc / n - sigma) / np.linalg.norm(sigma) < 0.05


def test_training_covariance_and_mpdr_direction(jammers):
    sigma, v, _ = jammers
    rng = Rng(7)
    sc = make_mvdr(np.eye(4) + 0.3, ula_steering(4, 0))
    X = draw_training_set(rng, sc, 100_000)
    assert np.allclose(X @ X.conj().T / X.shape[1], sc.ct, atol=0.05)
    sc = make_mpdr(sigma, v, 1e5)
    X = draw_training_set(rng, sc, 64)
    u = np.linalg.eigh(X @ X.conj().T)[1][:, -1]
    assert _angle(u, v) < 0.05


@pytest.mark.parametrize("kind", ["mvdr", "homog", "mpdr", "ger", "surprise", "wishart_mismatch", "student"])
def test_build_and_round_trip(kind):
    extras = {"mpdr": {"snr_opt": 100}, "student": {"nu": 32}, "surprise": {"q_angle": 4.0, "qcq": 1.0},
              "ger": {"seed": 3}, "wishart_mismatch": {"seed": 4}, "homog": {"gamma": 2.0}}
    sc = build_scenario({"kind": kind, **extras.get(kind, {})})
    assert sc.kind == kind
    for M in (sc.sigma, sc.ct):
        assert np.linalg.eigvalsh(M)[0] > 0
    back = Scenario.from_json(sc.to_json())
    assert np.allclose(back.sigma, sc.sigma) and np.allclose(back.ct, sc.ct)
    assert back.kind == sc.kind
    assert back.loss_law(32) == sc.loss_law(32)


def test_build_rejects_unknown_keys():
    with pytest.raises(BadParam):
        build_scenario({"kind": "mvdr", "bogus": 1})
