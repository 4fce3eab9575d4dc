"""Acceptance criteria A1-A9 at their stated sample sizes and tolerances.

Each criterion prints one PASS/FAIL line. Two sub-checks are known not to
hold and are reported as expected failures instead of being loosened:

* A5, ``nu=1e6 matches MVDR pdf within 1e-4``: the exact Student density
  differs from the MVDR density by a term of order ``K^2 / nu`` (about
  1.4e-4 at N=16, K=32), so the 1e-4 bound needs ``nu`` above about 1.4e6.
  ``tests/test_laws.py`` checks the first-order convergence instead.
* A8, ``mpdr second moments 3 sigma``: the maximum of 16 entrywise z scores
  exceeds 3 by chance in a few percent of runs with an exact sampler; the
  fixed seed lands in that tail. Both routes agree with the exact
  covariance individually.
"""

import pytest

from snrloss.acceptance import CRITERIA, DEFAULT_SEED, run_all

KNOWN_DEVIATIONS = {
    "A5": {"nu=1e6 matches MVDR pdf within 1e-4":
           "exact Student pdf differs from the MVDR pdf by O(K^2/nu) ~ 1.4e-4 at nu=1e6"},
    "A8": {"mpdr second moments 3 sigma":
           "max of 16 entrywise z scores; chance exceedance at the fixed seed"},
}


@pytest.fixture(scope="module")
def results(request):
    capman = request.config.pluginmanager.getplugin("capturemanager")
    out = {}

    def report(crit):
        with capman.global_and_fixture_disabled():
            print(f"\n{crit.line()}", flush=True)
        out[crit.cid] = crit

    run_all("full", DEFAULT_SEED, report=report)
    return out


@pytest.mark.parametrize("cid", list(CRITERIA))
def test_criterion(results, cid):
    crit = results[cid]
    allowed = KNOWN_DEVIATIONS.get(cid, {})
    failed = [chk for chk in crit.checks if not chk.passed]
    unexpected = [f"{chk.name}: {chk.detail}" for chk in failed if chk.name not in allowed]
    assert not unexpected, "; ".join(unexpected)
    if failed:
        pytest.xfail("; ".join(f"{chk.name} ({chk.detail}): {allowed[chk.name]}" for chk in failed))


def test_tampered_beta_fails_a1():
    crit = run_all("quick", DEFAULT_SEED, tamper_beta=True, only=("A1",))[0]
    print(f"\n[tampered] {crit.line()}")
    assert not crit.passed
