"""Seeded Monte-Carlo runner with goodness-of-fit checks.

Trial ``i`` of an experiment always draws from ``Rng(seed, i)``, so the
losses do not depend on how trials are split into chunks or across worker
processes. Results from disjoint trial ranges merge into exactly the result
of a single run.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import filters as fl
from . import kernels
from .distributions import Rng
from .errors import ConfigError, EmptySamples, SnrLossError, TrialError
from .laws import LossLaw, cdf_is_empirical, cdf_rho, sample_rho, snr_loss_batch
from .scenarios import Scenario, TrainingSampler, build_scenario

FILTER_KINDS = ("smi", "dl", "ec", "pchol", "pa", "marzetta")
KS_CONST_1PCT = 1.63
MIN_TRIALS = 100
MAX_STORED = 1_000_000
# stream ids reserved for experiment-level draws, far above any trial index
PSI_STREAM = 1 << 63
REP_STREAM = (1 << 63) + 1


def _version():
    from . import __version__
    return __version__


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass
class FilterSpec:
    """Filter under test.

    ``mu`` is the loading level (``S + K mu I``) for ``dl``; ``R`` the rank
    for ``ec``, ``pchol``, ``pa`` and ``marzetta``; ``L`` the number of
    averaged cancellers for ``marzetta``. The ``pa`` transform is a gsc
    transform with ``psi`` given explicitly or drawn once per experiment.
    """

    kind: str = "smi"
    R: int | None = None
    mu: float = 0.0
    L: int = 1
    psi: np.ndarray | None = None

    def to_dict(self):
        d = {"kind": self.kind, "R": self.R, "mu": self.mu, "L": self.L}
        if self.psi is not None:
            p = np.asarray(self.psi)
            d["psi"] = np.stack([p.real, p.imag], axis=-1).tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        psi = d.pop("psi", None)
        if psi is not None:
            a = np.asarray(psi, dtype=float)
            psi = a[..., 0] + 1j * a[..., 1]
        unknown = set(d) - {"kind", "R", "mu", "L"}
        if unknown:
            raise ConfigError(f"unknown filter keys {sorted(unknown)}", field="filter")
        return cls(psi=psi, **d)


@dataclass
class ExperimentConfig:
    scenario: Scenario
    K: int
    trials: int
    seed: int
    filter: FilterSpec = field(default_factory=FilterSpec)
    bins: int = 100
    moments: bool = True
    ks_targets: list = field(default_factory=list)
    workers: int = 1
    chunk: int = 4096

    def __post_init__(self):
        self.validate()

    def validate(self):
        N = self.scenario.N
        f = self.filter
        if self.trials < MIN_TRIALS:
            raise ConfigError(f"trials must be at least {MIN_TRIALS}, got {self.trials}", field="trials")
        if self.K < 1:
            raise ConfigError("K must be at least 1", field="K")
        if f.kind not in FILTER_KINDS:
            raise ConfigError(f"unknown filter kind {f.kind!r}; expected one of {FILTER_KINDS}",
                              field="filter.kind")
        if f.kind == "smi" or (f.kind == "dl" and f.mu == 0):
            if self.K < N:
                raise ConfigError(f"SMI filter needs K >= N (got K={self.K}, N={N})", field="K")
        if f.kind == "dl" and f.mu < 0:
            raise ConfigError("loading level mu must be nonnegative", field="filter.mu")
        if f.kind in ("ec", "pchol", "pa", "marzetta"):
            if f.R is None or not 1 <= f.R < N:
                raise ConfigError(f"filter {f.kind} needs 1 <= R < N", field="filter.R")
            if f.kind in ("pa", "marzetta") and self.K < f.R + (1 if f.kind == "pa" else 0):
                raise ConfigError(f"filter {f.kind} needs more training samples than its rank",
                                  field="K")
            if f.kind == "pchol" and self.K < f.R:
                raise ConfigError("partial Cholesky canceller needs K >= R", field="K")
        if f.kind == "marzetta" and f.L < 1:
            raise ConfigError("L must be at least 1", field="filter.L")
        if self.bins < 1:
            raise ConfigError("bins must be positive", field="bins")
        if self.workers < 1:
            raise ConfigError("workers must be positive", field="workers")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be a 64-bit unsigned integer", field="seed")

    def to_dict(self):
        return {
            "scenario": self.scenario.to_dict(),
            "K": self.K,
            "trials": self.trials,
            "seed": self.seed,
            "filter": self.filter.to_dict(),
            "bins": self.bins,
            "moments": self.moments,
            "ks_targets": [t.to_dict() for t in self.ks_targets],
        }

    @classmethod
    def from_dict(cls, d, **extra):
        """Parse a config document; errors name the offending field."""
        d = dict(d)
        known = {"scenario", "K", "trials", "seed", "filter", "bins", "moments", "ks_targets",
                 "workers", "chunk"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", field=sorted(unknown)[0])
        for key in ("scenario", "K", "trials"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}", field=key)
        try:
            scenario = build_scenario(d["scenario"])
        except (SnrLossError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scenario: {exc}", field="scenario") from exc
        try:
            filt = FilterSpec.from_dict(d.get("filter", {}))
        except TypeError as exc:
            raise ConfigError(f"bad filter: {exc}", field="filter") from exc
        kwargs = dict(scenario=scenario, K=_int(d, "K"), trials=_int(d, "trials"),
                      seed=_int(d, "seed", 0), filter=filt, bins=_int(d, "bins", 100),
                      moments=bool(d.get("moments", True)),
                      workers=_int(d, "workers", 1), chunk=_int(d, "chunk", 4096))
        kwargs.update(extra)
        cfg = cls(**kwargs)
        # targets are resolved after validation so that K and N errors surface first
        for i, t in enumerate(d.get("ks_targets", [])):
            try:
                law = scenario.loss_law(cfg.K) if t == "auto" else LossLaw.from_dict(t)
            except (SnrLossError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad ks target: {exc}", field=f"ks_targets[{i}]") from exc
            cfg.ks_targets.append(law)
        return cfg


def _int(d, key, default=None):
    val = d.get(key, default)
    try:
        out = int(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {val!r}", field=key) from None
    if out != val and not isinstance(val, str):
        raise ConfigError(f"{key} must be an integer, got {val!r}", field=key)
    return out


# --------------------------------------------------------------------------
# trial execution
# --------------------------------------------------------------------------


def _pa_transform(cfg: ExperimentConfig):
    f = cfg.filter
    if f.psi is not None:
        return fl.Transform.gsc(cfg.scenario.v, f.psi)
    return fl.Transform.random_gsc(Rng(cfg.seed, PSI_STREAM), cfg.scenario.v, f.R)


def _run_range(cfg: ExperimentConfig, start: int, stop: int):
    """Losses of trials ``start..stop-1``."""
    sc = cfg.scenario
    sampler = TrainingSampler(sc)
    f = cfg.filter
    K = cfg.K
    if f.kind in ("smi", "dl"):
        load = K * f.mu if f.kind == "dl" else 0.0
        out = np.empty(stop - start)
        for c0 in range(start, stop, cfg.chunk):
            c1 = min(c0 + cfg.chunk, stop)
            X = np.empty((c1 - c0, sc.N, K), dtype=complex)
            for i in range(c0, c1):
                try:
                    X[i - c0] = sampler.draw(Rng(cfg.seed, i), K)
                except Exception as exc:
                    raise TrialError(i, exc) from exc
            try:
                out[c0 - start:c1 - start], _ = kernels.loaded_smi_batch(X, sc.v, sc.sigma, load)
            except SnrLossError as exc:
                trial = c0 + getattr(exc, "position", 0)
                raise TrialError(trial, exc) from exc
        return out
    T = _pa_transform(cfg) if f.kind == "pa" else None
    W = np.empty((stop - start, sc.N), dtype=complex)
    for i in range(start, stop):
        rng = Rng(cfg.seed, i)
        try:
            X = sampler.draw(rng, K)
            S = X @ X.conj().T
            if f.kind == "ec":
                w = fl.w_eigencanceler(S, sc.v, f.R)
            elif f.kind == "pchol":
                w = fl.w_pchol(S, sc.v, f.R)
            elif f.kind == "pa":
                w = fl.w_partial(T, S, sc.v)
            else:
                w = fl.w_marzetta(rng, S, sc.v, f.R, f.L)
        except Exception as exc:
            raise TrialError(i, exc) from exc
        W[i - start] = w
    return snr_loss_batch(W, sc.v, sc.sigma)


def _worker(args):
    cfg, start, stop = args
    return _run_range(cfg, start, stop)


def _split(start, stop, parts):
    edges = np.linspace(start, stop, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------


@dataclass
class KSResult:
    statistic: float
    threshold_1pct: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.threshold_1pct


def ks_distance(sorted_samples, cdf) -> KSResult:
    """One-sample Kolmogorov-Smirnov distance with its asymptotic 1% threshold."""
    x = np.asarray(sorted_samples, dtype=float)
    if x.size == 0:
        raise EmptySamples("no samples")
    res = stats.kstest(x, cdf)
    return KSResult(float(res.statistic), KS_CONST_1PCT / math.sqrt(x.size))


def ks_two_sample(a, b) -> KSResult:
    """Two-sample distance with threshold ``1.63 sqrt((n+m)/(n m))``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptySamples("no samples")
    res = stats.ks_2samp(a, b)
    return KSResult(float(res.statistic), KS_CONST_1PCT * math.sqrt((a.size + b.size) / (a.size * b.size)))


@dataclass
class ExperimentResult:
    config: dict
    trial_range: tuple
    samples: np.ndarray  # sorted losses, or an evenly spaced subset of order statistics
    samples_complete: bool
    n: int
    mean: float
    variance: float
    bin_edges: np.ndarray
    counts: np.ndarray
    ks_results: list
    runtime_ms: float
    version: str
    backend: str

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.n)

    def to_dict(self, include_samples=True):
        d = {
            "config": self.config,
            "trial_range": list(self.trial_range),
            "n": self.n,
            "mean": self.mean,
            "variance": self.variance,
            "histogram": {"bin_edges": self.bin_edges.tolist(), "counts": self.counts.tolist()},
            "ks_results": self.ks_results,
            "samples_complete": self.samples_complete,
            "runtime_ms": self.runtime_ms,
            "version": self.version,
            "backend": self.backend,
        }
        if include_samples:
            d["samples"] = self.samples.tolist()
        return d

    def to_json(self, include_samples=True) -> str:
        return json.dumps(self.to_dict(include_samples), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d):
        return cls(config=d["config"], trial_range=tuple(d["trial_range"]),
                   samples=np.asarray(d.get("samples", []), dtype=float),
                   samples_complete=bool(d["samples_complete"]) and "samples" in d,
                   n=int(d["n"]), mean=float(d["mean"]), variance=float(d["variance"]),
                   bin_edges=np.asarray(d["histogram"]["bin_edges"], dtype=float),
                   counts=np.asarray(d["histogram"]["counts"], dtype=np.int64),
                   ks_results=list(d["ks_results"]), runtime_ms=float(d["runtime_ms"]),
                   version=d["version"], backend=d["backend"])

    def save(self, json_path, hist_csv=None, samples_csv=None):
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")
        if hist_csv is not None:
            rows = zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts)
            write_csv(hist_csv, ["bin_left", "bin_right", "count"],
                      [(repr(float(a)), repr(float(b)), str(int(c))) for a, b, c in rows])
        if samples_csv is not None:
            write_csv(samples_csv, ["sample_index", "loss"],
                      [(str(i), repr(float(x))) for i, x in enumerate(self.samples)])

    @classmethod
    def load(cls, json_path):
        with open(json_path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def write_csv(path, header, rows):
    """RFC-4180 style CSV (CRLF line ends, UTF-8)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\r\n")
        wr.writerow(header)
        wr.writerows(rows)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _stored_samples(sorted_losses):
    n = sorted_losses.size
    if n <= MAX_STORED:
        return sorted_losses, True
    # one representative per rank stratum, deterministic
    idx = ((np.arange(MAX_STORED) + 0.5) * n / MAX_STORED).astype(np.int64)
    return sorted_losses[idx], False


def _ks_entry(law: LossLaw, sorted_losses):
    ks = ks_distance(sorted_losses, lambda x: cdf_rho(x, law))
    return {
        "law": law.to_dict(),
        "statistic": ks.statistic,
        "threshold_1pct": ks.threshold_1pct,
        "pass": bool(ks.passed),
        "approximate": law.approximate,
        "empirical_cdf": cdf_is_empirical(law),
    }


def _assemble(cfg: ExperimentConfig, losses, trial_range, runtime_ms, ks_targets=None):
    losses = np.sort(np.asarray(losses, dtype=float))
    if np.any((losses < 0) | (losses > 1)) or not np.all(np.isfinite(losses)):
        raise SnrLossError("loss outside [0, 1]")
    n = losses.size
    # exactly rounded sums make the moments independent of trial order
    mean = math.fsum(losses) / n
    variance = math.fsum((losses - mean) ** 2) / (n - 1) if n > 1 else 0.0
    edges = np.linspace(0.0, 1.0, cfg.bins + 1)
    counts, _ = np.histogram(losses, bins=edges)
    targets = cfg.ks_targets if ks_targets is None else ks_targets
    ks = [_ks_entry(t, losses) for t in targets]
    samples, complete = _stored_samples(losses)
    return ExperimentResult(config=cfg.to_dict(), trial_range=tuple(trial_range), samples=samples,
                            samples_complete=complete, n=n, mean=mean, variance=variance,
                            bin_edges=edges, counts=counts.astype(np.int64), ks_results=ks,
                            runtime_ms=runtime_ms, version=_version(), backend=kernels.BACKEND)


def run_losses(cfg: ExperimentConfig, trial_range=None):
    """Raw (unsorted) losses for the trials in ``trial_range``."""
    start, stop = (0, cfg.trials) if trial_range is None else trial_range
    if not 0 <= start < stop:
        raise ConfigError(f"empty or invalid trial range {trial_range}", field="trial_range")
    if cfg.workers == 1 or stop - start < 2 * MIN_TRIALS:
        return _run_range(cfg, start, stop)
    parts = _split(start, stop, cfg.workers)
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        chunks = list(pool.map(_worker, [(cfg, a, b) for a, b in parts]))
    return np.concatenate(chunks)


def run_experiment(cfg: ExperimentConfig, trial_range=None) -> ExperimentResult:
    """Run ``cfg.trials`` independent trials (or a sub-range) and summarise them.

    Each trial draws a training set, builds the filter and evaluates its SNR
    loss against the scenario's ``sigma``. Construction failures raise
    :class:`TrialError` carrying the trial index.
    """
    t0 = time.perf_counter()
    trial_range = (0, cfg.trials) if trial_range is None else tuple(trial_range)
    losses = run_losses(cfg, trial_range)
    return _assemble(cfg, losses, trial_range, (time.perf_counter() - t0) * 1e3)


def merge_results(cfg: ExperimentConfig, parts) -> ExperimentResult:
    """Combine results of disjoint trial ranges into one result."""
    parts = sorted(parts, key=lambda r: r.trial_range)
    if not parts:
        raise EmptySamples("nothing to merge")
    for a, b in zip(parts[:-1], parts[1:]):
        if a.trial_range[1] > b.trial_range[0]:
            raise ValueError(f"overlapping trial ranges {a.trial_range} and {b.trial_range}")
    if not all(p.samples_complete for p in parts):
        raise ValueError("cannot merge results whose samples were subsampled")
    losses = np.concatenate([p.samples for p in parts])
    rng = (parts[0].trial_range[0], parts[-1].trial_range[1])
    return _assemble(cfg, losses, rng, sum(p.runtime_ms for p in parts))


# --------------------------------------------------------------------------
# three-route comparison
# --------------------------------------------------------------------------


@dataclass
class RouteReport:
    law: LossLaw
    direct_mean: float
    representation_mean: float
    pairs: dict  # name -> KSResult as dict
    mean_gap: float
    approximate: bool
    contrast: dict = field(default_factory=dict)

    @property
    def failing(self):
        return [k for k, v in self.pairs.items() if not v["pass"]]

    @property
    def passed(self) -> bool:
        if self.approximate:
            return self.mean_gap < 0.05
        return not self.failing


def _ks_dict(ks: KSResult):
    return {"statistic": ks.statistic, "threshold_1pct": ks.threshold_1pct, "pass": bool(ks.passed)}


def compare_routes(scenario: Scenario, K: int, M: int, seed: int, filter: FilterSpec | None = None,
                   law: LossLaw | None = None, contrast=()) -> RouteReport:
    """Cross-check direct simulation, the representation sampler and the closed form.

    ``law`` defaults to the scenario's fully adaptive law. Pairwise
    two-sample KS is run between the direct and representation routes, and
    one-sample KS of each route against the closed-form cdf when one
    exists. Approximate laws are judged on the mean gap (< 0.05) instead.
    ``contrast`` laws are reported as one-sample KS of the direct route,
    which are expected to fail.
    """
    filter = filter or FilterSpec()
    law = law or scenario.loss_law(K)
    cfg = ExperimentConfig(scenario=scenario, K=K, trials=M, seed=seed, filter=filter)
    direct = np.sort(run_losses(cfg))
    rep = np.sort(sample_rho(Rng(seed, REP_STREAM), law, M))
    pairs = {"direct~representation": _ks_dict(ks_two_sample(direct, rep))}
    if law.has_closed_form:
        cdf = lambda x: cdf_rho(x, law)  # noqa: E731
        pairs["direct~closed_form"] = _ks_dict(ks_distance(direct, cdf))
        pairs["representation~closed_form"] = _ks_dict(ks_distance(rep, cdf))
    contrast_out = {}
    for c in contrast:
        contrast_out[c.kind] = _ks_dict(ks_distance(direct, lambda x, c=c: cdf_rho(x, c)))
    return RouteReport(law=law, direct_mean=float(direct.mean()), representation_mean=float(rep.mean()),
                       pairs=pairs, mean_gap=abs(float(direct.mean() - rep.mean())),
                       approximate=law.approximate, contrast=contrast_out)
