"""Figure reproduction as CSV curves.

Each figure id maps to a builder producing named curves. A curve is written
as up to three CSV files: ``closed`` (``rho, density`` from a closed form),
``mc`` (``bin_center, empirical_density`` from direct simulation) and
``rep`` (same columns, from the representation sampler). A sidecar JSON
records every parameter, the seed and the library version.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import subspace_angles

from . import filters as fl
from .acceptance import dl_loading, sub_seed
from .distributions import Rng
from .errors import ConfigError, UnknownFigure
from .hermitian import H, orth_complement
from .laws import LossLaw, coef_a, pdf_rho, sample_rho
from .montecarlo import ExperimentConfig, FilterSpec, run_losses, write_csv
from .scenarios import (build_sigma, make_ger, make_mpdr_snr, make_mvdr, make_student, make_surprise,
                        make_wishart_mismatch, JAMMERS, ula_steering)

DEFAULTS = {
    "fa_mvdr": {"N": 16, "K_list": [20, 24, 32, 48, 64]},
    "mpdr_K32": {"N": 16, "K": 32, "snr_list": [0, 10, 100]},
    "ger_undernulled": {"N": 16, "K": 32, "qcq_list": [0, 1, 10, 100], "q_angle": 40.0},
    "ger_mismatch": {"N": 16, "K": 32, "draws": 5, "strength": 1.0},
    "general_mismatch": {"N": 16, "K": 32, "draws": 5, "eta_db_range": [-6.0, 6.0]},
    "student_vs_nu": {"N": 16, "K": 32, "nu_list": [20, 24, 32, 64, 128]},
    "student_vs_K": {"N": 16, "nu": 32, "K_list": [20, 24, 32, 48, 64]},
    "pa_mvdr_grid": {"panels": [[16, 16, 4], [16, 32, 4], [64, 64, 16], [64, 128, 16]],
                     "a_list": [0.5, 0.7, 0.9, 1.0]},
    "a_vs_psi": {"N": 16, "R": 3, "count": 100, "max_angle_deg": 45.0},
    "ec_vs_K": {"N": 16, "R": 3, "K_list": [6, 8, 12, 16, 32]},
    # R_ec: rank of the eigencanceler reference, the number of jammers
    "marzetta_R3": {"N": 16, "K": 6, "R": 3, "L": 32, "R_ec": 3},
    "marzetta_R4": {"N": 16, "K": 6, "R": 4, "L": 32, "R_ec": 3},
    "dl": {"N": 16, "K": 6, "R": 3, "load_list": [1, 10, 100, 1000, 10000]},
}
COMMON = {"trials": 10_000, "bins": 100, "grid": 501}
FIGURE_IDS = tuple(DEFAULTS)


@dataclass
class Curve:
    name: str
    closed: tuple | None = None  # (rho, density)
    mc: tuple | None = None  # (bin_center, empirical_density)
    rep: tuple | None = None
    table: tuple | None = None  # (header, rows) for non-density figures
    meta: dict = field(default_factory=dict)


def _hist(x, bins):
    counts, edges = np.histogram(x, bins=bins, range=(0.0, 1.0), density=True)
    return 0.5 * (edges[:-1] + edges[1:]), counts


def _grid(p):
    # open interval avoids endpoint singularities of some densities
    n = int(p["grid"])
    return (np.arange(n) + 0.5) / n


class _Builder:
    def __init__(self, fid, params, seed):
        self.fid = fid
        self.p = params
        self.seed = seed
        self.tag = 0

    def next_seed(self):
        self.tag += 1
        return sub_seed(self.seed, self.tag)

    def scene(self, N):
        sigma, _ = build_sigma(N, JAMMERS)
        return sigma, ula_steering(N, 0.0)

    def mc(self, scenario, K, filt=None):
        cfg = ExperimentConfig(scenario=scenario, K=K, trials=int(self.p["trials"]), seed=self.next_seed(),
                               filter=filt or FilterSpec())
        return _hist(run_losses(cfg), int(self.p["bins"]))

    def rep(self, law):
        x = sample_rho(Rng(self.next_seed(), 0), law, int(self.p["trials"]))
        return _hist(x, int(self.p["bins"]))

    def closed(self, law):
        g = _grid(self.p)
        return g, pdf_rho(g, law)


def _fa_mvdr(b):
    p = b.p
    sigma, v = b.scene(p["N"])
    sc = make_mvdr(sigma, v)
    return [Curve(f"K{K}", closed=b.closed(LossLaw.mvdr(p["N"], K)), mc=b.mc(sc, K), meta={"K": K})
            for K in p["K_list"]]


def _mpdr(b):
    p = b.p
    sigma, v = b.scene(p["N"])
    out = []
    for s in p["snr_list"]:
        sc = make_mpdr_snr(sigma, v, float(s))
        law = sc.loss_law(p["K"])
        out.append(Curve(f"snr{s:g}", closed=b.closed(law), mc=b.mc(sc, p["K"]), meta={"snr_opt": s}))
    return out


def _ger_undernulled(b):
    p = b.p
    N, K = p["N"], p["K"]
    sigma, v = b.scene(N)
    out = [Curve("mvdr", closed=b.closed(LossLaw.mvdr(N, K)))]
    for q in p["qcq_list"]:
        if q == 0:
            continue
        sc = make_surprise(sigma, v, p["q_angle"], target_qcq=float(q))
        out.append(Curve(f"qcq{q:g}", mc=b.mc(sc, K), rep=b.rep(sc.loss_law(K)), meta={"qcq": q}))
    return out


def _mismatch(b, maker):
    p = b.p
    N, K = p["N"], p["K"]
    sigma, v = b.scene(N)
    out = [Curve("mvdr", closed=b.closed(LossLaw.mvdr(N, K)))]
    for d in range(int(p["draws"])):
        sc = maker(sigma, v, Rng(b.next_seed(), 0))
        out.append(Curve(f"draw{d}", mc=b.mc(sc, K), rep=b.rep(sc.loss_law(K)),
                         meta={k: sc.extras[k] for k in ("lambda", "ratio") if k in sc.extras}))
    return out


def _ger_mismatch(b):
    return _mismatch(b, lambda s, v, r: make_ger(s, v, r, float(b.p["strength"])))


def _general_mismatch(b):
    rng_db = tuple(b.p["eta_db_range"])
    return _mismatch(b, lambda s, v, r: make_wishart_mismatch(s, v, r, rng_db))


def _student_vs_nu(b):
    p = b.p
    N, K = p["N"], p["K"]
    sigma, v = b.scene(N)
    out = [Curve("gaussian", closed=b.closed(LossLaw.mvdr(N, K)))]
    for nu in p["nu_list"]:
        sc = make_student(sigma, v, float(nu))
        out.append(Curve(f"nu{nu:g}", closed=b.closed(LossLaw.student(N, K, nu)), mc=b.mc(sc, K),
                         meta={"nu": nu}))
    return out


def _student_vs_K(b):
    p = b.p
    N, nu = p["N"], p["nu"]
    sigma, v = b.scene(N)
    sc = make_student(sigma, v, float(nu))
    return [Curve(f"K{K}", closed=b.closed(LossLaw.student(N, K, nu)), mc=b.mc(sc, K), meta={"K": K})
            for K in p["K_list"]]


def _pa_grid(b):
    out = []
    for N, K, R in b.p["panels"]:
        for a in b.p["a_list"]:
            law = LossLaw.pa_mvdr(N, K, R, a)
            out.append(Curve(f"N{N}_K{K}_R{R}_a{a:g}", closed=b.closed(law), rep=b.rep(law),
                             meta={"N": N, "K": K, "R": R, "a": a}))
    return out


def close_psi(rng, Q, R, max_angle_deg, max_tries=10_000):
    """Random ``Psi`` whose range is within ``max_angle_deg`` of ``range(Q)``."""
    n = Q.shape[0]
    for _ in range(max_tries):
        eps = rng.gen.uniform(0.0, 1.0)
        psi = Q @ rng.cnormal((Q.shape[1], R)) + eps * rng.cnormal((n, R))
        if np.degrees(subspace_angles(psi, Q).max()) < max_angle_deg:
            return psi
    raise ConfigError("could not draw a Psi close enough to the interference subspace", field="max_angle_deg")


def _a_vs_psi(b):
    p = b.p
    N, R = p["N"], p["R"]
    sigma, G = build_sigma(N, JAMMERS)
    v = ula_steering(N, 0.0)
    V = orth_complement(v)
    Q, _ = np.linalg.qr(H(V) @ G)
    rng = Rng(b.next_seed(), 0)
    rows = []
    for i in range(int(p["count"])):
        a_rand = coef_a(fl.Transform.gsc(v, rng.cnormal((N - 1, R))).matrix, sigma, v)
        a_close = coef_a(fl.Transform.gsc(v, close_psi(rng, Q, R, p["max_angle_deg"])).matrix, sigma, v)
        rows.append((str(i), repr(float(a_rand)), repr(float(a_close))))
    return [Curve("a_values", table=(["trial", "a_random", "a_close"], rows))]


def _ec_vs_K(b):
    p = b.p
    N, R = p["N"], p["R"]
    sigma, v = b.scene(N)
    sc = make_mvdr(sigma, v)
    return [Curve(f"K{K}", closed=b.closed(LossLaw("ec_approx", N, K, R=R)),
                  mc=b.mc(sc, K, FilterSpec(kind="ec", R=R)), meta={"K": K, "approximate": True})
            for K in p["K_list"]]


def _marzetta(b):
    p = b.p
    N, K, R, Rec = p["N"], p["K"], p["R"], p["R_ec"]
    sigma, v = b.scene(N)
    sc = make_mvdr(sigma, v)
    return [
        Curve("ec_law", closed=b.closed(LossLaw("ec_approx", N, K, R=Rec)), meta={"approximate": True}),
        Curve("eigencanceler", mc=b.mc(sc, K, FilterSpec(kind="ec", R=Rec))),
        Curve(f"marzetta_L{p['L']}", mc=b.mc(sc, K, FilterSpec(kind="marzetta", R=R, L=int(p["L"])))),
    ]


def _dl(b):
    p = b.p
    N, K, R = p["N"], p["K"], p["R"]
    sigma, v = b.scene(N)
    sc = make_mvdr(sigma, v)
    out = [Curve("ec_law", closed=b.closed(LossLaw("dl_approx", N, K, R=R)), meta={"approximate": True})]
    loads = list(p["load_list"])
    geo = dl_loading(sigma, R)
    for load in loads + ["geo"]:
        val = geo if load == "geo" else float(load)
        name = "load_geo" if load == "geo" else f"load{val:g}"
        out.append(Curve(name, mc=b.mc(sc, K, FilterSpec(kind="dl", mu=val / K)), meta={"K_mu": val}))
    return out


BUILDERS = {
    "fa_mvdr": _fa_mvdr, "mpdr_K32": _mpdr, "ger_undernulled": _ger_undernulled,
    "ger_mismatch": _ger_mismatch, "general_mismatch": _general_mismatch,
    "student_vs_nu": _student_vs_nu, "student_vs_K": _student_vs_K, "pa_mvdr_grid": _pa_grid,
    "a_vs_psi": _a_vs_psi, "ec_vs_K": _ec_vs_K, "marzetta_R3": _marzetta, "marzetta_R4": _marzetta,
    "dl": _dl,
}


def figure_params(fid, overrides=None):
    if fid not in DEFAULTS:
        raise UnknownFigure(f"unknown figure {fid!r}; known: {', '.join(FIGURE_IDS)}")
    params = dict(COMMON)
    params.update(DEFAULTS[fid])
    for key, val in (overrides or {}).items():
        if key not in params:
            raise ConfigError(f"figure {fid} has no parameter {key!r}", field=key)
        params[key] = val
    N = params.get("N")
    if N is not None and N < 4:
        raise ConfigError("N must be at least 4", field="N")
    if params["trials"] < 100:
        raise ConfigError("trials must be at least 100", field="trials")
    return params


def build_figure(fid, overrides=None, seed=0):
    params = figure_params(fid, overrides)
    b = _Builder(fid, params, seed)
    return params, BUILDERS[fid](b)


def _fmt(x):
    return repr(float(x))


def write_figure(fid, out_dir, overrides=None, seed=0):
    """Build figure ``fid`` and write its CSV files and sidecar JSON into ``out_dir``."""
    from . import __version__

    params, curves = build_figure(fid, overrides, seed)
    os.makedirs(out_dir, exist_ok=True)
    files = []
    for c in curves:
        parts = [("closed", c.closed, ["rho", "density"]), ("mc", c.mc, ["bin_center", "empirical_density"]),
                 ("rep", c.rep, ["bin_center", "empirical_density"])]
        for route, data, header in parts:
            if data is None:
                continue
            name = f"{fid}__{c.name}__{route}.csv"
            write_csv(os.path.join(out_dir, name), header, [(_fmt(a), _fmt(y)) for a, y in zip(*data)])
            files.append({"file": name, "curve": c.name, "route": route, **c.meta})
        if c.table is not None:
            name = f"{fid}__{c.name}.csv"
            write_csv(os.path.join(out_dir, name), *c.table)
            files.append({"file": name, "curve": c.name, "route": "table", **c.meta})
    sidecar = {"figure": fid, "seed": seed, "params": params, "version": __version__, "files": files}
    path = os.path.join(out_dir, f"{fid}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path, files


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)


def reproduce_from_sidecar(path, out_dir):
    """Regenerate a figure from its sidecar JSON."""
    with open(path, encoding="utf-8") as fh:
        side = json.load(fh)
    fid = side["figure"]
    base = figure_params(fid)
    overrides = {k: v for k, v in side["params"].items() if base.get(k) != v}
    return write_figure(fid, out_dir, overrides, side["seed"])

