"""Command-line front end.

Subcommands::

    snrloss figure ID [--out DIR] [--seed S] [--trials M] [--override k=v ...]
    snrloss experiment CONFIG.json [--out DIR] [--seed S] [--trials M] [--threads T]
    snrloss pdf KIND --N 16 --K 32 [--override k=v ...] [--grid 101 | --rho x ...]
    snrloss verify [quick|full] [--seed S]

Exit codes: 0 success, 1 criterion or KS failure, 2 usage or configuration
error. ``SNRLOSS_SEED`` overrides the default seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .acceptance import DEFAULT_SEED, run_all
from .errors import ConfigError, SnrLossError, UnknownFigure
from .figures import FIGURE_IDS, write_figure
from .laws import KINDS, LossLaw, cdf_is_empirical, cdf_rho, pdf_rho
from .montecarlo import ExperimentConfig, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    env = os.environ.get("SNRLOSS_SEED")
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise ConfigError(f"SNRLOSS_SEED is not an integer: {env!r}", field="SNRLOSS_SEED") from None
    return DEFAULT_SEED


def parse_overrides(items):
    """``key=value`` pairs; values are parsed as JSON when possible."""
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}", field=item)
        try:
            out[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.strip()] = raw
    return out


def _set_path(doc, dotted, value):
    node = doc
    parts = dotted.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def load_config(path, overrides=None):
    """Read a JSON experiment config, reporting parse errors with line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", field="config") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", field="config") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object", field="config")
    for key, val in (overrides or {}).items():
        _set_path(doc, key, val)
    return doc


# --------------------------------------------------------------------------


def cmd_figure(args):
    overrides = parse_overrides(args.override)
    if args.trials is not None:
        overrides["trials"] = args.trials
    seed = args.seed if args.seed is not None else default_seed()
    out = args.out or "figures"
    side, files = write_figure(args.id, out, overrides, seed)
    print(f"wrote {len(files)} CSV files and {side}")
    return EXIT_OK


def cmd_experiment(args):
    doc = load_config(args.config, parse_overrides(args.override))
    if args.seed is not None:
        doc["seed"] = args.seed
    elif "seed" not in doc:
        doc["seed"] = default_seed()
    if args.trials is not None:
        doc["trials"] = args.trials
    doc["workers"] = args.threads
    cfg = ExperimentConfig.from_dict(doc)
    res = run_experiment(cfg)
    out = args.out or "experiment"
    os.makedirs(out, exist_ok=True)
    res.save(os.path.join(out, "result.json"), os.path.join(out, "histogram.csv"),
             os.path.join(out, "samples.csv"))
    print(f"n={res.n} mean={res.mean:.6f} var={res.variance:.6e} runtime={res.runtime_ms:.0f} ms")
    failed = False
    for ks in res.ks_results:
        status = "pass" if ks["pass"] else "FAIL"
        flag = " (approximate law)" if ks["approximate"] else ""
        print(f"KS vs {ks['law']['kind']}: D={ks['statistic']:.5f} threshold={ks['threshold_1pct']:.5f} "
              f"{status}{flag}")
        failed |= not ks["pass"]
    print(f"results in {out}/")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_pdf(args):
    params = parse_overrides(args.override)
    fields = {"kind": args.kind, "N": args.N, "K": args.K}
    fields.update(params)
    if "lambda" in fields:
        fields["lam"] = fields.pop("lambda")
    try:
        law = LossLaw(**fields)
    except TypeError as exc:
        raise ConfigError(f"bad law parameters: {exc}", field="override") from exc
    rho = np.asarray(args.rho, dtype=float) if args.rho else np.linspace(0.0, law.scale, args.grid)
    cdf = cdf_rho(rho, law)
    try:
        pdf = pdf_rho(rho, law)
    except SnrLossError:
        pdf = None
    header = ["rho", "pdf", "cdf"] if pdf is not None else ["rho", "cdf"]
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        wr = csv.writer(fh, lineterminator="\r\n")
        wr.writerow(header)
        for i, r in enumerate(np.atleast_1d(rho)):
            row = [repr(float(r))]
            if pdf is not None:
                row.append(repr(float(np.atleast_1d(pdf)[i])))
            row.append(repr(float(np.atleast_1d(cdf)[i])))
            wr.writerow(row)
    finally:
        if args.out:
            fh.close()
    notes = []
    if law.approximate:
        notes.append("law is approximate")
    if cdf_is_empirical(law):
        notes.append("cdf is empirical (10^6 representation draws)")
    if notes:
        print("note: " + "; ".join(notes), file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    seed = args.seed if args.seed is not None else default_seed()
    print(f"acceptance level={args.level} seed={seed}")

    def report(crit):
        print(crit.line())
        for chk in crit.checks:
            print(f"    {'ok ' if chk.passed else 'BAD'} {chk.name}: {chk.detail}")
        sys.stdout.flush()

    results = run_all(args.level, seed, tamper_beta=args.tamper_beta, report=report)
    n_pass = sum(c.passed for c in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return EXIT_OK if n_pass == len(results) else EXIT_FAIL


def build_parser():
    p = _Parser(prog="snrloss", description="Distribution of the SNR loss of adaptive filters.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, trials=True):
        sp.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                        help="64-bit seed (default: $SNRLOSS_SEED or built-in)")
        if trials:
            sp.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials")
        sp.add_argument("--out", default=None, help="output directory or file")
        sp.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="parameter override, value parsed as JSON when possible")

    f = sub.add_parser("figure", help="write the curves of one figure as CSV")
    f.add_argument("id", help=f"figure id, one of: {', '.join(FIGURE_IDS)}")
    common(f)
    f.set_defaults(func=cmd_figure)

    e = sub.add_parser("experiment", help="run a Monte-Carlo experiment from a JSON config")
    e.add_argument("config")
    common(e)
    e.add_argument("--threads", type=int, default=1, help="worker processes")
    e.set_defaults(func=cmd_experiment)

    d = sub.add_parser("pdf", help="evaluate a loss law pointwise")
    d.add_argument("kind", choices=KINDS)
    d.add_argument("--N", type=int, required=True)
    d.add_argument("--K", type=int, required=True)
    d.add_argument("--grid", type=int, default=101, help="number of equispaced points")
    d.add_argument("--rho", type=float, nargs="+", help="explicit evaluation points")
    d.add_argument("--out", default=None, help="CSV file (default stdout)")
    d.add_argument("--override", action="append", metavar="KEY=VALUE",
                   help="law field, e.g. R=4, a=0.8, nu=32, snr_opt_over_gamma=10")
    d.set_defaults(func=cmd_pdf)

    v = sub.add_parser("verify", help="run the acceptance criteria")
    v.add_argument("level", nargs="?", choices=("quick", "full"), default="quick")
    v.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    v.add_argument("--tamper-beta", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UnknownFigure) as exc:
        field = getattr(exc, "field", None)
        where = f" [{field}]" if field else ""
        msg = exc.args[0] if exc.args else str(exc)
        print(f"snrloss: configuration error{where}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except SnrLossError as exc:
        print(f"snrloss: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
