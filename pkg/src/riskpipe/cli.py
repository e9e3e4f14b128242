"""Command-line entry point: synth, aggregate, analyze, report and breach."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from ._io import atomic_write_text, fmt_float, sha256_file, write_csv
from .errors import DataError
from .ingest import RecordKind, parse_records
from .models import (
    breach_association,
    compare_models,
    correlation_table,
    industry_ks_matrix,
    loglog_slope,
    presence_analysis,
)
from .orgmap import build_ip_index, load_ipmap, load_registry
from .report import write_figures
from .riskvectors import Observations, aggregate_profiles, read_profiles, write_profiles
from .synth import Mode, SynthConfig, generate_dataset, write_dataset

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
MAX_DIAGNOSTICS = 100


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_months(text: str) -> list[str]:
    """Accept ``YYYY-MM,YYYY-MM,...`` or an inclusive range ``YYYY-MM..YYYY-MM``."""
    def one(s):
        s = s.strip()
        try:
            y, m = s.split("-")
            y, m = int(y), int(m)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad month {s!r}, expected YYYY-MM") from None
        if not 1 <= m <= 12:
            raise argparse.ArgumentTypeError(f"bad month {s!r}")
        return y, m

    if ".." in text:
        a, b = text.split("..", 1)
        (y0, m0), (y1, m1) = one(a), one(b)
        if (y1, m1) < (y0, m0):
            raise argparse.ArgumentTypeError(f"empty month range {text!r}")
        out = []
        y, m = y0, m0
        while (y, m) <= (y1, m1):
            out.append(f"{y:04d}-{m:02d}")
            y, m = (y + 1, 1) if m == 12 else (y, m + 1)
        return out
    return [f"{y:04d}-{m:02d}" for y, m in (one(s) for s in text.split(",") if s.strip())]


def _probability(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _bandwidth(text: str):
    if text in ("scott", "silverman"):
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("bandwidth is 'scott', 'silverman' or a positive number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riskpipe", description="Organization risk-vector pipeline.")
    parser.add_argument("--version", action="version", version=f"riskpipe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--orgs", type=_positive_int, default=1000, help="number of organizations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.Profiles.value)
    p.add_argument("--industries", type=_positive_int, default=22)
    p.add_argument("--spread", type=float, default=0.0, help="per-industry coefficient spread (normal sd)")
    p.add_argument("--sigma", type=float, default=1.0, help="residual sd of ln(bot_rate)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("aggregate", help="fold event files into profiles.csv")
    p.add_argument("--data", help="directory holding the default-named input files")
    p.add_argument("--orgs-file")
    p.add_argument("--ipmap")
    for kind in ("tls", "services", "seeders", "infections"):
        p.add_argument(f"--{kind}")
    p.add_argument("--months", type=parse_months, default=None,
                   help="YYYY-MM list or YYYY-MM..YYYY-MM (default 2015-01..2015-12)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("analyze", help="fit models and run tests on profiles.csv")
    p.add_argument("--profiles", required=True)
    p.add_argument("--breaches")
    p.add_argument("--alpha", type=_probability, default=0.01)
    p.add_argument("--ci", type=_probability, default=0.98)
    p.add_argument("--min-rows", type=_positive_int, default=10)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="write figure-data files")
    p.add_argument("--profiles", required=True)
    p.add_argument("--analysis", help="directory with analyze outputs (default: --out)")
    p.add_argument("--breaches")
    p.add_argument("--alpha", type=_probability, default=0.01)
    p.add_argument("--bins", type=_positive_int, default=50)
    p.add_argument("--bandwidth", type=_bandwidth, default="scott", help="scatter KDE bandwidth")
    p.add_argument("--svg", action="store_true", help="also emit simple SVG histograms")
    p.add_argument("--out", required=True)

    p = sub.add_parser("breach", help="breach association tests")
    p.add_argument("--profiles", required=True)
    p.add_argument("--breaches", required=True)
    p.add_argument("--out", required=True)
    return parser


# -- manifest --

def _require(path: Optional[str], flag: str) -> Path:
    if path is None:
        raise DataError(f"missing input: {flag} not given")
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(str(p))
    return p


def write_manifest(out: Path, command: str, inputs: dict[str, Path], params: dict, outputs: Sequence[str]) -> str:
    """Write ``manifest_<command>.json``; paths are relative to ``out`` so trees compare byte for byte."""
    name = f"manifest_{command}.json"
    doc = {
        "command": command,
        "version": __version__,
        "parameters": params,
        "inputs": [{"role": role, "path": os.path.relpath(p, out), "sha256": sha256_file(p)}
                   for role, p in sorted(inputs.items())],
        "outputs": [{"path": o, "sha256": sha256_file(out / o)} for o in sorted(set(outputs))],
    }
    atomic_write_text(out / name, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return name


def _f(x: float) -> str:
    return "" if x is None else fmt_float(x)


# -- commands --

def cmd_synth(args) -> tuple[dict, dict, list[str]]:
    cfg = SynthConfig(n_orgs=args.orgs, n_industries=args.industries, seed=args.seed,
                      sigma=args.sigma, industry_coefficient_spread=args.spread)
    ds = generate_dataset(cfg, Mode(args.mode))
    written = write_dataset(ds, args.out)
    params = {"orgs": args.orgs, "seed": args.seed, "mode": args.mode, "industries": args.industries,
              "spread": args.spread, "sigma": args.sigma}
    return {}, params, written


def cmd_aggregate(args):
    data = Path(args.data) if args.data else None

    def pick(value, default_name):
        if value is not None:
            return value
        if data is not None and (data / default_name).is_file():
            return str(data / default_name)
        return None

    inputs = {"orgs": _require(pick(args.orgs_file, "orgs.csv"), "--orgs-file"),
              "ipmap": _require(pick(args.ipmap, "ipmap.csv"), "--ipmap")}
    registry = load_registry(inputs["orgs"])
    index = build_ip_index(load_ipmap(inputs["ipmap"]), registry)

    parsed = {}
    diagnostics = {}
    for kind in ("tls", "services", "seeders", "infections"):
        path = pick(getattr(args, kind), f"{kind}.csv")
        if path is None:
            parsed[kind] = []
            continue
        inputs[kind] = _require(path, f"--{kind}")
        res = parse_records(RecordKind(kind), inputs[kind])
        parsed[kind] = res.records
        diagnostics[kind] = {"records": len(res.records), "skipped": res.skipped,
                             "messages": [f"line {d.line}: {d.message}" for d in res.diagnostics[:MAX_DIAGNOSTICS]]}
    months = args.months or parse_months("2015-01..2015-12")
    obs = Observations(parsed["tls"], parsed["services"], parsed["seeders"], parsed["infections"])
    profiles, diag = aggregate_profiles(obs, registry, index, months)

    out = Path(args.out)
    write_profiles(out / "profiles.csv", profiles)
    report = {"parse": diagnostics, "aggregation": diag.as_dict(), "organizations": len(profiles)}
    atomic_write_text(out / "diagnostics.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    return inputs, {"months": months}, ["profiles.csv", "diagnostics.json"]


COEF_HEADER = ["regressor", "estimate", "stderr", "t", "p", "ci_low", "ci_high"]
FIT_HEADER = ["variant", "group", "n", "n_coefficients", "r2", "sigma", "rss", "aic"]


def _coef_rows(fit, prefix=()):
    for name, est, se, t, p, lo, hi in fit.rows():
        yield (*prefix, name, _f(est), _f(se), _f(t), _f(p), _f(lo), _f(hi))


def _read_breaches(path: Path):
    return parse_records(RecordKind.BREACHES, path).records


def _breach_rows(assoc):
    for factor, res, table in (("bot_present", assoc.bot, assoc.bot_table),
                               ("p2p_present", assoc.p2p, assoc.p2p_table)):
        (a, b), (c, d) = table
        yield (factor, _f(res.statistic), _f(res.p_value), a, b, c, d)


BREACH_HEADER = ["factor", "G", "p", "breached_present", "breached_absent", "clean_present", "clean_absent"]


def cmd_analyze(args):
    inputs = {"profiles": _require(args.profiles, "--profiles")}
    if args.breaches:
        inputs["breaches"] = _require(args.breaches, "--breaches")
    profiles = read_profiles(inputs["profiles"])
    out = Path(args.out)
    written = []

    def track(name):
        written.append(name)
        return out / name

    cmp = compare_models(profiles, args.ci, args.min_rows)
    pooled = cmp.fits["Pooled"].fits["pooled"]
    write_csv(track("regression_pooled.csv"), COEF_HEADER, _coef_rows(pooled))
    unpooled = cmp.fits["Unpooled"].fits if "Unpooled" in cmp.fits else {}
    write_csv(track("regression_unpooled.csv"), ["industry"] + COEF_HEADER,
              (row for ind in sorted(unpooled) for row in _coef_rows(unpooled[ind], (ind,))))
    fit_rows = []
    for name, vf in cmp.fits.items():
        for group in sorted(vf.fits):
            f = vf.fits[group]
            fit_rows.append((name, group, f.n, f.n_coef, _f(f.r2), _f(f.sigma), _f(f.rss), _f(f.aic)))
    fe = cmp.fits.get("FixedEffects")
    write_csv(track("regression_fixed_effects.csv"), COEF_HEADER,
              _coef_rows(fe.fits["fixed_effects"]) if fe else [])
    write_csv(track("regression_fits.csv"), FIT_HEADER, fit_rows)
    write_csv(track("model_comparison.csv"),
              ["variant", "n_parameters", "n_coefficients", "n_rows", "aic", "selected"],
              ((s.name, s.n_parameters, s.n_coefficients, s.n_rows, _f(s.aic), int(s.name == cmp.selected))
               for s in cmp.variants))
    dropped = [(k, "Unpooled", v) for k, v in cmp.dropped.items()]
    dropped += [("*", k, reason) for k, reason in cmp.skipped.items()]
    write_csv(track("dropped.csv"), ["industry", "variant", "reason"], sorted(dropped))

    write_csv(track("correlations.csv"), ["vector", "label", "n", "rho", "p", "error"],
              ((r.vector, r.label, r.result.n[0] if r.result else "", _f(r.result.statistic) if r.result else "",
                _f(r.result.p_value) if r.result else "", r.error or "") for r in correlation_table(profiles)))
    slope = loglog_slope(profiles, args.ci)
    write_csv(track("loglog_slope.csv"), COEF_HEADER, _coef_rows(slope))

    presence_rows = []
    for i, t in enumerate(presence_analysis(profiles)):
        method = "GTest" if i == 0 else "MannWhitney"
        if t.result is None:
            presence_rows.append((t.label, method, "", "", "", "", t.direction, 0, t.error))
            continue
        r = t.result
        presence_rows.append((t.label, method, _f(r.statistic), _f(r.p_value), r.n[0],
                              r.n[1] if len(r.n) > 1 else "", t.direction, int(r.p_value < args.alpha), ""))
    write_csv(track("presence_tests.csv"),
              ["label", "method", "statistic", "p", "n1", "n2", "direction", "significant", "error"], presence_rows)

    ks = industry_ks_matrix(profiles, args.alpha)
    write_csv(track("ks_matrix.csv"), ["industry_a", "industry_b", "n_a", "n_b", "D", "p", "significant"],
              ((k.industry_a, k.industry_b, k.result.n[0], k.result.n[1], _f(k.result.statistic),
                _f(k.result.p_value), int(k.significant)) for k in ks.pairs))
    write_csv(track("ks_summary.csv"), ["alpha", "n_pairs", "n_significant", "fraction_significant", "skipped"],
              [(_f(ks.alpha), len(ks.pairs), sum(k.significant for k in ks.pairs),
                _f(ks.fraction_significant), ";".join(sorted(ks.skipped)))])

    if args.breaches:
        assoc = breach_association(profiles, _read_breaches(inputs["breaches"]))
        write_csv(track("breach_tests.csv"), BREACH_HEADER, _breach_rows(assoc))
    params = {"alpha": args.alpha, "ci": args.ci, "min_rows": args.min_rows}
    return inputs, params, written


def cmd_report(args):
    inputs = {"profiles": _require(args.profiles, "--profiles")}
    breaches = None
    if args.breaches:
        inputs["breaches"] = _require(args.breaches, "--breaches")
        breaches = _read_breaches(inputs["breaches"])
    analysis = Path(args.analysis or args.out)
    for name in ("regression_pooled.csv", "regression_unpooled.csv"):
        inputs[name] = _require(str(analysis / name), "--analysis")
    profiles = read_profiles(inputs["profiles"])
    written = write_figures(profiles, analysis, args.out, breaches, args.alpha, args.bins, args.bandwidth, args.svg)
    params = {"alpha": args.alpha, "bins": args.bins, "bandwidth": args.bandwidth, "svg": args.svg}
    return inputs, params, written


def cmd_breach(args):
    inputs = {"profiles": _require(args.profiles, "--profiles"), "breaches": _require(args.breaches, "--breaches")}
    assoc = breach_association(read_profiles(inputs["profiles"]), _read_breaches(inputs["breaches"]))
    write_csv(Path(args.out) / "breach_tests.csv", BREACH_HEADER, _breach_rows(assoc))
    return inputs, {"unknown_orgs": assoc.unknown_orgs}, ["breach_tests.csv"]


COMMANDS = {"synth": cmd_synth, "aggregate": cmd_aggregate, "analyze": cmd_analyze,
            "report": cmd_report, "breach": cmd_breach}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        inputs, params, written = COMMANDS[args.command](args)
        write_manifest(out, args.command, inputs, params, written)
    except FileNotFoundError as exc:
        print(f"riskpipe: error: file not found: {exc.filename or exc.args[0]}", file=sys.stderr)
        return EXIT_DATA
    except DataError as exc:
        print(f"riskpipe: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Like ``main`` but converts argparse exits into a return code."""
    try:
        return main(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else (0 if code is None else EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
