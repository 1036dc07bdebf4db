"""Command-line front end.

    clat test INPUT [--method clat] [--q 0.1] [--null normal] ...
    clat simulate --case I --mu 3.1 ... | --preset table1
    clat oracle --pi1 0.1 --alt normal:2,1 --q 0.1 | --preset example1
    clat bench [--sizes 1e5,1e6,1e7]

Exit status: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import bh, lfdr_em, lfdr_oracle, lfdr_sc, lfdr_stepup, two_sided_pvalues, z_from_t
from .dist import (
    DistributionSpec,
    FiniteMixture,
    GeneralizedGaussian,
    LocationScale,
    Normal,
    SpikeTriangle,
    StandardNormal,
    StudentT,
    TwoGroupModel,
    Uniform01,
)
from .errors import ClatError, UndefinedPointError
from .oracle import oracle_report
from .procedure import ClatConfig, PValueVector, clat, clat_search, pvalues_left, pvalues_right
from .sim import METHODS, CaseConfig, average_r, caption_grid, replicate

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(ClatError):
    """Malformed command-line input or data file."""


# distribution spec strings

def parse_dist(text: str) -> DistributionSpec:
    """Parse ``normal``, ``normal:mu,sigma``, ``t:d[,mu,sigma]``, ``uniform``,
    ``gg:gamma[,mu]``, ``spike:n,alpha,l`` or a mixture ``w*spec + w*spec``."""
    text = text.strip()
    if "+" in text or "*" in text:
        weights, comps = [], []
        for part in text.split("+"):
            w, sep, spec = part.partition("*")
            if not sep:
                raise InputError(f"mixture term {part.strip()!r} needs the form weight*spec")
            weights.append(_number(w))
            comps.append(parse_dist(spec))
        return FiniteMixture(weights, comps)
    name, _, arg = text.partition(":")
    args = [_number(a) for a in arg.split(",")] if arg.strip() else []
    name = name.strip().lower()
    try:
        if name in ("normal", "n", "gaussian"):
            if not args:
                return StandardNormal()
            mu, sigma = (args + [1.0])[:2] if len(args) < 2 else args
            return Normal(mu, sigma)
        if name in ("t", "student"):
            if len(args) == 1:
                return StudentT(args[0])
            if len(args) == 3:
                return LocationScale(StudentT(args[0]), args[1], args[2])
        if name in ("uniform", "unif") and not args:
            return Uniform01()
        if name in ("gg", "gengauss") and len(args) in (1, 2):
            return GeneralizedGaussian(*args)
        if name == "spike" and len(args) == 3:
            return SpikeTriangle(int(args[0]), args[1], args[2])
    except TypeError as exc:
        raise InputError(f"bad arguments in distribution spec {text!r}") from exc
    raise InputError(f"cannot parse distribution spec {text!r}")


def _number(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise InputError(f"not a number: {text.strip()!r}") from None


# input files

def read_input(path: str, kind: str = "stat", header: bool = False) -> tuple[np.ndarray, np.ndarray | None]:
    """Read one value per row (``stat`` or ``p``) or ``t,df`` pairs (``tdf``)."""
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input file not found: {path}")
    ncol = 2 if kind == "tdf" else 1
    rows = []
    with p.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != ncol:
                raise InputError(f"line {lineno}: expected {ncol} column(s), found {len(row)}")
            try:
                vals = [float(c.strip()) for c in row]
            except ValueError:
                raise InputError(f"line {lineno}: cannot parse {','.join(row)!r} as numbers") from None
            if not all(math.isfinite(v) for v in vals):
                raise InputError(f"line {lineno}: non-finite value")
            rows.append(vals)
    if not rows:
        raise InputError(f"no data rows in {path}")
    arr = np.asarray(rows, dtype=float)
    if kind == "tdf":
        return arr[:, 0], arr[:, 1]
    return arr[:, 0], None


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_json(obj, fh=None) -> str:
    text = json.dumps(obj, indent=2, default=_json_default)
    if fh is not None:
        fh.write(text + "\n")
    return text


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


# subcommand: test

def run_test(args) -> int:
    values, df = read_input(args.input, args.kind, args.header)
    null = parse_dist(args.null)
    if args.kind == "tdf":
        stats = z_from_t(values, df)
        null = StandardNormal()
    elif args.kind == "p":
        pv = PValueVector(values, "right")  # validates [0, 1]
        stats = null.isf(np.clip(pv.values, 1e-300, 1.0))
    else:
        stats = values
    stats = np.atleast_1d(np.asarray(stats, dtype=float))

    if args.sided == "left":
        pvals = pvalues_left(stats, null).values
    elif args.sided == "right":
        pvals = pvalues_right(stats, null).values if args.kind != "p" else pv.values
    else:
        pvals = two_sided_pvalues(stats, null).values

    t0 = time.perf_counter()
    method = args.method
    if method == "clat":
        cfg = ClatConfig(q=args.q, pi1=args.pi1, length_constant=args.length_constant, null=null)
        if args.kind == "p" and args.sided == "right":
            res = clat_search(pv, cfg)
        else:
            res = clat(stats, null, cfg, sided=args.sided)
    elif method == "bh":
        res = bh(PValueVector(pvals), args.q, args.pi1)
    elif method == "lfdr-oracle":
        if args.alt is None:
            raise InputError("lfdr-oracle needs --alt")
        model = TwoGroupModel(args.pi1, null, parse_dist(args.alt))
        res = lfdr_stepup(lfdr_oracle(stats, model), args.q)
    elif method == "lfdr-sc":
        res = lfdr_sc(stats, args.pi1, null, args.q)
    elif method == "lfdr-em":
        res = lfdr_em(stats, args.em_components, args.q)
    else:
        raise InputError(f"unknown method {method!r}")
    runtime_ms = 1e3 * (time.perf_counter() - t0)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "statistic", "p_value", "rejected"])
    for i, (s, p, r) in enumerate(zip(stats, pvals, res.reject)):
        w.writerow([i, repr(float(s)), repr(float(p)), int(r)])
    _write(args.out_csv, buf.getvalue())

    summary = {
        "method": method,
        "q": args.q,
        "pi1": args.pi1,
        "sided": args.sided,
        "null": args.null if args.kind != "tdf" else "normal",
        "n": int(stats.size),
        "n_rejected": res.n_rejected,
        "result": res.to_dict(),
        "runtime_ms": runtime_ms,
    }
    if args.out_json is not None:
        _write(args.out_json, dump_json(summary) + "\n")
    elif args.out_csv not in (None, "-"):
        sys.stdout.write(dump_json(summary) + "\n")
    return EXIT_OK


# subcommand: simulate

SWEEPS = {
    # preset: (base config, parameter, lo, hi)
    "caseI-beta0.3": (CaseConfig(case="I", beta=0.3), "mu", 2.4, 3.8),
    "caseI-beta0.4": (CaseConfig(case="I", beta=0.4), "mu", 2.6, 4.0),
    "caseII-beta0.3": (CaseConfig(case="II", beta=0.3, d=10), "mu", 3.1, 3.8),
    "caseII-beta0.4": (CaseConfig(case="II", beta=0.4, d=10), "mu", 3.6, 4.6),
    "caseIII-beta0.3": (CaseConfig(case="III", beta=0.3, l=1.2), "alpha", 0.58, 0.68),
    "caseIII-beta0.4": (CaseConfig(case="III", beta=0.4, l=1.2), "alpha", 0.68, 0.78),
    "caseIV-beta0.3": (CaseConfig(case="IV", beta=0.3, sigma2=0.5), "mu", 2.4, 3.8),
    "caseIV-beta0.4": (CaseConfig(case="IV", beta=0.4, sigma2=0.5), "mu", 2.4, 3.8),
}
TABLE1 = CaseConfig(case="III", n=5000, beta=0.2, alpha=0.5, l=1.2, sc_scale="raw")
TABLE1_METHODS = ("clat", "bh", "lfdr-sc")
TABLE2_ROWS = ((0.7, 0.8, 2.0), (0.7, 0.5, 2.5), (0.6, 0.8, 1.5))

SUMMARY_COLUMNS = ("ET", "EV", "mFDR", "FDR", "mFNR", "power", "n_ok", "n_errors")


def _case_from_args(args) -> CaseConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(CaseConfig)
                 if getattr(args, f.name, None) is not None}
    return CaseConfig(**overrides)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def run_simulate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.preset == "table2":
        return _simulate_table2(args, out)

    if args.preset == "table1":
        base = replace(TABLE1, seed=args.seed)
        methods = tuple(args.methods.split(",")) if args.methods else TABLE1_METHODS
        grid = [("none", None)]
        reps = args.reps if args.reps is not None else 100
    elif args.preset is not None:
        base, param, lo, hi = SWEEPS[args.preset]
        base = replace(base, seed=args.seed)
        methods = tuple(args.methods.split(",")) if args.methods else METHODS
        grid = [(param, float(v)) for v in caption_grid(lo, hi, args.points)]
        reps = args.reps if args.reps is not None else 500
    else:
        base = _case_from_args(args)
        methods = tuple(args.methods.split(",")) if args.methods else ("clat",)
        if args.sweep:
            param, lo, hi = _parse_sweep(args.sweep)
            grid = [(param, float(v)) for v in caption_grid(lo, hi, args.points)]
        else:
            grid = [("none", None)]
        reps = args.reps if args.reps is not None else 100

    summary_rows, rep_rows, payload = [], [], []
    for param, value in grid:
        cfg = base if value is None else replace(base, **{param: value})
        res = replicate(cfg, methods, args.q, reps, workers=args.workers)
        payload.append({"param": param, "value": value, **res.to_dict(timing=args.timing)})
        for m, s in res.methods.items():
            d = s.to_dict(timing=args.timing)
            summary_rows.append([param, "" if value is None else _fmt(value), m] + [_fmt(d[c]) for c in SUMMARY_COLUMNS]
                                + ([_fmt(d["runtime"])] if args.timing else []))
        for r in res.records:
            rep_rows.append([param, "" if value is None else _fmt(value), r.rep, r.method, r.V, r.T, r.R,
                             r.n_nonnull, r.error or ""])

    header = ["param", "value", "method", *SUMMARY_COLUMNS] + (["runtime_s"] if args.timing else [])
    _write_csv(out / "summary.csv", header, summary_rows)
    _write_csv(out / "replicates.csv", ["param", "value", "rep", "method", "V", "T", "R", "n_nonnull", "error"],
               rep_rows)
    (out / "summary.json").write_text(dump_json({"q": args.q, "n_reps": reps, "grid": payload}) + "\n")
    return EXIT_OK


def _simulate_table2(args, out: Path) -> int:
    reps = args.reps if args.reps is not None else 100
    rows, payload = [], []
    for beta, sigma, mu in TABLE2_ROWS:
        r = average_r(beta, sigma, mu, n=args.n or 100_000, n_reps=reps, seed=args.seed)
        rows.append([_fmt(beta), _fmt(sigma), _fmt(mu), _fmt(r.mean), r.n_excluded])
        payload.append({"beta": beta, "sigma": sigma, "mu": mu, "average_r": r.mean, "n_excluded": r.n_excluded})
    _write_csv(out / "table2.csv", ["beta", "sigma", "mu", "average_r", "n_excluded"], rows)
    (out / "table2.json").write_text(dump_json({"n_reps": reps, "rows": payload}) + "\n")
    return EXIT_OK


def _parse_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError("--sweep needs PARAM:LO:HI")
    param = parts[0]
    if param not in {f.name for f in fields(CaseConfig)} or param in ("case", "seed"):
        raise InputError(f"cannot sweep {param!r}")
    return param, _number(parts[1]), _number(parts[2])


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


# subcommand: oracle

ORACLE_PRESETS = {
    "example1": lambda: TwoGroupModel(5000 ** -0.2, Uniform01(), SpikeTriangle(5000, 0.5, 1.2)),
    "monotone": lambda: TwoGroupModel(0.1, StandardNormal(), Normal(2.0, 1.0)),
}


def run_oracle(args) -> int:
    if args.preset is not None:
        model = ORACLE_PRESETS[args.preset]()
    else:
        if args.alt is None or args.pi1 is None:
            raise InputError("oracle needs --pi1 and --alt (or --preset)")
        model = TwoGroupModel(args.pi1, parse_dist(args.null), parse_dist(args.alt))
    if model.pi1 >= 1:
        raise InputError("pi1 must be < 1 for oracle analysis")
    report = oracle_report(model, args.q)
    _write(args.out_json, dump_json(report) + "\n")
    return EXIT_OK


# subcommand: bench

def bench(sizes, q: float = 0.1, seed: int = 0, repeat: int = 1) -> list[dict]:
    """Time ``clat_search`` on sorted uniform p-values (generation excluded)."""
    out = []
    for n in sizes:
        rng = np.random.default_rng(np.random.SeedSequence([seed, int(n)]))
        p = PValueVector(np.sort(rng.random(int(n))))
        cfg = ClatConfig(q=q)
        best = math.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            clat_search(p, cfg)
            best = min(best, time.perf_counter() - t0)
        out.append({"n": int(n), "seconds": best})
    return out


def run_bench(args) -> int:
    sizes = [int(float(s)) for s in args.sizes.split(",")]
    results = bench(sizes, args.q, args.seed, args.repeat)
    _write(args.out_json, dump_json({"q": args.q, "results": results}) + "\n")
    return EXIT_OK


# wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clat", description="Interval-rejection multiple testing.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run a procedure on a file of statistics")
    t.add_argument("input")
    t.add_argument("--method", choices=METHODS, default="clat")
    t.add_argument("--q", type=float, default=0.1)
    t.add_argument("--pi1", type=float, default=0.0)
    t.add_argument("--sided", choices=("right", "left", "two"), default="right")
    t.add_argument("--null", default="normal")
    t.add_argument("--alt", default=None, help="alternative law, for lfdr-oracle")
    t.add_argument("--kind", choices=("stat", "p", "tdf"), default="stat",
                   help="one statistic per row, one p-value per row, or t,df pairs")
    t.add_argument("--header", action="store_true", help="skip the first line")
    t.add_argument("--length-constant", type=float, default=2.0)
    t.add_argument("--em-components", type=int, default=2)
    t.add_argument("--out-csv", default="-")
    t.add_argument("--out-json", default=None)
    t.set_defaults(func=run_test)

    s = sub.add_parser("simulate", help="Monte Carlo replication study")
    s.add_argument("--preset", choices=("table1", "table2", *SWEEPS), default=None)
    s.add_argument("--case", choices=("I", "II", "III", "IV"), default=None)
    for name in ("n",):
        s.add_argument(f"--{name}", type=int, default=None)
    for name in ("beta", "mu", "sigma", "p1", "d", "alpha", "l", "sigma2"):
        s.add_argument(f"--{name}", type=float, default=None)
    s.add_argument("--sc-scale", dest="sc_scale", choices=("z", "raw"), default=None)
    s.add_argument("--sweep", default=None, help="PARAM:LO:HI, an inclusive grid of --points values")
    s.add_argument("--points", type=int, default=8)
    s.add_argument("--methods", default=None, help="comma-separated subset of " + ",".join(METHODS))
    s.add_argument("--q", type=float, default=0.1)
    s.add_argument("--reps", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--timing", action="store_true", help="include wall-clock runtimes (not reproducible)")
    s.add_argument("--out-dir", default="sim_out")
    s.set_defaults(func=run_simulate)

    o = sub.add_parser("oracle", help="population quantities for a known two-group model")
    o.add_argument("--preset", choices=tuple(ORACLE_PRESETS), default=None)
    o.add_argument("--pi1", type=float, default=None)
    o.add_argument("--null", default="normal")
    o.add_argument("--alt", default=None)
    o.add_argument("--q", type=float, default=0.1)
    o.add_argument("--out-json", default="-")
    o.set_defaults(func=run_oracle)

    b = sub.add_parser("bench", help="time the interval search")
    b.add_argument("--sizes", default="1e5,1e6,1e7")
    b.add_argument("--q", type=float, default=0.1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--repeat", type=int, default=1)
    b.add_argument("--out-json", default="-")
    b.set_defaults(func=run_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with np.errstate(over="ignore", under="ignore"):
            return args.func(args)
    except (UndefinedPointError, FloatingPointError, np.linalg.LinAlgError, ZeroDivisionError) as exc:
        print(f"clat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ClatError, OSError) as exc:
        print(f"clat: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
