"""Command line front end.

Exit statuses: 0 success, 2 unreadable input, 3 numerical failure,
4 invalid configuration.  Failures print one line ``error: <Class>: <message>``
on stderr.
"""

import argparse
import csv
import json
import logging
import math
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, MultitrendError, ParseError
from .gauss_quantile import QuantileConfig
from .inference import (
    KINDS,
    ArLrv,
    FixedLrv,
    HacLrv,
    TestOutcome,
    estimate_lrv,
    map_intervals_to_calendar,
    run_test,
)
from .kernels import EPANECHNIKOV
from .lrv import MAX_ORDER, HacConfig
from .multiscale import LocationScaleGrid, default_grid
from .parallel import default_workers
from .simulate import NoiseSpec, TrendSpec, gen_series, load_spec, run_experiment
from .sizer import SizerConfig, SizerPlan, sizer_test

log = logging.getLogger("multitrend")

MIN_LENGTH = 20
_MISSING = {"", "na", "nan", "null", "none", "?"}


# ------------------------------------------------------------------ input


@dataclass
class InputDataset:
    values: np.ndarray
    labels: list = None
    source: str = ""
    diagnostics: list = field(default_factory=list)

    @property
    def start_year(self):
        """First label when the labels are consecutive integers (e.g. years), else None."""
        if not self.labels:
            return None
        try:
            ints = [int(x) for x in self.labels]
        except ValueError:
            return None
        if any(b - a != 1 for a, b in zip(ints, ints[1:])):
            return None
        return ints[0]


def _split(line):
    return [f.strip() for f in line.split(",")] if "," in line else line.split()


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_series(path):
    """Read one- or two-column (``label,value``) numeric data.

    Comma or whitespace delimiters and an optional header row are detected
    automatically; blank lines and ``#`` comments are skipped.  Missing
    values are errors.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    rows, diagnostics, width = [], [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = _split(line)
        if not rows and width is None and not all(_is_number(f) or f.lower() in _MISSING for f in fields):
            diagnostics.append(f"line {lineno}: header {fields}")
            width = len(fields)
            continue
        if width is None:
            width = len(fields)
        if width not in (1, 2):
            raise ParseError(f"line {lineno}: expected 1 or 2 columns, got {width}")
        if len(fields) != width:
            raise ParseError(f"line {lineno}: expected {width} columns, got {len(fields)}")
        value = fields[-1]
        if value.lower() in _MISSING:
            raise ParseError(f"line {lineno}: missing value")
        try:
            v = float(value)
        except ValueError:
            raise ParseError(f"line {lineno}: cannot parse {value!r} as a number") from None
        if not math.isfinite(v):
            raise ParseError(f"line {lineno}: non-finite value {value!r}")
        rows.append((fields[0] if width == 2 else None, v))
    if len(rows) < MIN_LENGTH:
        raise ParseError(f"{path}: need at least {MIN_LENGTH} observations, got {len(rows)}")
    labels = [r[0] for r in rows] if width == 2 else None
    return InputDataset(np.array([r[1] for r in rows]), labels, str(path), diagnostics)


def read_grid(path, T):
    """Grid file with one ``u,h`` pair per line (header optional)."""
    pts = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read grid {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = _split(line)
        if len(fields) != 2:
            raise ConfigError(f"grid line {lineno}: expected 'u,h'")
        if not all(_is_number(f) for f in fields):
            if pts:
                raise ConfigError(f"grid line {lineno}: non-numeric entry")
            continue
        pts.append((float(fields[0]), float(fields[1])))
    return LocationScaleGrid.from_points(T, pts)


# ------------------------------------------------------------------ argument helpers


def _order(text):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"order must be an integer or 'auto', got {text!r}") from None


def lrv_method_from_args(args):
    spec = list(args.lrv)
    kind = spec[0]
    if kind == "fixed":
        value = spec[1] if len(spec) > 1 else args.sigma2
        if value is None:
            raise ConfigError("--lrv fixed needs a value, e.g. --lrv fixed 2.0")
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"--lrv fixed: not a number: {value!r}") from None
        if not value > 0:
            raise ConfigError("--lrv fixed: the long-run variance must be positive")
        return FixedLrv(value)
    if len(spec) > 1:
        raise ConfigError(f"--lrv {kind} takes no value")
    if kind == "hac":
        return HacLrv(HacConfig(args.q, args.hac_b, args.hac_window))
    if kind == "ar":
        p = args.p
        if p != "auto":
            if not 1 <= p <= MAX_ORDER:
                raise ConfigError(f"--p must be in 1..{MAX_ORDER} or 'auto', got {p}")
        return ArLrv(p, args.q, args.rbar, args.p_max)
    raise ConfigError(f"--lrv must be ar, hac or fixed, got {kind!r}")


def _add_lrv_flags(p):
    p.add_argument("--lrv", nargs="+", default=["ar"], metavar="METHOD",
                   help="ar | hac | fixed VALUE (default: ar)")
    p.add_argument("--p", type=_order, default=1, help="AR order or 'auto' for BIC selection (default 1)")
    p.add_argument("--p-max", type=int, default=8, help="largest order tried by --p auto (default 8)")
    p.add_argument("--q", type=int, default=25, help="pilot difference order (default 25)")
    p.add_argument("--rbar", type=int, default=10, help="refinement orders averaged (default 10)")
    p.add_argument("--hac-b", type=int, default=10, help="HAC lag-window bandwidth")
    p.add_argument("--hac-window", default="bartlett", choices=["bartlett", "parzen"])
    p.add_argument("--sigma2", type=float, default=None, help="value for --lrv fixed")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--workers", type=int, default=None, help="worker count (default from MULTITREND_WORKERS or 1)")
    p.add_argument("--backend", choices=["numba", "numpy"], default=None,
                   help="kernel backend (default: numba unless disabled)")
    p.add_argument("--out", default=None, help="output directory")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ------------------------------------------------------------------ commands


def cmd_test(args):
    data = read_series(args.input)
    T = data.values.size
    grid = default_grid(T) if args.grid == "default" else read_grid(args.grid, T)
    method = lrv_method_from_args(args)
    qcfg = QuantileConfig(n_sims=args.sims, seed=args.seed, alpha_list=(args.alpha,))
    outcome = run_test(data.values, args.alpha, grid, method, qcfg, kernel=EPANECHNIKOV,
                       workers=args.workers, backend=args.backend)
    outcome.params["start_year"] = data.start_year
    outcome.params["source"] = data.source
    print(outcome.summary(data.start_year))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "outcome.json").write_text(outcome.to_json(indent=2))
        _write_csv(out / "points.csv", ["u", "h", "corrected_stat", *(f"in_{k}" for k in KINDS)],
                   outcome.point_rows())
        rows = []
        for kind in KINDS:
            mins = {(iv.lo, iv.hi) for iv in outcome.minimal[kind]}
            years = map_intervals_to_calendar(outcome.sets[kind], data.start_year, T) \
                if data.start_year is not None else [None] * len(outcome.sets[kind])
            for iv, yr in zip(outcome.sets[kind], years):
                rows.append([kind, iv.u, iv.h, float(iv.lo), float(iv.hi), iv.stat,
                             int((iv.lo, iv.hi) in mins),
                             "" if yr is None else yr[0], "" if yr is None else yr[1]])
        _write_csv(out / "intervals.csv",
                   ["set", "u", "h", "lo", "hi", "stat", "minimal", "year_lo", "year_hi"], rows)
    return 0


def cmd_show(args):
    try:
        outcome = TestOutcome.from_json(Path(args.outcome).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"cannot read outcome {args.outcome}: {exc}") from None
    print(outcome.summary(outcome.params.get("start_year")))
    return 0


def cmd_lrv(args):
    data = read_series(args.input)
    method = lrv_method_from_args(args)
    sigma2, fit, sel = estimate_lrv(data.values, method)
    out = {"method": method.describe(), "sigma2": sigma2, "T": int(data.values.size)}
    if fit is not None:
        out["ar_fit"] = fit.to_dict()
    if sel is not None:
        out["order_selection"] = {"scores": {str(k): v for k, v in sel["scores"].items()},
                                  "skipped": {str(k): v for k, v in sel["skipped"].items()}}
    text = json.dumps(out, indent=2)
    print(text)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "lrv.json").write_text(text)
    return 0


def cmd_simulate(args):
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    report = run_experiment(spec, workers=args.workers)
    stem = Path(args.spec).stem
    if args.out:
        for p in report.write(args.out, stem):
            print(f"wrote {p}")
    else:
        sys.stdout.write(report.to_csv())
    return 0


def cmd_sizer(args):
    if args.ar is None:
        raise ConfigError(
            "sizer needs the error autocovariance: pass --ar A1 [A2] (and --nu2); "
            "raw data without a known autocovariance is refused"
        )
    noise = NoiseSpec(tuple(args.ar), args.nu2)
    if args.input is None:
        if args.T is None:
            raise ConfigError("sizer needs an input file or --T for synthetic data")
        Y = gen_series(args.T, TrendSpec(args.trend, args.beta), noise, args.seed)
    else:
        Y = read_series(args.input).values
    T = Y.size
    cfg = SizerConfig(noise.autocovariance(T), args.alpha, default_grid(T), args.theta)
    plan = SizerPlan(cfg, backend=args.backend)
    res = sizer_test(Y, cfg, plan, backend=args.backend)
    q = np.unique(res.map.q)
    print(f"q(h) = {q[0]:.6f} for every h (theta={args.theta:g}, g={plan.g}, alpha={args.alpha:g})")
    print(f"grid points with ESS* >= 5: {len(plan.table)} of {len(cfg.grid)}")
    print(f"flagged points: {int(res.map.flag.sum())}")
    print(f"reject H0: {'yes' if res.reject else 'no'}")
    for lo, hi in res.region:
        print(f"  region [{float(lo):.4f}, {float(hi):.4f}]")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "sizer_map.csv", ["u", "h", "estimate", "sd", "q", "flag"], res.map.rows())
    return 0


# ------------------------------------------------------------------ parser


def build_parser():
    ap = argparse.ArgumentParser(prog="multitrend", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run the multiscale test on a series")
    p.add_argument("input", help="CSV with values, or label,value rows")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--grid", default="default", help="'default' or a file of u,h pairs")
    p.add_argument("--sims", type=int, default=1000, help="Monte Carlo draws for the critical value")
    _add_lrv_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("show", help="reprint the summary of a saved outcome.json")
    p.add_argument("outcome")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
    p.set_defaults(func=cmd_show)

    p = sub.add_parser("lrv", help="estimate the long-run error variance")
    p.add_argument("input")
    _add_lrv_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_lrv)

    p = sub.add_parser("simulate", help="run an experiment spec file")
    p.add_argument("spec", help="spec path, or the name of a shipped spec (table1.spec, fig2.spec)")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sizer", help="SiZer map with a known AR autocovariance")
    p.add_argument("input", nargs="?", default=None, help="data file; omit with --T for synthetic data")
    p.add_argument("--ar", type=float, nargs="+", default=None, metavar="A", help="AR(1) or AR(2) coefficients")
    p.add_argument("--nu2", type=float, default=1.0, help="innovation variance (default 1)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--theta", type=float, default=1.0, help="cluster index (default 1)")
    p.add_argument("--T", type=int, default=None, help="length of a synthetic series")
    p.add_argument("--trend", default="constant", help="trend kind for synthetic data")
    p.add_argument("--beta", type=float, default=0.0, help="trend slope for synthetic data")
    _add_common(p)
    p.set_defaults(func=cmd_sizer)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", None) is None and hasattr(args, "workers"):
        args.workers = default_workers()
    try:
        return args.func(args)
    except MultitrendError as exc:
        msg = re.sub(r"\s+", " ", str(exc)).strip()
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
