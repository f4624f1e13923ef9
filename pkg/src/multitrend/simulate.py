"""Synthetic data and the simulation experiments.

Every replicate draws its data from a counter-based stream keyed by
``(seed, cell, replicate)``, and the weight table and critical values of a
cell are computed once and shared by all its replicates.  Replicates are
processed in fixed chunks whose results are reassembled in order, so a report
depends only on the spec and the seed, never on the worker count.

Experiment specs are INI files (see ``specs/`` for the shipped ones)::

    [experiment]
    kind = size_power          ; size_power | sizer_comparison | region_recovery | lrv_mse
    T = 250, 350, 500
    S = 1000
    seed = 1
    alpha = 0.01, 0.05, 0.1

    [noise:ar1-neg]
    a = -0.25
    nu2 = 1

    [trend:null]
    kind = constant
"""

import configparser
import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from . import __version__, rng
from .errors import ConfigError, MultitrendError, NonStationarySpec
from .gauss_quantile import QuantileConfig, simulate_critical_values
from .inference import (
    ArLrv,
    FixedLrv,
    HacLrv,
    Interval,
    estimate_lrv,
    interval_union,
    minimal_intervals,
    rejection_sets,
)
from .kernels import EPANECHNIKOV, build_weight_table
from .lrv import HacConfig, averaged_ar_fit, oracle_ar1
from .multiscale import LocationScaleGrid, default_grid, multiscale_statistic
from .parallel import chunk_ranges, map_ordered
from .sizer import SizerConfig, SizerPlan, sizer_quantile

log = logging.getLogger(__name__)

BURN_IN = 1000
CHUNK = 50
SPEC_DIR = Path(__file__).with_name("specs")

TREND_KINDS = ("constant", "linear", "centered_linear", "broken_line", "bump")


# ------------------------------------------------------------------ models


@dataclass(frozen=True)
class TrendSpec:
    """Trend family on ``[0, 1]``; ``beta`` is the slope, ``c`` the constant level."""

    kind: str = "constant"
    beta: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in TREND_KINDS:
            raise ConfigError(f"unknown trend kind {self.kind!r}; expected one of {TREND_KINDS}")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        b = self.beta
        if self.kind == "constant":
            return np.full_like(u, self.c)
        if self.kind == "linear":
            return b * u
        if self.kind == "centered_linear":
            return b * (u - 0.5)
        if self.kind == "broken_line":
            return b * (u - 0.5) * ((u >= 0.5) & (u <= 1.0))
        inside = (u >= 0.4) & (u <= 0.6)
        return 2.0 * inside * (1.0 - 100.0 * (u - 0.5) ** 2) ** 2

    def describe(self):
        if self.kind == "constant":
            return f"constant({self.c:g})"
        if self.kind == "bump":
            return "bump"
        return f"{self.kind}({self.beta:g})"


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian AR(1) or AR(2) errors ``e_t = sum_j a_j e_{t-j} + eta_t``, ``Var eta = nu2``."""

    a: tuple
    nu2: float = 1.0

    def __post_init__(self):
        a = tuple(float(x) for x in np.atleast_1d(self.a))
        if len(a) not in (1, 2):
            raise ConfigError(f"noise order must be 1 or 2, got {len(a)}")
        if not self.nu2 >= 0:
            raise ConfigError(f"innovation variance must be >= 0, got {self.nu2}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "nu2", float(self.nu2))
        # roots of 1 - a1 z - a2 z^2 must lie outside the closed unit disc
        roots = np.roots([-x for x in a[::-1]] + [1.0])
        if np.any(np.abs(roots) <= 1.0):
            raise NonStationarySpec(f"AR coefficients {a} are not stationary")

    @property
    def order(self):
        return len(self.a)

    @property
    def lrv(self):
        """Long-run variance ``nu2 / (1 - sum a)^2``."""
        return self.nu2 / (1.0 - sum(self.a)) ** 2

    def autocovariance(self, n):
        """``gamma(0..n-1)`` of the stationary process."""
        a1 = self.a[0]
        if self.order == 1:
            return self.nu2 * a1 ** np.arange(n) / (1.0 - a1 * a1)
        a2 = self.a[1]
        rho = np.empty(max(n, 3))
        rho[0], rho[1] = 1.0, a1 / (1.0 - a2)
        for k in range(2, rho.size):
            rho[k] = a1 * rho[k - 1] + a2 * rho[k - 2]
        g0 = self.nu2 / (1.0 - a1 * rho[1] - a2 * rho[2])
        return g0 * rho[:n]

    @property
    def variance(self):
        return float(self.autocovariance(1)[0])

    def describe(self):
        coef = ",".join(f"{x:g}" for x in self.a)
        return f"AR{self.order}({coef};nu2={self.nu2:g})"


def gen_errors(T, noise, seed, replicate=0, stream=rng.DATA):
    """Stationary AR errors of length ``T`` for one replicate."""
    g = rng.replicate_rng(seed, replicate, stream)
    sd = math.sqrt(noise.nu2)
    if noise.order == 1:
        a1 = noise.a[0]
        e0 = g.standard_normal() * sd / math.sqrt(1.0 - a1 * a1)
        eta = g.standard_normal(T) * sd
        return lfilter([1.0], [1.0, -a1], eta, zi=[a1 * e0])[0]
    eta = g.standard_normal(T + BURN_IN) * sd
    return lfilter([1.0], [1.0, -noise.a[0], -noise.a[1]], eta)[BURN_IN:]


def gen_series(T, trend, noise, seed, replicate=0, stream=rng.DATA):
    """``Y_t = m(t/T) + e_t`` for ``t = 1..T``."""
    T = int(T)
    if T < 1:
        raise ConfigError("T must be positive")
    return trend(np.arange(1, T + 1) / T) + gen_errors(T, noise, seed, replicate, stream)


def _cell_stream(cell):
    return (rng.DATA << 32) | int(cell)


# ------------------------------------------------------------------ reports


@dataclass
class ExperimentReport:
    kind: str
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self):
        return json.dumps(
            {"kind": self.kind, "package_version": __version__, "meta": self.meta,
             "columns": self.columns, "rows": self.rows, "extras": self.extras},
            indent=2, default=_json_default,
        )

    def write(self, out_dir, stem=None):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or self.kind
        paths = [out / f"{stem}.csv", out / f"{stem}.json"]
        paths[0].write_text(self.to_csv())
        paths[1].write_text(self.to_json())
        if "regions" in self.extras:
            p = out / f"{stem}_regions.csv"
            p.write_text(regions_csv(self.extras["regions"]))
            paths.append(p)
        return paths


def _fmt(x):
    if isinstance(x, float):
        return repr(round(x, 12))
    return x


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def regions_csv(regions):
    """One row per (cell, replicate, method, interval) for region plots."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell", "replicate", "method", "lo", "hi"])
    for cell, reps in regions.items():
        for rep in reps:
            for method in ("multiscale", "sizer"):
                for lo, hi in rep[method]:
                    w.writerow([cell, rep["replicate"], method, repr(lo), repr(hi)])
    return buf.getvalue()


# ------------------------------------------------------------------ spec parsing


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    T: tuple
    S: int
    seed: int
    alpha: tuple
    noises: dict
    trends: dict
    lrv: str = "ar"
    p: int = None
    q: int = 25
    r_bar: int = 10
    hac_b: int = 10
    hac_window: str = "bartlett"
    n_sims: int = 1000
    theta: float = 1.0
    q_list: tuple = (25,)
    r_bar_list: tuple = (10,)
    s_beta: tuple = (1.0, 10.0)


KINDS = ("size_power", "sizer_comparison", "region_recovery", "lrv_mse")


def _floats(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ValueError(f"expected integers, got {text!r}")
    return tuple(int(v) for v in vals)


def parse_spec(text):
    """Parse an INI experiment spec; every problem found is reported at once."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"spec is not valid INI: {exc}") from None
    problems = []
    if not cp.has_section("experiment"):
        raise ConfigError("spec needs an [experiment] section")
    ex = cp["experiment"]

    def get(key, conv, default=None, required=False):
        if key not in ex:
            if required:
                problems.append(f"experiment.{key}: missing")
            return default
        try:
            return conv(ex[key])
        except ValueError as exc:
            problems.append(f"experiment.{key}: {exc}")
            return default

    kind = ex.get("kind", "").strip()
    if kind not in KINDS:
        problems.append(f"experiment.kind: must be one of {KINDS}, got {kind!r}")
    known = {"kind", "t", "s", "seed", "alpha", "lrv", "p", "q", "r_bar", "hac_b", "hac_window",
             "n_sims", "theta", "q_list", "r_bar_list", "s_beta"}
    for key in ex:
        if key not in known:
            problems.append(f"experiment.{key}: unknown key")
    kw = dict(
        kind=kind,
        T=get("T", _ints, (), required=True),
        S=get("S", int, 0, required=True),
        seed=get("seed", int, 0),
        alpha=get("alpha", _floats, (0.05,)),
        lrv=ex.get("lrv", "ar").strip(),
        p=get("p", int, None),
        q=get("q", int, 25),
        r_bar=get("r_bar", int, 10),
        hac_b=get("hac_b", int, 10),
        hac_window=ex.get("hac_window", "bartlett").strip(),
        n_sims=get("n_sims", int, 1000),
        theta=get("theta", float, 1.0),
        q_list=get("q_list", _ints, (25,)),
        r_bar_list=get("r_bar_list", _ints, (10,)),
        s_beta=get("s_beta", _floats, (1.0, 10.0)),
    )
    if kw["S"] is not None and kw["S"] < 1:
        problems.append("experiment.S: must be >= 1")
    if any(t < 20 for t in kw["T"] or ()):
        problems.append("experiment.T: every T must be >= 20")
    if any(not 0 < a < 1 for a in kw["alpha"] or ()):
        problems.append("experiment.alpha: levels must lie in (0, 1)")
    if kw["lrv"] not in ("ar", "hac", "known"):
        problems.append(f"experiment.lrv: must be ar, hac or known, got {kw['lrv']!r}")
    if kw["n_sims"] is not None and kw["n_sims"] < 100:
        problems.append("experiment.n_sims: must be >= 100")
    if kw["theta"] is not None and not kw["theta"] > 0:
        problems.append("experiment.theta: must be positive")

    noises, trends = {}, {}
    for name in cp.sections():
        sec = cp[name]
        if name.startswith("noise:"):
            label = name.split(":", 1)[1].strip()
            try:
                noises[label] = NoiseSpec(_floats(sec.get("a", "")), float(sec.get("nu2", "1")))
            except (ValueError, MultitrendError) as exc:
                problems.append(f"[{name}]: {exc}")
        elif name.startswith("trend:"):
            label = name.split(":", 1)[1].strip()
            try:
                trends[label] = TrendSpec(sec.get("kind", "constant").strip(),
                                          float(sec.get("beta", "0")), float(sec.get("c", "0")))
            except (ValueError, MultitrendError) as exc:
                problems.append(f"[{name}]: {exc}")
        elif name != "experiment":
            problems.append(f"[{name}]: unknown section")
    if not noises:
        problems.append("spec needs at least one [noise:NAME] section")
    if kind in ("size_power", "sizer_comparison", "region_recovery") and not trends:
        if kind == "region_recovery":
            trends = {"bump": TrendSpec("bump")}
        else:
            problems.append("spec needs at least one [trend:NAME] section")
    if problems:
        raise ConfigError("invalid experiment spec:\n  " + "\n  ".join(problems))
    return ExperimentSpec(noises=noises, trends=trends, **kw)


def load_spec(path):
    """Read a spec file; bare names such as ``table1`` or ``table1.spec`` resolve to shipped specs."""
    p = Path(path)
    if not p.exists():
        for cand in (SPEC_DIR / p.name, SPEC_DIR / f"{p.name}.spec"):
            if cand.exists():
                p = cand
                break
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read spec {path}: {exc}") from None
    return parse_spec(text)


def lrv_method_for(spec, noise):
    if spec.lrv == "known":
        return FixedLrv(noise.lrv)
    if spec.lrv == "hac":
        return HacLrv(HacConfig(spec.q, spec.hac_b, spec.hac_window))
    # the AR order defaults to the order of the simulated noise
    return ArLrv(spec.p or noise.order, spec.q, spec.r_bar)


# ------------------------------------------------------------------ workers


def _psi_chunk(reps, T, trend, noise, seed, stream, method, table):
    """``Psi`` per replicate (NaN when the variance estimate fails)."""
    out = np.empty(len(reps))
    for k, i in enumerate(reps):
        Y = gen_series(T, trend, noise, seed, i, stream)
        try:
            sigma2, _, _ = estimate_lrv(Y, method)
            _, out[k] = multiscale_statistic(Y, table, math.sqrt(sigma2))
        except MultitrendError as exc:
            log.warning("replicate %d failed: %s", i, exc)
            out[k] = np.nan
    return out


def _comparison_chunk(reps, T, trend, noise, seed, stream, sigma, table, plan):
    """``(Psi, max |estimate / sd|)`` per replicate on shared data."""
    out = np.empty((len(reps), 2))
    for k, i in enumerate(reps):
        Y = gen_series(T, trend, noise, seed, i, stream)
        _, out[k, 0] = multiscale_statistic(Y, table, sigma)
        out[k, 1] = np.max(np.abs(plan.table.apply(Y)) / plan.sd)
    return out


def _run_chunks(fn, S, workers):
    parts = map_ordered(fn, chunk_ranges(S, CHUNK), workers=workers, processes=True)
    return np.concatenate(parts)


def _critical(table, spec):
    qcfg = QuantileConfig(n_sims=spec.n_sims, seed=spec.seed, alpha_list=spec.alpha)
    return simulate_critical_values(table, qcfg)


def _restricted_grid(T, noise, alpha, theta):
    grid = default_grid(T)
    plan = SizerPlan(SizerConfig(noise.autocovariance(T), alpha, grid, theta))
    sub = LocationScaleGrid(T, plan.table.u, plan.table.h, kind="ess-restricted")
    return plan, sub


# ------------------------------------------------------------------ experiments


def size_power_experiment(spec, workers=None):
    """Rejection frequencies of the multiscale test per ``(T, noise, trend, alpha)`` cell."""
    t0 = time.perf_counter()
    rows, cell = [], 0
    for T in spec.T:
        table = build_weight_table(T, default_grid(T), EPANECHNIKOV)
        crit = _critical(table, spec)
        for nname, noise in spec.noises.items():
            method = lrv_method_for(spec, noise)
            for tname, trend in spec.trends.items():
                fn = partial(_psi_chunk, T=T, trend=trend, noise=noise, seed=spec.seed,
                             stream=_cell_stream(cell), method=method, table=table)
                psi = _run_chunks(fn, spec.S, workers)
                failed = int(np.isnan(psi).sum())
                for a in spec.alpha:
                    q = crit.quantile(a)
                    n_rej = int(np.sum(psi > q))
                    rows.append({"T": T, "noise": nname, "trend": tname, "alpha": a, "S": spec.S,
                                 "critical_value": q, "rejections": n_rej,
                                 "frequency": n_rej / spec.S, "failed": failed})
                cell += 1
    cols = ["T", "noise", "trend", "alpha", "S", "critical_value", "rejections", "frequency", "failed"]
    return ExperimentReport("size_power", cols, rows, _meta(spec, t0))


def sizer_comparison_experiment(spec, workers=None):
    """Multiscale test versus SiZer on the same replicates, with known autocovariance."""
    t0 = time.perf_counter()
    rows, cell = [], 0
    for T in spec.T:
        for nname, noise in spec.noises.items():
            plan, sub = _restricted_grid(T, noise, spec.alpha[0], spec.theta)
            table = build_weight_table(T, sub, EPANECHNIKOV)
            crit = _critical(table, spec)
            sigma = math.sqrt(noise.lrv)
            for tname, trend in spec.trends.items():
                fn = partial(_comparison_chunk, T=T, trend=trend, noise=noise, seed=spec.seed,
                             stream=_cell_stream(cell), sigma=sigma, table=table, plan=plan)
                res = _run_chunks(fn, spec.S, workers)
                for a in spec.alpha:
                    q_mt = crit.quantile(a)
                    q_sz = sizer_quantile(a, spec.theta, plan.g)
                    mt, sz = int(np.sum(res[:, 0] > q_mt)), int(np.sum(res[:, 1] > q_sz))
                    rows.append({"T": T, "noise": nname, "trend": tname, "alpha": a, "S": spec.S,
                                 "grid_points": len(table), "mt_critical_value": q_mt,
                                 "sizer_quantile": q_sz, "mt_rejections": mt, "mt_frequency": mt / spec.S,
                                 "sizer_rejections": sz, "sizer_frequency": sz / spec.S})
                cell += 1
    cols = ["T", "noise", "trend", "alpha", "S", "grid_points", "mt_critical_value", "sizer_quantile",
            "mt_rejections", "mt_frequency", "sizer_rejections", "sizer_frequency"]
    return ExperimentReport("sizer_comparison", cols, rows, _meta(spec, t0))


TRUE_REGION = ((0.4, 0.5), (0.5, 0.6))


def region_scores(region, truth=TRUE_REGION):
    """Lebesgue measures of ``region`` inside and outside ``truth`` (both unions of intervals)."""
    inside = 0.0
    for lo, hi in region:
        for a, b in truth:
            inside += max(0.0, min(hi, b) - max(lo, a))
    total = sum(hi - lo for lo, hi in region)
    return inside, total - inside


def _region_chunk(reps, T, trend, noise, seed, stream, sigma, table, q_mt, plan):
    out = []
    for i in reps:
        Y = gen_series(T, trend, noise, seed, i, stream)
        points, _ = multiscale_statistic(Y, table, sigma)
        both = rejection_sets(points, q_mt, T)["both"]
        mt = interval_union(minimal_intervals(both))
        flag = np.abs(plan.table.apply(Y)) > plan.q * plan.sd
        flagged = [Interval.from_point(plan.table.u[j], plan.table.h[j], 0.0, T)
                   for j in np.flatnonzero(flag)]
        sz = interval_union(minimal_intervals(flagged))
        out.append({"replicate": i,
                    "multiscale": [(float(lo), float(hi)) for lo, hi in mt],
                    "sizer": [(float(lo), float(hi)) for lo, hi in sz]})
    return out


def region_recovery_experiment(spec, workers=None):
    """Per-replicate regions of both methods and their coverage/excess scores."""
    t0 = time.perf_counter()
    alpha = spec.alpha[0]
    rows, regions, cell = [], {}, 0
    for T in spec.T:
        for nname, noise in spec.noises.items():
            plan, sub = _restricted_grid(T, noise, alpha, spec.theta)
            table = build_weight_table(T, sub, EPANECHNIKOV)
            q_mt = _critical(table, spec).quantile(alpha)
            sigma = math.sqrt(noise.lrv)
            for tname, trend in spec.trends.items():
                fn = partial(_region_chunk, T=T, trend=trend, noise=noise, seed=spec.seed,
                             stream=_cell_stream(cell), sigma=sigma, table=table, q_mt=q_mt, plan=plan)
                parts = map_ordered(fn, chunk_ranges(spec.S, CHUNK), workers=workers, processes=True)
                reps = [r for part in parts for r in part]
                label = f"T={T}/{nname}/{tname}"
                regions[label] = reps
                for method in ("multiscale", "sizer"):
                    scores = np.array([region_scores(r[method]) for r in reps])
                    rows.append({"T": T, "noise": nname, "trend": tname, "alpha": alpha, "S": spec.S,
                                 "method": method,
                                 "mean_coverage": float(scores[:, 0].mean()),
                                 "mean_excess": float(scores[:, 1].mean()),
                                 "runs_with_excess": int(np.sum(scores[:, 1] > 0)),
                                 "runs_empty": int(sum(1 for r in reps if not r[method]))})
                cell += 1
    cols = ["T", "noise", "trend", "alpha", "S", "method", "mean_coverage", "mean_excess",
            "runs_with_excess", "runs_empty"]
    return ExperimentReport("region_recovery", cols, rows, _meta(spec, t0), {"regions": regions})


def _lrv_chunk(reps, T, trend, noise, seed, stream, tuning):
    """Per replicate: oracle (a, sigma2), then (pilot a, a, sigma2) per tuning pair."""
    out = np.full((len(reps), 2 + 3 * len(tuning)), np.nan)
    for k, i in enumerate(reps):
        e = gen_errors(T, noise, seed, i, stream)
        Y = trend(np.arange(1, T + 1) / T) + e
        orc = oracle_ar1(e)
        out[k, :2] = orc.a, orc.sigma2
        for j, (q, r_bar) in enumerate(tuning):
            try:
                fit = averaged_ar_fit(Y, 1, q, r_bar)
            except MultitrendError as exc:
                log.warning("replicate %d (q=%d, r_bar=%d) failed: %s", i, q, r_bar, exc)
                continue
            out[k, 2 + 3 * j:5 + 3 * j] = fit.pilot[0], fit.a[0], fit.sigma2
    return out


def lrv_mse_experiment(spec, workers=None):
    """MSEs of the pilot, averaged and oracle AR(1) estimators over scenario and tuning grids.

    Each noise section must be AR(1); the trend is ``beta u`` with
    ``beta = s_beta sqrt(Var e)`` for every ``s_beta`` in the spec.
    """
    t0 = time.perf_counter()
    tuning = [(q, r) for q in spec.q_list for r in spec.r_bar_list]
    rows, draws, cell = [], {}, 0
    for T in spec.T:
        for nname, noise in spec.noises.items():
            if noise.order != 1:
                raise ConfigError(f"lrv_mse needs AR(1) noise, [{nname}] has order {noise.order}")
            if noise.nu2 == 0:
                raise NonStationarySpec(f"[{nname}]: nu2 = 0 gives deterministic data; AR fit undefined")
            a_true, s2_true = noise.a[0], noise.lrv
            for sb in spec.s_beta:
                trend = TrendSpec("linear", sb * math.sqrt(noise.variance))
                fn = partial(_lrv_chunk, T=T, trend=trend, noise=noise, seed=spec.seed,
                             stream=_cell_stream(cell), tuning=tuning)
                res = _run_chunks(fn, spec.S, workers)
                orc_a, orc_s2 = res[:, 0], res[:, 1]
                for j, (q, r_bar) in enumerate(tuning):
                    pil, a_hat, s2 = res[:, 2 + 3 * j], res[:, 3 + 3 * j], res[:, 4 + 3 * j]
                    ok = ~np.isnan(a_hat)
                    mse_s2 = float(np.mean((s2[ok] - s2_true) ** 2))
                    rows.append({
                        "T": T, "noise": nname, "a1": a_true, "s_beta": sb, "q": q, "r_bar": r_bar,
                        "S": spec.S, "failed": int((~ok).sum()),
                        "mean_a_hat": float(a_hat[ok].mean()),
                        "mse_pilot": float(np.mean((pil[ok] - a_true) ** 2)),
                        "mse_a_hat": float(np.mean((a_hat[ok] - a_true) ** 2)),
                        "mse_a_oracle": float(np.mean((orc_a - a_true) ** 2)),
                        "mse_sigma2": mse_s2,
                        "mse_sigma2_oracle": float(np.mean((orc_s2 - s2_true) ** 2)),
                        "log_mse_sigma2": math.log(mse_s2),
                        "log_mse_sigma2_oracle": math.log(float(np.mean((orc_s2 - s2_true) ** 2))),
                        "min_a_hat": float(a_hat[ok].min()), "max_a_hat": float(a_hat[ok].max()),
                    })
                    draws[f"T={T}/{nname}/s_beta={sb:g}/q={q}/r_bar={r_bar}"] = {
                        "a_hat": a_hat.tolist(), "pilot": pil.tolist(), "a_oracle": orc_a.tolist()}
                cell += 1
    cols = ["T", "noise", "a1", "s_beta", "q", "r_bar", "S", "failed", "mean_a_hat", "mse_pilot",
            "mse_a_hat", "mse_a_oracle", "mse_sigma2", "mse_sigma2_oracle", "log_mse_sigma2",
            "log_mse_sigma2_oracle", "min_a_hat", "max_a_hat"]
    return ExperimentReport("lrv_mse", cols, rows, _meta(spec, t0), {"draws": draws})


EXPERIMENTS = {
    "size_power": size_power_experiment,
    "sizer_comparison": sizer_comparison_experiment,
    "region_recovery": region_recovery_experiment,
    "lrv_mse": lrv_mse_experiment,
}


def run_experiment(spec, workers=None):
    return EXPERIMENTS[spec.kind](spec, workers=workers)


def _meta(spec, t0):
    d = asdict(spec)
    d["noises"] = {k: v.describe() for k, v in spec.noises.items()}
    d["trends"] = {k: v.describe() for k, v in spec.trends.items()}
    d["wall_time_s"] = round(time.perf_counter() - t0, 3)
    return d
