"""The full multiscale test: variance estimate, critical value, rejection sets.

Interval endpoints are kept as exact fractions (grid points are ratios of
integers over ``T``), so containment between rejected intervals is decided
without floating-point ties.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__, _accel
from .errors import ConfigError, NonPositiveSigma
from .gauss_quantile import QuantileConfig, simulate_critical_values
from .kernels import EPANECHNIKOV, build_weight_table, scaled
from .lrv import ArFit, HacConfig, averaged_ar_fit, bic_order_select, hac_estimate
from .multiscale import PointStatistics, default_grid, multiscale_statistic

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KINDS = ("both", "increase", "decrease")


# ------------------------------------------------------------ variance methods


@dataclass(frozen=True)
class ArLrv:
    """AR(p) difference estimator; ``p="auto"`` selects the order by BIC."""

    p: object = 1
    q: int = 25
    r_bar: int = 10
    p_max: int = 8

    def describe(self):
        return {"method": "ar", "p": self.p, "q": self.q, "r_bar": self.r_bar, "p_max": self.p_max}


@dataclass(frozen=True)
class HacLrv:
    cfg: HacConfig

    def describe(self):
        return {"method": "hac", "q": self.cfg.q, "b": self.cfg.b, "window": self.cfg.window}


@dataclass(frozen=True)
class FixedLrv:
    sigma2: float

    def describe(self):
        return {"method": "fixed", "sigma2": self.sigma2}


def estimate_lrv(Y, method):
    """Return ``(sigma2, ArFit or None, order-selection scores or None)``."""
    if isinstance(method, FixedLrv):
        return float(method.sigma2), None, None
    if isinstance(method, HacLrv):
        return hac_estimate(Y, method.cfg), None, None
    if isinstance(method, ArLrv):
        if method.p == "auto":
            sel = bic_order_select(Y, method.p_max, method.q, method.r_bar)
            fit = sel.fits[sel.p]
            return fit.sigma2, fit, {"scores": sel.scores, "skipped": sel.skipped}
        fit = averaged_ar_fit(Y, int(method.p), method.q, method.r_bar)
        return fit.sigma2, fit, None
    raise ConfigError(f"unknown long-run variance method {method!r}")


# ------------------------------------------------------------ interval sets


def exact_endpoint(x, T):
    s = scaled(x, T)
    return Fraction(int(s), T) if s == int(s) else Fraction(float(x))


@dataclass(frozen=True)
class Interval:
    u: float
    h: float
    lo: Fraction
    hi: Fraction
    stat: float

    @classmethod
    def from_point(cls, u, h, stat, T):
        uu, hh = exact_endpoint(u, T), exact_endpoint(h, T)
        return cls(float(u), float(h), uu - hh, uu + hh, float(stat))

    @property
    def inside_unit(self):
        return self.lo >= 0 and self.hi <= 1

    def contains(self, other):
        """Closed-interval inclusion ``other ⊆ self``."""
        return self.lo <= other.lo and other.hi <= self.hi

    def to_dict(self):
        return {
            "u": self.u,
            "h": self.h,
            "lo": f"{self.lo.numerator}/{self.lo.denominator}",
            "hi": f"{self.hi.numerator}/{self.hi.denominator}",
            "stat": self.stat,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["u"]), float(d["h"]), Fraction(d["lo"]), Fraction(d["hi"]), float(d["stat"]))


@dataclass(frozen=True)
class IntervalSet:
    kind: str
    intervals: tuple

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


def rejection_sets(points, critical_value, T):
    """Intervals whose corrected statistic exceeds ``critical_value``.

    ``both`` uses the absolute statistic; ``increase``/``decrease`` use the
    signed ones and keep only intervals inside ``[0, 1]``.
    """
    stats = {
        "both": points.corrected_abs,
        "increase": points.corrected_signed_pos,
        "decrease": points.corrected_signed_neg,
    }
    out = {}
    for kind in KINDS:
        s = stats[kind]
        members = []
        for i in np.flatnonzero(s > critical_value):
            iv = Interval.from_point(points.u[i], points.h[i], s[i], T)
            if kind != "both" and not iv.inside_unit:
                continue
            members.append(iv)
        out[kind] = IntervalSet(kind, tuple(members))
    return out


def minimal_intervals(interval_set):
    """Members that strictly contain no other member, in input order.

    Sweep over left endpoints from right to left, tracking the smallest right
    endpoint seen among intervals starting strictly further right.
    """
    items = list(interval_set)
    order = sorted(range(len(items)), key=lambda i: (-items[i].lo, items[i].hi))
    minimal = [False] * len(items)
    best_hi = None  # min hi over intervals with strictly larger lo
    group_lo, group_best = None, None
    for i in order:
        iv = items[i]
        if iv.lo != group_lo:
            if group_best is not None:
                best_hi = group_best if best_hi is None else min(best_hi, group_best)
            group_lo, group_first_hi, group_best = iv.lo, iv.hi, iv.hi
        dominated_right = best_hi is not None and best_hi <= iv.hi
        dominated_same = iv.hi > group_first_hi
        minimal[i] = not (dominated_right or dominated_same)
        group_best = min(group_best, iv.hi)
    return [iv for iv, keep in zip(items, minimal) if keep]


def map_intervals_to_calendar(intervals, start_year, T):
    """Label rescaled-time intervals ``[a, b]`` with years.

    Rescaled time ``x`` maps to ``start_year + x T``; the result is clipped
    to the observed span ``[start_year, start_year + T - 1]``.  An interval
    that collapses after clipping maps to ``None``.
    """
    first, last = int(start_year), int(start_year) + int(T) - 1
    out = []
    for iv in intervals:
        lo = first + math.ceil(iv.lo * T)
        hi = first + math.floor(iv.hi * T)
        lo, hi = max(lo, first), min(hi, last)
        out.append((lo, hi) if lo <= hi else None)
    return out


# ------------------------------------------------------------ test outcome


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False  # not a pytest class

    Psi: float
    critical_value: float
    alpha: float
    reject: bool
    sets: dict
    minimal: dict
    sigma_hat2: float
    ar_fit: object = None
    points: PointStatistics = field(default=None, repr=False)
    params: dict = field(default_factory=dict)

    def to_dict(self):
        pts = self.points
        return {
            "schema_version": SCHEMA_VERSION,
            "package_version": __version__,
            "Psi": self.Psi,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "sigma_hat2": self.sigma_hat2,
            "ar_fit": None if self.ar_fit is None else self.ar_fit.to_dict(),
            "sets": {k: [iv.to_dict() for iv in self.sets[k]] for k in KINDS},
            "minimal": {k: [iv.to_dict() for iv in self.minimal[k]] for k in KINDS},
            "points": None if pts is None else {
                "u": pts.u.tolist(), "h": pts.h.tolist(), "psi": pts.psi.tolist(),
                "lam": pts.lam.tolist(), "sigma_hat": pts.sigma_hat,
            },
            "params": self.params,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {d.get('schema_version')!r}")
        fit = d.get("ar_fit")
        if fit is not None:
            fit = ArFit(fit["p"], np.array(fit["a"]), fit["nu2"], fit["sigma2"], fit["q"],
                        fit["r_bar"], None if fit["pilot"] is None else np.array(fit["pilot"]))
        p = d.get("points")
        if p is not None:
            p = PointStatistics(np.array(p["u"]), np.array(p["h"]), np.array(p["psi"]),
                                np.array(p["lam"]), p["sigma_hat"])
        sets = {k: IntervalSet(k, tuple(Interval.from_dict(x) for x in d["sets"][k])) for k in KINDS}
        minimal = {k: [Interval.from_dict(x) for x in d["minimal"][k]] for k in KINDS}
        return cls(d["Psi"], d["critical_value"], d["alpha"], d["reject"], sets, minimal,
                   d["sigma_hat2"], fit, p, d.get("params", {}))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def point_rows(self):
        """Plot-ready rows ``(u, h, corrected, in_both, in_increase, in_decrease)``."""
        pts = self.points
        T = self.params["T"]
        member = {k: {(iv.lo, iv.hi) for iv in self.sets[k]} for k in KINDS}
        rows = []
        for u, h, stat in zip(pts.u, pts.h, pts.corrected_abs):
            iv = Interval.from_point(u, h, stat, T)
            key = (iv.lo, iv.hi)
            rows.append((float(u), float(h), float(stat),
                         *(int(key in member[k]) for k in KINDS)))
        return rows

    def summary(self, start_year=None):
        lines = [
            f"Psi = {self.Psi:.6f}",
            f"critical value q(alpha={self.alpha:g}) = {self.critical_value:.6f}",
            f"reject H0: {'yes' if self.reject else 'no'}",
            f"long-run variance sigma^2 = {self.sigma_hat2:.6f}",
        ]
        if self.ar_fit is not None:
            coef = ", ".join(f"{x:.4f}" for x in self.ar_fit.a)
            lines.append(f"AR({self.ar_fit.p}) coefficients = ({coef}), nu^2 = {self.ar_fit.nu2:.6f}")
        T = self.params.get("T")
        for kind in KINDS:
            mins = self.minimal[kind]
            lines.append(f"{kind}: {len(self.sets[kind])} intervals, {len(mins)} minimal")
            labels = map_intervals_to_calendar(mins, start_year, T) if start_year is not None else None
            for j, iv in enumerate(mins):
                txt = f"  [{float(iv.lo):.4f}, {float(iv.hi):.4f}] stat={iv.stat:.4f}"
                if labels is not None:
                    lab = labels[j]
                    txt += "  years " + ("(empty)" if lab is None else f"[{lab[0]}, {lab[1]}]")
                lines.append(txt)
        return "\n".join(lines)


def run_test(
    Y,
    alpha=0.05,
    grid=None,
    lrv_method=None,
    qcfg=None,
    *,
    kernel=EPANECHNIKOV,
    table=None,
    critical=None,
    workers=None,
    backend=None,
):
    """Run the multiscale test on ``Y``.

    ``table`` and ``critical`` may be passed in to share the weight table and
    simulated critical values across many series of the same length.
    """
    Y = np.asarray(Y, dtype=float)
    T = Y.size
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if lrv_method is None:
        lrv_method = ArLrv()
    if qcfg is None:
        qcfg = QuantileConfig(alpha_list=(alpha,))
    if table is None:
        grid = default_grid(T) if grid is None else grid
        table = build_weight_table(T, grid, kernel)
    if critical is None:
        critical = simulate_critical_values(table, qcfg, workers=workers, backend=backend)
    sigma2, fit, selection = estimate_lrv(Y, lrv_method)
    if not (sigma2 > 0 and math.isfinite(sigma2)):
        raise NonPositiveSigma(f"estimated long-run variance {sigma2} is not positive")
    q = critical.quantile(alpha)
    points, Psi = multiscale_statistic(Y, table, math.sqrt(sigma2), backend=backend)
    # signed exceedances at one point are mutually exclusive iff q + lambda(h) > 0
    overlap = bool(np.any(q + points.lam <= 0))
    if overlap:
        log.warning("q + lambda(h) <= 0 at some bandwidth; increase/decrease sets may overlap")
    sets = rejection_sets(points, q, T)
    minimal = {k: minimal_intervals(sets[k]) for k in KINDS}
    params = {
        "T": T,
        "grid": grid.describe() if grid is not None else {"kind": "table", "n_points": len(table)},
        "dropped_points": len(table.dropped),
        "kernel": table.kernel.name,
        "lrv": lrv_method.describe(),
        "order_selection": None if selection is None else {
            "scores": {str(k): v for k, v in selection["scores"].items()},
            "skipped": {str(k): v for k, v in selection["skipped"].items()},
        },
        "n_sims": qcfg.n_sims,
        "seed": qcfg.seed,
        "backend": backend or _accel.backend_name(),
        "sign_overlap_possible": overlap,
    }
    return TestOutcome(Psi, q, float(alpha), bool(Psi > q), sets, minimal, sigma2, fit, points, params)


def interval_union(intervals):
    """Merge closed intervals into a sorted list of disjoint ``(lo, hi)`` pairs."""
    spans = sorted((iv.lo, iv.hi) for iv in intervals)
    merged = []
    for lo, hi in spans:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged
