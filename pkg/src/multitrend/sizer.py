"""SiZer for dependent data with a known error autocovariance.

Used as the comparison baseline.  For every grid point with effective sample
size at least 5 a local linear slope estimate is formed together with its
exact standard deviation under the supplied autocovariance; the point is
flagged when the confidence interval ``estimate +- q * sd`` excludes zero.
All quantities except the slope estimate itself depend only on
``(T, grid, autocovariance)`` and are precomputed once in a :class:`SizerPlan`.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import _accel
from .errors import ConfigError, SingularDesign
from .inference import Interval, interval_union, minimal_intervals
from .kernels import EPANECHNIKOV, WeightTable, _use_numba, _window, scaled

log = logging.getLogger(__name__)

MIN_ESS = 5.0


def ar1_autocovariance(a1, nu2, T):
    """``nu2 a1^|k| / (1 - a1^2)`` for ``k = 0..T-1``."""
    if not abs(a1) < 1:
        raise ConfigError(f"AR(1) coefficient must satisfy |a1| < 1, got {a1}")
    return nu2 * a1 ** np.arange(T) / (1.0 - a1 * a1)


def variance_of_mean(gamma, T):
    """Variance of the sample mean of ``T`` observations with autocovariance ``gamma``."""
    gamma = np.asarray(gamma, dtype=float)
    k = np.arange(1, T)
    return float(gamma[0] / T + 2.0 / T * np.sum((1.0 - k / T) * gamma[1:T]))


def effective_sample_size(gamma, T, u, h, kernel=EPANECHNIKOV):
    """``(T*/T) sum_t K_h(t/T - u) / K_h(0)`` with ``T* = gamma(0) / Var(mean)``."""
    k0 = float(kernel(0.0))
    if not k0 > 0:
        raise ConfigError("kernel must be positive at zero")
    t_star = gamma[0] / variance_of_mean(gamma, T)
    v = (np.arange(1, T + 1) - scaled(u, T)) / scaled(h, T)
    return float(t_star / T * np.sum(kernel(v)) / k0)


def _slope_weights(T, u, h, kernel):
    """Window indices and weights ``l`` with slope estimate ``l @ Y[window]``."""
    uT, hT = scaled(u, T), scaled(h, T)
    t, _, k = _window(T, uT, hT, kernel)
    if np.count_nonzero(k) < 2:
        raise SingularDesign(f"(u={u}, h={h}) has fewer than 2 points with positive weight")
    x = (t - uT) / T
    s0, s1, s2 = k.sum(), k @ x, k @ (x * x)
    det = s0 * s2 - s1 * s1
    if not det > 1e-14 * max(s0 * s2, 1e-300):
        raise SingularDesign(f"(u={u}, h={h}) has a singular local design")
    # second row of (X'WX)^-1 X'W
    return t, k * (s0 * x - s1) / det


def ll_derivative_and_sd(Y, u, h, gamma, kernel=EPANECHNIKOV):
    """Local linear slope at ``u`` and its standard deviation under ``gamma``."""
    Y = np.asarray(Y, dtype=float)
    T = Y.size
    t, ell = _slope_weights(T, u, h, kernel)
    n = t.size
    lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    var = ell @ np.asarray(gamma, dtype=float)[lags] @ ell
    return float(ell @ Y[t - 1]), math.sqrt(max(var, 0.0))


def sizer_quantile(alpha, theta, g, h=None):
    """``Phi^-1((1 - alpha/2)^(1/(theta g)))``.

    ``h`` is accepted for interface symmetry; the value does not depend on it.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    if not theta * g > 0:
        raise ConfigError("theta * g must be positive")
    return float(ndtri((1.0 - alpha / 2.0) ** (1.0 / (theta * g))))


@dataclass(frozen=True)
class SizerConfig:
    """Known autocovariance ``gamma[k]`` (``k = 0..T-1``), level, cluster index, grid.

    ``theta`` defaults to 1, i.e. each location counts as its own cluster.
    """

    gamma: np.ndarray = field(repr=False)
    alpha: float
    grid: object
    theta: float = 1.0
    kernel: object = EPANECHNIKOV

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 1 or g.size < self.grid.T:
            raise ConfigError(f"gamma must cover lags 0..T-1 (T={self.grid.T})")
        if not g[0] > 0:
            raise ConfigError("gamma(0) must be positive")
        if not self.theta > 0:
            raise ConfigError("theta must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        object.__setattr__(self, "gamma", g)


class SizerPlan:
    """Everything SiZer needs that does not depend on the observed series."""

    def __init__(self, cfg, backend=None):
        grid, T, kernel = cfg.grid, cfg.grid.T, cfg.kernel
        self.cfg = cfg
        self.T = T
        self.g = int(np.unique(grid.u).size)
        t_star = cfg.gamma[0] / variance_of_mean(cfg.gamma, T)
        k0 = float(kernel(0.0))
        us, hs, starts, lengths, chunks, index, dropped, ess_all = [], [], [], [], [], [], [], []
        for i, (u, h) in enumerate(zip(grid.u, grid.h)):
            v = (np.arange(1, T + 1) - scaled(u, T)) / scaled(h, T)
            ess = float(t_star / T * np.sum(kernel(v)) / k0)
            ess_all.append(ess)
            if ess < MIN_ESS:
                continue
            try:
                t, ell = _slope_weights(T, u, h, kernel)
            except SingularDesign as exc:
                dropped.append((float(u), float(h), str(exc)))
                continue
            us.append(u)
            hs.append(h)
            starts.append(t[0] - 1)
            lengths.append(t.size)
            chunks.append(ell)
            index.append(i)
        if not chunks:
            raise ConfigError("no grid point has effective sample size >= 5")
        self.ess = np.array(ess_all)
        self.table = WeightTable(T, us, hs, starts, lengths, np.concatenate(chunks), kernel,
                                 index, dropped)
        tb = self.table
        if _use_numba(backend):
            var = _accel.banded_quadform_numba(tb.starts, tb.lengths, tb.offsets, tb.values, cfg.gamma)
        else:
            var = _accel.banded_quadform_numpy(tb.starts, tb.lengths, tb.offsets, tb.values, cfg.gamma)
        self.sd = np.sqrt(np.maximum(var, 0.0))
        q = sizer_quantile(cfg.alpha, cfg.theta, self.g)
        self.q = np.full(len(tb), q)

    @property
    def surviving_mask(self):
        """Boolean mask over the full grid of points kept in the plan."""
        mask = np.zeros(len(self.cfg.grid), dtype=bool)
        mask[self.table.point_index] = True
        return mask


@dataclass(frozen=True)
class SizerMap:
    u: np.ndarray
    h: np.ndarray
    estimate: np.ndarray
    sd: np.ndarray
    q: np.ndarray
    flag: np.ndarray

    def rows(self):
        return [
            (float(u), float(h), float(e), float(s), float(q), int(f))
            for u, h, e, s, q, f in zip(self.u, self.h, self.estimate, self.sd, self.q, self.flag)
        ]


@dataclass(frozen=True)
class SizerResult:
    map: SizerMap
    reject: bool
    minimal: list
    region: list


def sizer_test(Y, cfg, plan=None, backend=None):
    """Evaluate the SiZer map of ``Y`` over the effective-sample-size grid."""
    Y = np.asarray(Y, dtype=float)
    if plan is None:
        plan = SizerPlan(cfg, backend=backend)
    if Y.size != plan.T:
        raise ConfigError(f"series length {Y.size} != plan T {plan.T}")
    tb = plan.table
    est = tb.apply(Y, backend=backend)
    flag = np.abs(est) > plan.q * plan.sd
    smap = SizerMap(tb.u, tb.h, est, plan.sd, plan.q, flag)
    flagged = [Interval.from_point(tb.u[i], tb.h[i], est[i], plan.T) for i in np.flatnonzero(flag)]
    minimal = minimal_intervals(flagged)
    return SizerResult(smap, bool(flag.any()), minimal, interval_union(minimal))
