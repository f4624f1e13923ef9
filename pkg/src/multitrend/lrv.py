"""Difference-based long-run variance estimation.

Two routes are provided.  ``hac_estimate`` builds autocovariance estimates
from squared differences of several orders and smooths them with a lag
window.  The AR(p) route (``averaged_ar_fit``) works on the autocovariances
of q-th differences, which behave like an ARMA(p, q) process whose MA part is
negligible for large q:

1. pilot fit: Yule-Walker on differences of a large order q;
2. MA(inf) coefficients and innovation variance of the pilot;
3. corrected Yule-Walker fits on differences of orders r = 1..r_bar;
4. average of the corrected fits, then ``sigma^2 = nu^2 / (1 - sum a)^2``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import ConfigError, ExplosiveFit, InsufficientData, SingularSystem

log = logging.getLogger(__name__)

MAX_ORDER = 20
EXPLOSIVE_TOL = 1e-8


def _series(Y):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 1:
        raise ValueError("series must be one-dimensional")
    return Y


def _check_order(p):
    if not 1 <= int(p) <= MAX_ORDER:
        raise ConfigError(f"AR order must be in 1..{MAX_ORDER}, got {p}")
    return int(p)


@dataclass(frozen=True)
class DifferenceCovariances:
    """``gamma[l]`` for lags ``0..max_lag`` of the ``q``-th differenced series."""

    T: int
    q: int
    gamma: np.ndarray

    def at(self, lag):
        return float(self.gamma[abs(int(lag))])

    def matrix(self, p):
        """``p x p`` Toeplitz matrix ``(gamma(i - j))``."""
        return toeplitz(self.gamma[:p])


def diff_autocovariances(Y, q, max_lag):
    """Sample autocovariances of ``Y_t - Y_{t-q}``, normalized by ``T - q``.

    The normalization ignores the lag, so longer lags sum fewer products
    over the same divisor.
    """
    Y = _series(Y)
    T = Y.size
    q, max_lag = int(q), int(max_lag)
    if q < 1 or max_lag < 0:
        raise ConfigError("difference order must be >= 1 and max_lag >= 0")
    if q + max_lag + 1 > T:
        raise InsufficientData(f"need T >= q + max_lag + 1 = {q + max_lag + 1}, got {T}")
    d = Y[q:] - Y[:-q]
    n = d.size
    gamma = np.array([d[lag:] @ d[:n - lag] for lag in range(max_lag + 1)]) / (T - q)
    return DifferenceCovariances(T, q, gamma)


def _solve(mat, rhs, what):
    if not np.all(np.isfinite(mat)) or mat[0, 0] <= 0:
        raise SingularSystem(f"{what}: zero variance of differenced series")
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"{what}: {exc}") from None
    if not np.all(np.isfinite(sol)):
        raise SingularSystem(f"{what}: non-finite solution")
    return sol


def pilot_ar(Y, p, q):
    """Yule-Walker coefficients from autocovariances of ``q``-th differences."""
    p = _check_order(p)
    if q <= p:
        raise ConfigError(f"pilot difference order q={q} must exceed p={p}")
    cov = diff_autocovariances(Y, q, p)
    return _solve(cov.matrix(p), cov.gamma[1:p + 1], f"pilot AR({p}) with q={q}")


def ma_coefficients(a, k_max):
    """``c_0..c_{k_max}`` of the MA(inf) form: ``c_0 = 1``, ``c_k = sum_j a_j c_{k-j}``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    k_max = int(k_max)
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    c = np.zeros(k_max + 1)
    c[0] = 1.0
    for k in range(1, k_max + 1):
        m = min(a.size, k)
        c[k] = a[:m] @ c[k - 1::-1][:m]
    return c


def innovation_variance(Y, a):
    """``(2T)^-1 sum r_t^2`` with ``r_t = dY_t - sum_j a_j dY_{t-j}`` on first differences.

    Residuals are formed wherever all lagged first differences exist; the
    factor 2 undoes the doubling of the innovation variance by differencing.
    """
    Y = _series(Y)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    p, T = a.size, Y.size
    if T <= 2 * p + 1:
        raise InsufficientData(f"need T > 2p + 1 = {2 * p + 1}, got {T}")
    d = np.diff(Y)
    r = d[p:].copy()
    for j in range(1, p + 1):
        r -= a[j - 1] * d[p - j:d.size - j]
    return float(r @ r / (2.0 * T))


def refined_ar(Y, p, pilot, nu2_tilde, r):
    """Corrected Yule-Walker fit on ``r``-th differences.

    Solves ``Gamma_r a = gamma_r + nu2 * (c_{r-1}, ..., c_{r-p})`` where the
    MA coefficients come from ``pilot`` and ``c_k = 0`` for ``k < 0``.
    """
    p = _check_order(p)
    r = int(r)
    if r < 1:
        raise ConfigError("refinement order r must be >= 1")
    c = ma_coefficients(pilot, max(r - 1, 0))
    idx = r - np.arange(1, p + 1)
    cvec = np.where(idx >= 0, c[np.clip(idx, 0, None)], 0.0)
    cov = diff_autocovariances(Y, r, p)
    return _solve(cov.matrix(p), cov.gamma[1:p + 1] + nu2_tilde * cvec, f"refined AR({p}) with r={r}")


def lrv_from_ar(a, nu2):
    """``nu2 / (1 - sum a)^2``; raises :class:`ExplosiveFit` near a unit root."""
    s = 1.0 - float(np.sum(a))
    if abs(s) < EXPLOSIVE_TOL:
        raise ExplosiveFit(f"1 - sum(a) = {s:.3g}; long-run variance undefined")
    return float(nu2) / (s * s)


@dataclass(frozen=True)
class ArFit:
    p: int
    a: np.ndarray
    nu2: float
    sigma2: float
    q: int
    r_bar: int
    pilot: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "p": self.p,
            "a": [float(x) for x in self.a],
            "nu2": self.nu2,
            "sigma2": self.sigma2,
            "q": self.q,
            "r_bar": self.r_bar,
            "pilot": None if self.pilot is None else [float(x) for x in self.pilot],
        }


def averaged_ar_fit(Y, p, q=25, r_bar=10):
    """AR(p) coefficients averaged over refinement orders ``1..r_bar``, and the
    implied long-run variance."""
    Y = _series(Y)
    p = _check_order(p)
    if int(r_bar) < 1:
        raise ConfigError("r_bar must be >= 1")
    pilot = pilot_ar(Y, p, q)
    nu2_tilde = innovation_variance(Y, pilot)
    fits = [refined_ar(Y, p, pilot, nu2_tilde, r) for r in range(1, int(r_bar) + 1)]
    a = np.mean(fits, axis=0)
    nu2 = innovation_variance(Y, a)
    sigma2 = lrv_from_ar(a, nu2)
    return ArFit(p, a, nu2, sigma2, int(q), int(r_bar), pilot)


def bartlett(x):
    x = np.abs(np.asarray(x, dtype=float))
    return np.where(x <= 1.0, 1.0 - x, 0.0)


def parzen(x):
    x = np.abs(np.asarray(x, dtype=float))
    inner = 1.0 - 6.0 * x**2 + 6.0 * x**3
    outer = 2.0 * (1.0 - x) ** 3
    return np.where(x <= 0.5, inner, np.where(x <= 1.0, outer, 0.0))


LAG_WINDOWS = {"bartlett": bartlett, "parzen": parzen}


@dataclass(frozen=True)
class HacConfig:
    q: int
    b: int
    window: str = "bartlett"

    def __post_init__(self):
        if self.window not in LAG_WINDOWS:
            raise ConfigError(f"unknown lag window {self.window!r}")
        if not 1 <= int(self.b) < int(self.q):
            raise ConfigError(f"need 1 <= b < q, got b={self.b}, q={self.q}")


def hac_estimate(Y, cfg):
    """Lag-window estimate built from difference-based autocovariances."""
    Y = _series(Y)
    T = Y.size
    q, b = int(cfg.q), int(cfg.b)
    if not q < T / 2:
        raise ConfigError(f"need q < T/2, got q={q}, T={T}")
    if q + b + 1 > T:
        raise InsufficientData(f"need T >= q + b + 1 = {q + b + 1}, got {T}")

    def half_msd(k):
        d = Y[k:] - Y[:-k]
        return d @ d / (2.0 * (T - k))

    g0 = half_msd(q)
    w = LAG_WINDOWS[cfg.window]
    total = g0
    for lag in range(1, b + 1):
        total += 2.0 * float(w(lag / b)) * (g0 - half_msd(lag))
    return float(total)


@dataclass(frozen=True)
class OracleFit:
    a: float
    nu2: float
    sigma2: float
    near_unit_root: bool


def oracle_ar1(errors):
    """AR(1) fit to directly observed errors by conditional least squares."""
    e = _series(errors)
    T = e.size
    if T < 3:
        raise InsufficientData("oracle fit needs at least 3 observations")
    denom = e[:-1] @ e[:-1]
    if denom <= 0:
        raise SingularSystem("oracle fit: zero error series")
    a = float(e[1:] @ e[:-1] / denom)
    resid = e[1:] - a * e[:-1]
    nu2 = float(resid @ resid / (T - 1))
    flag = abs(a) > 0.99
    if flag:
        log.warning("oracle AR(1) estimate %.4f is at the unit-root boundary", a)
    return OracleFit(a, nu2, lrv_from_ar([a], nu2), flag)


@dataclass(frozen=True)
class OrderSelection:
    p: int
    scores: dict
    fits: dict = field(repr=False)
    skipped: dict = field(default_factory=dict)


def bic_order_select(Y, p_max, q=25, r_bar=10):
    """Order minimizing ``T log(nu2_p) + p log T``; ties go to the smaller order.

    Orders whose fit fails are skipped and listed in ``skipped``.
    """
    Y = _series(Y)
    T = Y.size
    p_max = _check_order(p_max)
    scores, fits, skipped = {}, {}, {}
    for p in range(1, p_max + 1):
        try:
            fit = averaged_ar_fit(Y, p, q, r_bar)
        except (SingularSystem, ExplosiveFit, InsufficientData, ConfigError) as exc:
            skipped[p] = f"{type(exc).__name__}: {exc}"
            log.info("order %d skipped: %s", p, exc)
            continue
        if not fit.nu2 > 0:
            skipped[p] = "non-positive innovation variance"
            continue
        fits[p] = fit
        scores[p] = T * math.log(fit.nu2) + p * math.log(T)
    if not scores:
        raise SingularSystem(f"no AR order in 1..{p_max} could be fitted: {skipped}")
    best = min(scores, key=lambda k: (scores[k], k))
    return OrderSelection(best, scores, fits, skipped)
