"""Location-scale grids and the additively corrected multiscale statistic."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidBandwidth, LengthMismatch, NonPositiveSigma
from .kernels import scaled


@dataclass(frozen=True)
class LocationScaleGrid:
    """Finite set of ``(u, h)`` points with ``u = t/T`` and ``h < 1/2``.

    Points are stored as parallel arrays in a fixed order; every downstream
    result is reported in that order.
    """

    T: int
    u: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    kind: str = "custom"

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if u.shape != h.shape or u.ndim != 1:
            raise ConfigError("grid u and h must be 1-d arrays of equal length")
        if u.size == 0:
            raise ConfigError("grid is empty")
        if np.any(~(h > 0)) or np.any(h >= 0.5):
            raise InvalidBandwidth("grid bandwidths must lie in (0, 1/2)")
        for x in u:
            t = scaled(x, self.T)
            if t != int(t) or not 1 <= t <= self.T:
                raise ConfigError(f"location {x} is not of the form t/T with 1 <= t <= {self.T}")
        u.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "h", h)

    def __len__(self):
        return self.u.shape[0]

    @property
    def h_min(self):
        return float(self.h.min())

    @property
    def h_max(self):
        return float(self.h.max())

    @property
    def locations(self):
        return np.unique(self.u)

    @property
    def bandwidths(self):
        return np.unique(self.h)

    @classmethod
    def from_points(cls, T, points):
        pts = list(points)
        if not pts:
            raise ConfigError("grid is empty")
        u, h = zip(*pts)
        return cls(int(T), np.array(u, dtype=float), np.array(h, dtype=float), kind="custom")

    def describe(self):
        return {
            "kind": self.kind,
            "T": self.T,
            "n_points": len(self),
            "n_locations": int(self.locations.size),
            "n_bandwidths": int(self.bandwidths.size),
            "h_min": self.h_min,
            "h_max": self.h_max,
        }


def default_grid(T):
    """Grid with ``u = 5k/T`` and ``h = (3 + 5l)/T`` (``l <= T/20``), ``h < 1/2``.

    At interior locations the Epanechnikov window of bandwidth ``(3+5l)/T``
    has exactly ``5 + 10 l`` design points with positive weight.
    """
    T = int(T)
    if T < 20:
        raise ConfigError(f"default grid needs T >= 20, got {T}")
    locs = np.arange(1, T // 5 + 1) * 5
    steps = 3 + 5 * np.arange(0, T // 20 + 1)
    steps = steps[steps / T < 0.5]
    # bandwidth-major order: all locations of the smallest h first
    uu = np.tile(locs, steps.size) / T
    hh = np.repeat(steps, locs.size) / T
    return LocationScaleGrid(T, uu, hh, kind="default")


def lambda_correction(h):
    """``sqrt(2 log(1 / (2h)))``; defined for ``0 < h <= 1/2``."""
    arr = np.asarray(h, dtype=float)
    if np.any(~(arr > 0)) or np.any(arr > 0.5):
        raise InvalidBandwidth(f"lambda correction needs 0 < h <= 1/2, got {h}")
    out = np.sqrt(np.maximum(2.0 * np.log(1.0 / (2.0 * arr)), 0.0))
    return float(out) if out.ndim == 0 else out


def psi_hat(Y, w):
    """Kernel average ``sum_t w_t Y_t`` for a single weight vector."""
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (w.T,):
        raise LengthMismatch(f"series length {Y.size} != weight length {w.T}")
    return float(np.dot(w.weights, Y))


@dataclass(frozen=True)
class PointStatistics:
    """Per-point kernel averages and corrected statistics, in table order."""

    u: np.ndarray
    h: np.ndarray
    psi: np.ndarray
    lam: np.ndarray
    sigma_hat: float

    @property
    def corrected_signed_pos(self):
        return self.psi / self.sigma_hat - self.lam

    @property
    def corrected_signed_neg(self):
        return -self.psi / self.sigma_hat - self.lam

    @property
    def corrected_abs(self):
        return np.abs(self.psi) / self.sigma_hat - self.lam


def multiscale_statistic(Y, table, sigma_hat, backend=None):
    """Return ``(PointStatistics, Psi)`` with ``Psi = max |psi/sigma| - lambda(h)``."""
    if not (sigma_hat > 0 and math.isfinite(sigma_hat)):
        raise NonPositiveSigma(f"sigma_hat must be positive and finite, got {sigma_hat}")
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (table.T,):
        raise LengthMismatch(f"series length {Y.size} != table T {table.T}")
    psi = table.apply(Y, backend=backend)
    stats = PointStatistics(table.u, table.h, psi, np.asarray(table.lam), float(sigma_hat))
    return stats, float(np.max(stats.corrected_abs))
