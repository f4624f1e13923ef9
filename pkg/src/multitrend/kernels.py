"""Kernel functions and normalized local linear weights.

The weight vector for a location ``u`` and bandwidth ``h`` is

    w_t = L_t / sqrt(sum_s L_s**2),
    L_t = K(v_t) * (S0 * v_t - S1),   v_t = (t/T - u) / h,

where ``S_l = (T h)^-1 sum_t K(v_t) v_t**l``.  The kernel average
``sum_t w_t Y_t`` is a rescaled local linear estimate of the trend slope at
``u``; the weights sum to zero and have unit Euclidean norm.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import _accel
from .errors import DegenerateWindow, EmptyTable

# Products u*T and h*T within this distance of an integer are snapped to it,
# so grid windows built from ratios like 5k/T have exact integer endpoints.
_SNAP_TOL = 1e-9


def epanechnikov(v):
    """Epanechnikov kernel ``0.75 (1 - v^2)`` on ``[-1, 1]``, zero outside.

    Accepts scalars or arrays; NaN inputs propagate.
    """
    v = np.asarray(v, dtype=float)
    out = np.where(np.abs(v) <= 1.0, 0.75 * (1.0 - v * v), 0.0)
    out = np.where(np.isnan(v), np.nan, out)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class KernelSpec:
    """A kernel supported on ``[-1, 1]``.

    ``evaluate`` must be vectorized over numpy arrays.  Non-negativity,
    symmetry, unit mass and Lipschitz continuity are checked by the test
    suite for every registered kernel rather than at construction time.
    """

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, v):
        return self.evaluate(v)


EPANECHNIKOV = KernelSpec("epanechnikov", epanechnikov)

KERNELS = {EPANECHNIKOV.name: EPANECHNIKOV}


def get_kernel(name):
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; available: {sorted(KERNELS)}") from None


def scaled(x, T):
    """Return ``x * T``, snapped to the nearest integer when within 1e-9."""
    y = float(x) * T
    r = round(y)
    return float(r) if abs(y - r) < _SNAP_TOL else y


def moment_sum(T, u, h, ell, kernel=EPANECHNIKOV):
    """``(T h)^-1 sum_{t=1}^T K(v_t) v_t**ell`` with ``v_t = (t/T - u)/h``.

    An empty window gives 0; callers decide whether that is usable.
    """
    if ell not in (0, 1, 2):
        raise ValueError("ell must be 0, 1 or 2")
    uT, hT = scaled(u, T), scaled(h, T)
    v = (np.arange(1, T + 1) - uT) / hT
    return float(np.sum(kernel(v) * v**ell) / hT)


@dataclass(frozen=True)
class WeightVector:
    T: int
    u: float
    h: float
    weights: np.ndarray = field(repr=False)


def _window(T, uT, hT, kernel):
    """Design indices (1-based) with positive kernel weight, and their v."""
    lo = max(1, int(np.ceil(uT - hT)))
    hi = min(T, int(np.floor(uT + hT)))
    if hi < lo:
        return np.empty(0, dtype=np.int64), np.empty(0), np.empty(0)
    t = np.arange(lo, hi + 1)
    v = (t - uT) / hT
    k = kernel(v)
    pos = np.flatnonzero(k > 0)
    if pos.size == 0:
        return t[:0], v[:0], k[:0]
    # trim zero tails only, so the band stays contiguous
    sl = slice(pos[0], pos[-1] + 1)
    return t[sl], v[sl], k[sl]


def _window_weights(T, u, h, kernel):
    uT, hT = scaled(u, T), scaled(h, T)
    t, v, k = _window(T, uT, hT, kernel)
    if np.count_nonzero(k) < 2:
        raise DegenerateWindow(
            f"(u={u}, h={h}) covers {np.count_nonzero(k)} design point(s) with T={T}"
        )
    s0 = np.sum(k) / hT
    s1 = np.sum(k * v) / hT
    lam = k * (s0 * v - s1)
    # the local linear construction makes sum(lam) vanish analytically;
    # remove the rounding residue over the positive-kernel support only
    support = k > 0
    lam[support] -= lam[support].mean()
    norm2 = float(np.sum(lam * lam))
    if not norm2 > 0.0:
        raise DegenerateWindow(f"(u={u}, h={h}) has identically zero weights with T={T}")
    return t, lam / np.sqrt(norm2)


def local_linear_weights(T, u, h, kernel=EPANECHNIKOV):
    """Full length-``T`` normalized local linear weight vector at ``(u, h)``."""
    if not 0.0 < h < 0.5:
        raise DegenerateWindow(f"bandwidth {h} outside (0, 1/2)")
    t, w = _window_weights(T, u, h, kernel)
    full = np.zeros(T)
    full[t - 1] = w
    return WeightVector(T, float(u), float(h), full)


class WeightTable:
    """Precomputed weights for every usable point of a location-scale grid.

    Immutable after construction.  ``dropped`` lists ``(u, h, reason)`` for
    grid points that raised :class:`DegenerateWindow`.
    """

    def __init__(self, T, u, h, starts, lengths, values, kernel, point_index, dropped):
        self.T = int(T)
        self.u = np.asarray(u, dtype=float)
        self.h = np.asarray(h, dtype=float)
        self.starts = np.asarray(starts, dtype=np.int64)
        self.lengths = np.asarray(lengths, dtype=np.int64)
        self.offsets = np.concatenate(([0], np.cumsum(self.lengths)[:-1])).astype(np.int64)
        self.values = np.asarray(values, dtype=float)
        self.kernel = kernel
        self.point_index = np.asarray(point_index, dtype=np.int64)
        self.dropped = list(dropped)
        for arr in (self.u, self.h, self.starts, self.lengths, self.offsets, self.values):
            arr.setflags(write=False)

    def __len__(self):
        return self.u.shape[0]

    def __repr__(self):
        return f"WeightTable(T={self.T}, points={len(self)}, dropped={len(self.dropped)})"

    @cached_property
    def lam(self):
        from .multiscale import lambda_correction

        out = lambda_correction(self.h)
        out.setflags(write=False)
        return out

    @cached_property
    def csr(self):
        return _accel.as_csr(self.starts, self.lengths, self.offsets, self.values, self.T)

    def vector(self, i):
        """Weights of point ``i`` as a full-length :class:`WeightVector`."""
        full = np.zeros(self.T)
        s, o, m = self.starts[i], self.offsets[i], self.lengths[i]
        full[s:s + m] = self.values[o:o + m]
        return WeightVector(self.T, float(self.u[i]), float(self.h[i]), full)

    def apply(self, y, backend=None):
        """Kernel averages ``sum_t w_t y_t`` for every point."""
        y = np.ascontiguousarray(y, dtype=float)
        if _use_numba(backend):
            return _accel.banded_apply_numba(self.starts, self.lengths, self.offsets, self.values, y)
        return _accel.banded_apply_numpy(self.csr, y)

    def max_corrected(self, noise, backend=None):
        """Row-wise ``max_i |sum_t w_it z_t| - lambda(h_i)`` for a 2-d ``noise``."""
        noise = np.ascontiguousarray(noise, dtype=float)
        if _use_numba(backend):
            return _accel.banded_max_corrected_numba(
                self.starts, self.lengths, self.offsets, self.values, np.asarray(self.lam), noise
            )
        return _accel.banded_max_corrected_numpy(self.csr, np.asarray(self.lam), noise)

    def subset(self, mask):
        """A new table restricted to the points where ``mask`` is true."""
        mask = np.asarray(mask, dtype=bool)
        idx = np.flatnonzero(mask)
        chunks = [self.values[self.offsets[i]:self.offsets[i] + self.lengths[i]] for i in idx]
        values = np.concatenate(chunks) if chunks else np.empty(0)
        return WeightTable(
            self.T, self.u[idx], self.h[idx], self.starts[idx], self.lengths[idx], values,
            self.kernel, self.point_index[idx], self.dropped,
        )


def _use_numba(backend):
    if backend is None:
        return _accel.USE_NUMBA
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not _accel.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend == "numba"


def build_weight_table(T, grid, kernel=EPANECHNIKOV):
    """Weights for every point of ``grid``; degenerate points are dropped.

    ``grid`` needs array attributes ``u`` and ``h``.  Points are kept in grid
    order.  Raises :class:`EmptyTable` when nothing survives.
    """
    us = np.asarray(grid.u, dtype=float)
    hs = np.asarray(grid.h, dtype=float)
    if us.size == 0:
        raise EmptyTable("grid is empty")
    keep_u, keep_h, starts, lengths, chunks, index, dropped = [], [], [], [], [], [], []
    for i, (u, h) in enumerate(zip(us, hs)):
        try:
            t, w = _window_weights(T, u, h, kernel)
        except DegenerateWindow as exc:
            dropped.append((float(u), float(h), str(exc)))
            continue
        keep_u.append(u)
        keep_h.append(h)
        starts.append(t[0] - 1)
        lengths.append(t.size)
        chunks.append(w)
        index.append(i)
    if not chunks:
        raise EmptyTable(f"all {us.size} grid points are degenerate for T={T}")
    return WeightTable(
        T, keep_u, keep_h, starts, lengths, np.concatenate(chunks), kernel, index, dropped
    )
