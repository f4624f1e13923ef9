"""Hot numeric kernels with a numba path and a pure numpy/scipy fallback.

The backend is chosen once at import time.  Setting the environment variable
``MULTITREND_DISABLE_NUMBA=1`` (or running without numba installed) selects
the fallback.  Both implementations are always importable under their
explicit names so tests and the benchmark can compare them directly.

Weight tables are stored in a banded CSR-like layout: point ``i`` owns the
design indices ``starts[i] .. starts[i] + lengths[i] - 1`` and its weights
live in ``values[offsets[i]:offsets[i] + lengths[i]]``.
"""

import os

import numpy as np
from scipy import sparse
from scipy.linalg import toeplitz

DISABLE_ENV = "MULTITREND_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _disabled_by_env():
    return os.environ.get(DISABLE_ENV, "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


def _jit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


# ---------------------------------------------------------------- numba path


@_jit
def banded_apply_numba(starts, lengths, offsets, values, y):
    n = starts.shape[0]
    out = np.empty(n)
    for i in range(n):
        s = starts[i]
        o = offsets[i]
        acc = 0.0
        for k in range(lengths[i]):
            acc += values[o + k] * y[s + k]
        out[i] = acc
    return out


@_jit
def _max_corrected_cols(starts, lengths, offsets, values, lam, noise_t):
    # noise_t is (T, n_rep): the innermost loop runs over replicates and
    # vectorizes without reordering any floating-point sum
    n_rep = noise_t.shape[1]
    n = starts.shape[0]
    best = np.full(n_rep, -np.inf)
    acc = np.empty(n_rep)
    for i in range(n):
        s = starts[i]
        o = offsets[i]
        acc[:] = 0.0
        for k in range(lengths[i]):
            w = values[o + k]
            row = noise_t[s + k]
            for r in range(n_rep):
                acc[r] += w * row[r]
        li = lam[i]
        for r in range(n_rep):
            stat = abs(acc[r]) - li
            if stat > best[r]:
                best[r] = stat
    return best


def banded_max_corrected_numba(starts, lengths, offsets, values, lam, noise):
    """Row-wise ``max_i |sum_k w_ik noise[r, s_i + k]| - lam_i``."""
    noise_t = np.ascontiguousarray(np.asarray(noise, dtype=float).T)
    return _max_corrected_cols(starts, lengths, offsets, values, lam, noise_t)


@_jit
def banded_quadform_numba(starts, lengths, offsets, values, gamma):
    # sum_s sum_t v_s v_t gamma(|s - t|) for every point's weight vector
    n = starts.shape[0]
    out = np.empty(n)
    for i in range(n):
        o = offsets[i]
        m = lengths[i]
        acc = 0.0
        for a in range(m):
            va = values[o + a]
            acc += va * va * gamma[0]
            inner = 0.0
            for b in range(a + 1, m):
                inner += values[o + b] * gamma[b - a]
            acc += 2.0 * va * inner
        out[i] = acc
    return out


# ---------------------------------------------------------------- numpy path


def as_csr(starts, lengths, offsets, values, T):
    nnz = int(lengths.sum())
    indptr = np.empty(starts.shape[0] + 1, dtype=np.int64)
    indptr[0] = 0
    np.cumsum(lengths, out=indptr[1:])
    row = np.repeat(np.arange(starts.shape[0]), lengths)
    indices = starts[row] + (np.arange(nnz) - np.repeat(indptr[:-1], lengths))
    return sparse.csr_matrix((values, indices, indptr), shape=(starts.shape[0], T))


def banded_apply_numpy(csr, y):
    return np.asarray(csr @ y, dtype=float)


def banded_max_corrected_numpy(csr, lam, noise):
    sums = csr @ noise.T
    return np.max(np.abs(sums) - lam[:, None], axis=0)


def banded_quadform_numpy(starts, lengths, offsets, values, gamma):
    out = np.empty(starts.shape[0])
    cache = {}
    for i in range(starts.shape[0]):
        m = int(lengths[i])
        if m not in cache:
            cache[m] = toeplitz(gamma[:m])
        v = values[offsets[i]:offsets[i] + m]
        out[i] = v @ cache[m] @ v
    return out
