"""Compare the numba kernels with the numpy/scipy fallback.

Run from the repository root::

    python3 benchmarks/bench_backends.py [--T 500 1000] [--reps 5]

Each kernel is timed on both backends after a warm-up call (so numba
compilation is excluded) and the outputs are checked to agree.
"""

import argparse
import time

import numpy as np

from multitrend import _accel
from multitrend.kernels import EPANECHNIKOV, build_weight_table
from multitrend.multiscale import default_grid
from multitrend.simulate import NoiseSpec


def best_of(fn, reps):
    fn()  # warm-up
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(T, reps, n_noise):
    table = build_weight_table(T, default_grid(T), EPANECHNIKOV)
    s, l, o, v = table.starts, table.lengths, table.offsets, table.values
    lam = np.asarray(table.lam)
    csr = table.csr
    rng = np.random.default_rng(0)
    y = rng.standard_normal(T)
    noise = rng.standard_normal((n_noise, T))
    gamma = NoiseSpec((0.25,)).autocovariance(T)

    cases = {
        "apply": (lambda: _accel.banded_apply_numba(s, l, o, v, y),
                  lambda: _accel.banded_apply_numpy(csr, y)),
        f"max_corrected[{n_noise}]": (lambda: _accel.banded_max_corrected_numba(s, l, o, v, lam, noise),
                                      lambda: _accel.banded_max_corrected_numpy(csr, lam, noise)),
        "quadform": (lambda: _accel.banded_quadform_numba(s, l, o, v, gamma),
                     lambda: _accel.banded_quadform_numpy(s, l, o, v, gamma)),
    }
    rows = []
    for name, (fast, slow) in cases.items():
        a, b = fast(), slow()
        err = float(np.max(np.abs(a - b)))
        tn, tp = best_of(fast, reps), best_of(slow, reps)
        rows.append((T, len(table), name, tn, tp, tp / tn, err))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, nargs="+", default=[250, 500, 1000])
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--noise-rows", type=int, default=64)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'T':>5} {'points':>7} {'kernel':<20} {'numba s':>10} {'numpy s':>10} {'speedup':>8} {'max diff':>10}")
    for T in args.T:
        for T_, n, name, tn, tp, sp, err in bench(T, args.reps, args.noise_rows):
            print(f"{T_:>5} {n:>7} {name:<20} {tn:>10.5f} {tp:>10.5f} {sp:>8.1f} {err:>10.2e}")


if __name__ == "__main__":
    main()
