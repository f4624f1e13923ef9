"""Monte Carlo critical values from the Gaussian reference statistic.

A draw is ``max_i |sum_t w_it Z_t| - lambda(h_i)`` with i.i.d. standard
normal ``Z``.  The long-run standard deviation would multiply the kernel
average and then be divided out again, so it is fixed to one.
"""

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import rng
from .errors import ConfigError, LengthMismatch
from .parallel import chunk_ranges, map_ordered

# fixed replicate chunking; independent of the worker count
CHUNK = 64


@dataclass(frozen=True)
class QuantileConfig:
    n_sims: int = 1000
    seed: int = 0
    alpha_list: tuple = (0.01, 0.05, 0.1)

    def __post_init__(self):
        if int(self.n_sims) < 100:
            raise ConfigError(f"n_sims must be at least 100, got {self.n_sims}")
        alphas = tuple(sorted(float(a) for a in self.alpha_list))
        if not alphas or any(not 0.0 < a < 1.0 for a in alphas):
            raise ConfigError(f"alpha levels must lie in (0, 1), got {self.alpha_list}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "alpha_list", alphas)
        object.__setattr__(self, "n_sims", int(self.n_sims))
        object.__setattr__(self, "seed", int(self.seed))


def empirical_quantile(draws, alpha):
    """The ``ceil((1 - alpha) n)``-th order statistic (1-based), no interpolation."""
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    x = np.sort(np.asarray(draws, dtype=float))
    # guard against (1 - 0.05) * 1000 = 950.0000000000001
    k = math.ceil(round((1.0 - alpha) * x.size, 9))
    return float(x[min(max(k, 1), x.size) - 1])


@dataclass(frozen=True)
class CriticalValues:
    draws: np.ndarray = field(repr=False)
    quantiles: dict

    def quantile(self, alpha):
        """Critical value at ``alpha``; answered from the stored draws if new."""
        alpha = float(alpha)
        if alpha in self.quantiles:
            return self.quantiles[alpha]
        return empirical_quantile(self.draws, alpha)


def gaussian_statistic_draw(table, noise, backend=None):
    """One reference draw for a length-``T`` standard normal vector."""
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (table.T,):
        raise LengthMismatch(f"noise length {noise.size} != table T {table.T}")
    return float(table.max_corrected(noise[None, :], backend=backend)[0])


def noise_block(seed, replicates, T, stream=rng.CRITICAL_VALUES):
    out = np.empty((len(replicates), T))
    for row, i in enumerate(replicates):
        out[row] = rng.replicate_rng(seed, i, stream).standard_normal(T)
    return out


def _draw_chunk(replicates, table, seed, backend):
    return table.max_corrected(noise_block(seed, replicates, table.T), backend=backend)


def simulate_draws(table, n_sims, seed, workers=None, backend=None):
    fn = partial(_draw_chunk, table=table, seed=seed, backend=backend)
    parts = map_ordered(fn, chunk_ranges(n_sims, CHUNK), workers=workers)
    return np.concatenate(parts)


def simulate_critical_values(table, cfg, workers=None, backend=None):
    """Simulate ``cfg.n_sims`` reference draws and their upper quantiles."""
    draws = simulate_draws(table, cfg.n_sims, cfg.seed, workers=workers, backend=backend)
    draws.setflags(write=False)
    quantiles = {a: empirical_quantile(draws, a) for a in cfg.alpha_list}
    return CriticalValues(draws, quantiles)
