"""Counter-based random streams keyed by (seed, stream, replicate).

Each replicate gets its own Philox generator whose key is ``(seed, stream)``
and whose counter starts at ``(0, replicate, 0, 0)``.  A replicate's draws
therefore depend only on those three numbers, never on which worker ran it
or in which order.  Normals come from numpy's ziggurat transform of the
Philox output.
"""

import numpy as np

MASK64 = (1 << 64) - 1

# stream tags, one per consumer of randomness
CRITICAL_VALUES = 1
DATA = 2


def replicate_rng(seed, replicate, stream):
    if replicate < 0:
        raise ValueError("replicate index must be non-negative")
    key = np.array([int(seed) & MASK64, int(stream) & MASK64], dtype=np.uint64)
    counter = np.array([0, int(replicate) & MASK64, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))
