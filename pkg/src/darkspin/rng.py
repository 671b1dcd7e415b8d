"""Counter-based random number streams.

Every stochastic routine in the package draws from a Philox generator
keyed by (seed, stream_id).  Stream ids are stable identifiers (candidate
index, trajectory index, ...), so results are independent of how work is
split across processes.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Generator for one logical stream of the run keyed by `seed`."""
    key = [int(seed) & _MASK64, int(stream_id) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key))
