"""Counter-based random streams keyed by (master seed, *counters).

Every random draw in the package comes from a Philox generator whose key is
derived from a master seed plus a tuple of integer counters (trial index,
stream role, ...). A given key always produces the same stream, regardless of
which process or in which order trials are evaluated.
"""

from __future__ import annotations

import numpy as np

# stream roles
ROLE_NOISE = 0
ROLE_H0 = 1
ROLE_H1 = 2
ROLE_PARAMS = 3
ROLE_SYMBOLS = 4
ROLE_CELL = 5


def _seed_sequence(seed: int, key: tuple[int, ...]) -> np.random.SeedSequence:
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError(f"seeds and stream counters must be non-negative, got {seed}, {key}")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return an independent Philox generator for ``(seed, *key)``."""
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, key)))


def derive_seed(seed: int, *key: int) -> int:
    """Derive a 63-bit integer seed for the child stream ``(seed, *key)``."""
    word = _seed_sequence(seed, key).generate_state(1, dtype=np.uint64)[0]
    return int(word >> np.uint64(1))
