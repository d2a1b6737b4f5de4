"""Seeded, splittable random streams.

Every random draw in the package flows from a :class:`numpy.random.Generator`
backed by the counter-based Philox bit generator.  Child streams are derived
from a root seed plus an integer key path, so parallel workers can rebuild
exactly the stream they need without sharing state.
"""

import numpy as np


def make_rng(seed, *keys):
    """Return a Philox generator for ``seed`` and the spawn-key path ``keys``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *keys):
    """Deterministic 63-bit integer seed for a key path (for manifests)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int((int(hi) << 32 | int(lo)) & ((1 << 63) - 1))


def child_seed(rng):
    """Draw an integer seed from an existing generator."""
    return int(rng.integers(0, 2**63 - 1))
