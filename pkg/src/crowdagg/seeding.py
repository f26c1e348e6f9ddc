"""Counter-style seed derivation.

Work units (trees, labels, leave-one-out folds, cases) get seeds derived from
the master seed and their position, never from a shared sequential stream, so
results do not depend on how the units are scheduled.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _word(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) % 2**64
    digest = hashlib.sha256(str(part).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(*parts) -> int:
    """63-bit seed from an ordered tuple of ints / strings."""
    words = []
    for p in parts:
        w = _word(p)
        words.extend([w & 0xFFFFFFFF, w >> 32])
    state = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1] & 0x7FFFFFFF) << 32)


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
