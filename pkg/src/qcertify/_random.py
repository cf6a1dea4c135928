"""Seed handling.

Every random quantity is drawn from a Philox (counter-based) generator keyed
by an explicit integer seed. Sub-streams for trials or copies are keyed by
mixing the parent seed with an index through ``numpy.random.SeedSequence``,
so a trial's draws depend only on ``(seed, index)`` and not on execution
order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *keys: int) -> int:
    """Mix ``seed`` with integer ``keys`` into a new 64-bit seed."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, *[int(k) & _MASK64 for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator for the stream ``(seed, *keys)``."""
    return np.random.Generator(np.random.Philox(derive_seed(seed, *keys)))
