"""Seeded random streams.

Every stream is a counter-based Philox generator keyed by a ``SeedSequence``
built from the trial seed plus optional extra words (e.g. the dimension of a
chain sweep). A stream therefore depends only on those integers, never on
which worker runs it or in what order.
"""

from __future__ import annotations

import numpy as np

U64_MASK = (1 << 64) - 1


def make_stream(seed: int, *extra: int) -> np.random.Generator:
    words = [int(seed) & U64_MASK, *(int(e) & U64_MASK for e in extra)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def trial_seeds(base_seed: int, trials: int) -> list[int]:
    """seed_i = base_seed + i, wrapped to 64 bits."""
    return [(int(base_seed) + i) & U64_MASK for i in range(trials)]
