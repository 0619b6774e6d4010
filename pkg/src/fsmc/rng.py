"""Seedable, splittable random streams.

Every Monte-Carlo entry point takes a single 64-bit seed.  Independent
substreams are derived counter-style: stream(seed, k) keys a Philox
generator with the pair (seed, k), so trial k's randomness depends only on
(seed, k) and never on how trials are batched or scheduled.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# reserved substream ids (trial substreams use 0, 1, 2, ...)
CODEBOOK_STREAM = _MASK64
AUX_STREAM = _MASK64 - 1


def stream(seed: int, substream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, substream)."""
    key = np.array([seed & _MASK64, substream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def trial_streams(seed: int, n_trials: int) -> list[np.random.Generator]:
    return [stream(seed, k) for k in range(n_trials)]
