"""Counter-based random streams.

Every replicate gets its own Philox4x64 generator keyed by ``(seed, index)``,
so a replicate's draws do not depend on which thread ran it or in what order.
"""

from __future__ import annotations

import numpy as np

STREAM = "philox4x64-10"
_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int) -> np.random.Generator:
    """Generator for replicate ``index`` under master ``seed``."""
    if index < 0:
        raise ValueError("substream index must be non-negative")
    key = (int(seed) & _MASK64) | ((int(index) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an explicit seed or Generator is required")
    return substream(int(rng), 0)
