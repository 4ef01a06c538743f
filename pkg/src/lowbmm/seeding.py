"""Deterministic seed derivation for chains, repetitions and grid points."""
from __future__ import annotations

import numpy as np


def derive_seed(seed: int | None, *keys: int) -> int:
    """A 63-bit integer seed determined by ``seed`` and the integer path ``keys``.

    Distinct key paths give independent streams; ``seed=None`` draws fresh
    OS entropy.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
