"""Counter-based random streams with per-trial substreams.

Every randomized routine in the package draws from a Philox generator
keyed by ``(seed, trial_index)``.  Philox is counter based, so the
stream of one trial never overlaps another and replaying a single
failed trial needs only its ``(seed, trial_index)`` pair.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, trial_index: int = 0) -> np.random.Generator:
    """Independent generator for one trial, keyed by (seed, trial_index)."""
    key = np.array([seed & _MASK64, trial_index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Uniform draw from the unit sphere in R^dim."""
    while True:
        v = rng.standard_normal(dim)
        nrm = float(np.linalg.norm(v))
        if nrm > 1e-12:
            return v / nrm


def open_uniform(rng: np.random.Generator, low: float, high: float) -> float:
    """Uniform draw guaranteed to land strictly inside (low, high)."""
    while True:
        x = float(rng.uniform(low, high))
        if low < x < high:
            return x
