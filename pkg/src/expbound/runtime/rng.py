"""Counter-based random draws.

Draw number ``k`` of trial ``t`` under seed ``s`` is a pure function of
``(s, t, k)``, so a trial replays identically whether it runs alone or in a
vectorized batch, and results do not depend on execution order. The hash
is the SplitMix64 finalizer.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
M1 = 0xBF58476D1CE4E5B9
M2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * M1 & MASK
    z = (z ^ (z >> 27)) * M2 & MASK
    return z ^ (z >> 31)


def stream_key(seed: int, trial: int) -> int:
    return _mix((seed * GOLDEN + trial) & MASK)


def draw(seed: int, trial: int, k: int) -> int:
    """Uniform 64-bit integer."""
    return _mix((stream_key(seed, trial) + (k + 1) * GOLDEN) & MASK)


def _mix_vec(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(M2)
    return z ^ (z >> np.uint64(31))


def stream_keys(seed: int, trials: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        base = np.uint64((seed * GOLDEN) & MASK)
        return _mix_vec(base + trials.astype(np.uint64))


def draws(keys: np.ndarray, ks: np.ndarray) -> np.ndarray:
    """Vectorized :func:`draw` given precomputed stream keys."""
    with np.errstate(over="ignore"):
        return _mix_vec(keys + (ks.astype(np.uint64) + np.uint64(1)) * np.uint64(GOLDEN))


def thresholds(probs) -> list:
    """Cumulative cut points in ``[0, 2^64)`` for a list of probabilities.
    A draw ``u`` selects the first outcome ``i`` with ``u < cut[i]``; the
    last outcome takes the rest."""
    cuts = []
    acc = Fraction(0)
    for p in probs[:-1]:
        acc += Fraction(p)
        cuts.append(min(MASK, (acc.numerator << 64) // acc.denominator))
    return cuts


def pick(u: int, cuts: list) -> int:
    for i, c in enumerate(cuts):
        if u < c:
            return i
    return len(cuts)


def pick_vec(u: np.ndarray, cuts: list) -> np.ndarray:
    if not cuts:
        return np.zeros(len(u), dtype=np.int64)
    return np.searchsorted(np.array(cuts, dtype=np.uint64), u, side="right")
