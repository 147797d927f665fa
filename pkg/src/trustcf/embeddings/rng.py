"""Counter-seeded RNG primitives for numba kernels.

Streams are derived per work unit (walk slot, epoch) with splitmix64 so
parallel execution cannot change what any unit draws. Draws come from
xorshift64*, which is plenty for sampling and has a one-word state.
"""

from __future__ import annotations

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STAR = np.uint64(0x2545F4914F6CDD1D)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S12 = np.uint64(12)
_S25 = np.uint64(25)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_S11 = np.uint64(11)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z + GOLDEN) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _next_u64(state):
    state ^= state >> _S12
    state ^= state << _S25
    state ^= state >> _S27
    return state, state * _STAR


@njit(cache=True, inline="always")
def _uniform01(x):
    return np.float64(x >> _S11) * _INV53


@njit(cache=True, inline="always")
def _alias_draw(state, prob, alias):
    state, x = _next_u64(state)
    k = np.int64(x % np.uint64(prob.shape[0]))
    state, y = _next_u64(state)
    if _uniform01(y) < prob[k]:
        return state, k
    return state, alias[k]


def build_alias(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table for O(1) draws from a finite distribution."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-D array")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ValueError("weights must not sum to zero")
    n = w.size
    scaled = w * (n / total)
    prob = np.zeros(n, dtype=np.float64)
    alias = np.zeros(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] + scaled[s] - 1.0
        (small if scaled[l] < 1.0 else large).append(l)
    for i in large:
        prob[i] = 1.0
    for i in small:
        prob[i] = 1.0  # numerical leftovers
    return prob, alias
