"""Counter-based per-trial random streams.

Every Monte-Carlo trial owns a SplitMix64 stream keyed by
``(master_seed, trial_index)``: draw ``t`` of trial ``i`` is
``mix64(init(master_seed, i) + (t + 1) * GAMMA)``.  Draws are pure functions
of (seed, trial, step), which makes results independent of worker
scheduling and lets vectorized code advance many streams in lock step or
jump a single stream ahead by any number of steps.
"""

from __future__ import annotations

import numpy as np

_GAMMA_INT = 0x9E3779B97F4A7C15
_MASK = 0xFFFFFFFFFFFFFFFF
GAMMA = np.uint64(_GAMMA_INT)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
U32_MASK = np.uint64(0xFFFFFFFF)


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 output function (finalizer) applied elementwise."""
    z = (x ^ (x >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def stream_init(master_seed: int, indices) -> np.ndarray:
    """Initial stream states for the given trial indices (array or scalar)."""
    base = np.uint64(master_seed & _MASK)
    idx = np.asarray(indices, dtype=np.uint64)
    return mix64(base + (idx + np.uint64(1)) * GAMMA)


def draw_at(state0: np.ndarray, t: int) -> np.ndarray:
    """Draw number ``t`` (0-based) of each stream, all streams in lock step."""
    offset = np.uint64(((t + 1) * _GAMMA_INT) & _MASK)
    return mix64(state0 + offset)


def draw_vec(state0: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Draw with a per-stream counter (streams at different positions)."""
    return mix64(state0 + (counters + np.uint64(1)) * GAMMA)


def draw_block(state0: np.ndarray, t0: int, length: int) -> np.ndarray:
    """Draws ``t0 .. t0+length-1`` of each stream as an ``(n, length)`` array."""
    ts = np.arange(t0 + 1, t0 + 1 + length, dtype=np.uint64) * GAMMA
    return mix64(state0[:, None] + ts[None, :])
