"""Jitted inner loops for the heavy Monte-Carlo paths.

These kernels replay exactly the same counter-based streams and alias
decode as :class:`quadwalk.simulate.WalkSampler` (a test pins the two
implementations to bit-identical trajectories); they exist purely to push
the per-step cost down to machine-code levels.  Trials are independent and
write disjoint outputs, so ``prange`` parallelism cannot change results.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK32 = np.uint64(0xFFFFFFFF)


@njit(cache=True, inline="always")
def _mix64(x):
    z = (x ^ (x >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _stream_init(master_seed, index):
    return _mix64(master_seed + (index + np.uint64(1)) * _GAMMA)


@njit(cache=True, inline="always")
def _law_id(x, y, R, law_table):
    xc = x if x < R else R
    yc = y if y < R else R
    return law_table[xc * (R + 1) + yc]


@njit(cache=True, inline="always")
def _decode(u, lid, k_pad, shift, thr, alias, dxs, dys):
    slot = np.int64(u >> shift)
    idx = lid * k_pad + slot
    if (u & _MASK32) >= thr[idx]:
        idx = alias[idx]
    return dxs[idx], dys[idx]


@njit(cache=True, parallel=True)
def passage_times(
    start_x, start_y, r2, horizon, master_seed, lo, hi,
    R, k_pad, shift, thr, alias, dxs, dys, law_table, tau,
):
    """Fill tau[i - lo] with the first hitting time of the ball for trials
    lo..hi-1 (horizon + 1 when censored)."""
    seed = np.uint64(master_seed)
    for i in prange(lo, hi):
        s0 = _stream_init(seed, np.uint64(i))
        x = start_x
        y = start_y
        out = np.int64(horizon + 1)
        for n in range(1, horizon + 1):
            u = _mix64(s0 + np.uint64(n) * _GAMMA)
            lid = _law_id(x, y, R, law_table)
            dx, dy = _decode(u, lid, k_pad, shift, thr, alias, dxs, dys)
            x += dx
            y += dy
            if x * x + y * y <= r2:
                out = np.int64(n)
                break
        tau[i - lo] = out


@njit(cache=True, parallel=True)
def stabilization_sums(
    start_x, start_y, n_steps, side, seed, samples,
    R, k_pad, shift, thr, alias, dxs, dys, law_table, out,
):
    """Per-sample displacement and boundary-occupation sums.

    out[i] = (dx_total, dy_total, occupation of the probed boundary region
    over steps 0..n-1).
    """
    seed_u = np.uint64(seed)
    for i in prange(samples):
        s0 = _stream_init(seed_u, np.uint64(i))
        x = start_x
        y = start_y
        occ = np.int64(0)
        for t in range(n_steps):
            if side == 1:
                if x >= R and y < R:
                    occ += 1
            else:
                if x < R and y >= R:
                    occ += 1
            u = _mix64(s0 + np.uint64(t + 1) * _GAMMA)
            lid = _law_id(x, y, R, law_table)
            dx, dy = _decode(u, lid, k_pad, shift, thr, alias, dxs, dys)
            x += dx
            y += dy
        out[i, 0] = x - start_x
        out[i, 1] = y - start_y
        out[i, 2] = occ


@njit(cache=True, parallel=True)
def excursion_maxima(
    start_x, start_y, r2, horizon, seed, trials,
    R, k_pad, shift, thr, alias, dxs, dys, law_table, max_sq, censored,
):
    """Squared excursion maxima before return to the ball (or horizon)."""
    seed_u = np.uint64(seed)
    for i in prange(trials):
        s0 = _stream_init(seed_u, np.uint64(i))
        x = start_x
        y = start_y
        best = x * x + y * y
        cens = np.int64(1)
        for n in range(1, horizon + 1):
            u = _mix64(s0 + np.uint64(n) * _GAMMA)
            lid = _law_id(x, y, R, law_table)
            dx, dy = _decode(u, lid, k_pad, shift, thr, alias, dxs, dys)
            x += dx
            y += dy
            sq = x * x + y * y
            if sq > best:
                best = sq
            if sq <= r2:
                cens = np.int64(0)
                break
        max_sq[i] = best
        censored[i] = cens


@njit(cache=True, parallel=True)
def endpoint_positions(
    start_x, start_y, n_steps, seed, samples,
    R, k_pad, shift, thr, alias, dxs, dys, law_table, out,
):
    """Positions after n steps for `samples` independent trials."""
    seed_u = np.uint64(seed)
    for i in prange(samples):
        s0 = _stream_init(seed_u, np.uint64(i))
        x = start_x
        y = start_y
        for t in range(n_steps):
            u = _mix64(s0 + np.uint64(t + 1) * _GAMMA)
            lid = _law_id(x, y, R, law_table)
            dx, dy = _decode(u, lid, k_pad, shift, thr, alias, dxs, dys)
            x += dx
            y += dy
        out[i, 0] = x
        out[i, 1] = y
