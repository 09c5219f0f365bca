"""Compiled inner loops. Callers own validation; these assume sane inputs."""

from __future__ import annotations

import numpy as np
from numba import njit

FNV_OFFSET = np.uint64(0xCBF29CE484222325)
FNV_PRIME = np.uint64(0x100000001B3)

# extension state slots
S_COPY, S_POS, S_VALUE, S_ACC, S_SCHED, S_TARGET, S_CLOSURES = range(7)


@njit(cache=True)
def extend_block(gaps, q, state, out, audit, use_audit):
    """Advance the closure pass over ``q`` copies of ``gaps`` until ``out`` fills.

    The main cursor walks the candidates in concatenated copies; the schedule
    cursor walks the input cycle once, stepping the next closure target by
    ``q * gap``. A candidate equal to the target is closed: its gap is merged
    into the following one instead of being emitted.
    """
    phi = gaps.shape[0]
    copy = state[S_COPY]
    pos = state[S_POS]
    value = state[S_VALUE]
    acc = state[S_ACC]
    sched = state[S_SCHED]
    target = state[S_TARGET]
    closures = state[S_CLOSURES]
    n = 0
    cap = out.shape[0]
    while copy < q and n < cap:
        g = np.int64(gaps[pos])
        value += g
        acc += g
        pos += 1
        if pos == phi:
            pos = 0
            copy += 1
        if value == target:
            closures += 1
            if use_audit:
                audit[pos] += 1
            target += q * np.int64(gaps[sched])
            sched += 1
            if sched == phi:
                sched = 0
        else:
            out[n] = acc
            n += 1
            acc = 0
    state[S_COPY] = copy
    state[S_POS] = pos
    state[S_VALUE] = value
    state[S_ACC] = acc
    state[S_SCHED] = sched
    state[S_TARGET] = target
    state[S_CLOSURES] = closures
    return n


@njit(cache=True)
def window_counts(ext, n_starts, lmax, g_max, counts):
    """Add to ``counts[sum, length]`` every window starting in ``ext[:n_starts]``.

    ``ext`` must hold at least ``n_starts + lmax - 1`` gaps, or windows are cut
    short at its end.
    """
    size = ext.shape[0]
    for s in range(n_starts):
        total = 0
        stop = min(lmax, size - s)
        for length in range(1, stop + 1):
            total += np.int64(ext[s + length - 1])
            if total > g_max:
                break
            counts[total, length] += 1


@njit(cache=True)
def fnv1a64(data, h):
    for i in range(data.shape[0]):
        h = (h ^ np.uint64(data[i])) * FNV_PRIME
    return h
