"""Compiled hot loops (numba).

Everything here is deliberately free of Python objects: the walk kernels
consume flat CSR arrays plus packed alias tables and write endpoint
counts into preallocated matrices.

RNG discipline: one splitmix64 stream per start vertex, keyed by
``mix(seed, vertex)``.  Results therefore never depend on how vertices
are chunked across workers.  Each real step consumes exactly one 64-bit
draw (high 32 bits pick the slot, low 32 bits drive the alias coin); the
number of non-lazy moves in a length-l walk is drawn upfront as a
popcount of l random bits, which realizes the lazy/move coin flips of
the walk exactly.

Alias coins are compared against 32-bit thresholds quantized from the
float64 tables; full buckets are self-aliased so the quantization never
misroutes them.  The residual per-step bias is below 2^-32, orders of
magnitude under anything the statistical tolerances can see.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint32, uint64, int64

from .errors import CapabilityError

__all__ = [
    "build_alias_csr",
    "pack_row_offsets",
    "quantize_thresholds",
    "quantize_branch_probability",
    "sketch_counts",
    "schur_sketch_counts",
]

_DEG_BITS = 24  # j0deg packing: row offset << 24 | row degree


# =============================================================================
# Alias table construction (batch, per CSR row)
# =============================================================================


@njit(cache=True)
def _alias_row(w, prob, alias, small, large):
    """Walker two-stack construction for one row (in-place outputs)."""
    k = w.shape[0]
    total = 0.0
    for i in range(k):
        total += w[i]
    n_small = 0
    n_large = 0
    for i in range(k):
        scaled = w[i] * k / total
        prob[i] = scaled
        alias[i] = i
        if scaled < 1.0:
            small[n_small] = i
            n_small += 1
        else:
            large[n_large] = i
            n_large += 1
    while n_small > 0 and n_large > 0:
        n_small -= 1
        n_large -= 1
        s = small[n_small]
        l = large[n_large]
        alias[s] = l
        prob[l] -= 1.0 - prob[s]
        if prob[l] < 1.0:
            small[n_small] = l
            n_small += 1
        else:
            large[n_large] = l
            n_large += 1
    for i in range(n_small):
        prob[small[i]] = 1.0
        alias[small[i]] = small[i]
    for i in range(n_large):
        prob[large[i]] = 1.0
        alias[large[i]] = large[i]


@njit(cache=True)
def _build_alias_csr_impl(indptr, arc_weights, prob, alias):
    n = indptr.shape[0] - 1
    max_deg = 0
    for u in range(n):
        d = indptr[u + 1] - indptr[u]
        if d > max_deg:
            max_deg = d
    small = np.empty(max_deg, dtype=np.int64)
    large = np.empty(max_deg, dtype=np.int64)
    for u in range(n):
        lo, hi = indptr[u], indptr[u + 1]
        if hi > lo:
            _alias_row(arc_weights[lo:hi], prob[lo:hi], alias[lo:hi], small, large)


def build_alias_csr(indptr: np.ndarray, arc_weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Alias tables for every CSR row at once; ``alias`` is slot-local."""
    prob = np.ones(arc_weights.shape[0], dtype=np.float64)
    alias = np.zeros(arc_weights.shape[0], dtype=np.int32)
    _build_alias_csr_impl(indptr, arc_weights, prob, alias)
    return prob, alias


# =============================================================================
# Table packing for the walk kernels
# =============================================================================


def pack_row_offsets(indptr: np.ndarray) -> np.ndarray:
    """Pack ``(row_offset, row_degree)`` into one int64 per vertex."""
    n = indptr.shape[0] - 1
    degs = np.diff(indptr)
    if degs.max(initial=0) >= (1 << _DEG_BITS):
        raise CapabilityError(f"vertex degree {int(degs.max())} exceeds kernel packing limit")
    if indptr[-1] >= (1 << (63 - _DEG_BITS)):
        raise CapabilityError("arc count exceeds kernel packing limit")
    return (indptr[:n].astype(np.int64) << _DEG_BITS) | degs.astype(np.int64)


def quantize_thresholds(prob: np.ndarray) -> np.ndarray:
    """float64 alias probabilities -> u32 coin thresholds."""
    thr = np.rint(prob * 4294967296.0)
    return np.minimum(thr, 4294967295.0).astype(np.uint32)


def quantize_branch_probability(prob: np.ndarray) -> np.ndarray:
    """float64 branch probabilities -> u64 thresholds in [0, 2^32].

    Stored one bit wider than the 32-bit coin so that probability 1.0 is
    represented exactly (the coin can never reach 2^32).
    """
    thr = np.rint(np.clip(prob, 0.0, 1.0) * 4294967296.0)
    return thr.astype(np.uint64)


# =============================================================================
# Sketch walk kernels
# =============================================================================


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))

_GAMMA = uint64(0x9E3779B97F4A7C15)
_VERTEX_SALT = uint64(0xA0761D6478BD642F)


@njit(cache=True, inline="always")
def _popcount(r):
    r = r - ((r >> uint64(1)) & uint64(0x5555555555555555))
    r = (r & uint64(0x3333333333333333)) + ((r >> uint64(2)) & uint64(0x3333333333333333))
    r = (r + (r >> uint64(4))) & uint64(0x0F0F0F0F0F0F0F0F)
    return int64((r * uint64(0x0101010101010101)) >> uint64(56))


@njit(cache=True, inline="always")
def _draw_moves(state, l):
    """Number of non-lazy moves in a length-l half-lazy walk: popcount
    of l fair random bits.  Returns (state, moves)."""
    k = int64(0)
    rem = l
    while rem > 0:
        take = rem if rem < 64 else 64
        state += _GAMMA
        r = _mix64(state)
        if take < 64:
            r = r & ((uint64(1) << uint64(take)) - uint64(1))
        k += _popcount(r)
        rem -= take
    return state, k


@njit(cache=True)
def sketch_counts(j0deg, nbrs, thr32, alias, uniform, s, t0, seed, u0, u1, out):
    """Endpoint counts of the sketch walk schedule for vertices u0..u1-1.

    For each start vertex u, walk index i in [0, s) and length l in
    [0, t0): simulate an independent length-l lazy walk from u and count
    its endpoint.  ``out[u - u0, v]`` accumulates endpoint hits; every
    row sums to exactly ``s * t0``.
    """
    for u in range(u0, u1):
        state = _mix64(uint64(seed) ^ (_VERTEX_SALT * uint64(u + 1)))
        row = out[u - u0]
        row[u] += s  # all length-0 walks end at the start
        for _i in range(s):
            for l in range(1, t0):
                state, k = _draw_moves(state, l)
                cur = u
                if uniform:
                    for _ in range(k):
                        jd = uint64(j0deg[cur])
                        state += _GAMMA
                        r = _mix64(state)
                        slot = ((r >> uint64(32)) * (jd & uint64(0xFFFFFF))) >> uint64(32)
                        cur = nbrs[int64(jd >> uint64(24)) + int64(slot)]
                else:
                    for _ in range(k):
                        jd = uint64(j0deg[cur])
                        state += _GAMMA
                        r = _mix64(state)
                        slot = int64(((r >> uint64(32)) * (jd & uint64(0xFFFFFF))) >> uint64(32))
                        idx = int64(jd >> uint64(24)) + slot
                        if uint32(r & uint64(0xFFFFFFFF)) >= thr32[idx]:
                            slot = int64(alias[idx])
                        cur = nbrs[int64(jd >> uint64(24)) + slot]
                row[cur] += 1


@njit(cache=True, inline="always")
def _schur_real_step(state, cur, j0deg, nbrs, thr32, alias,
                     pbase64, cthr32, calias, n_kept):
    """One non-lazy move of the implicit eliminated-vertex walk."""
    state += _GAMMA
    r = _mix64(state)
    if (r & uint64(0xFFFFFFFF)) < pbase64[cur]:
        # step inside the retained graph
        jd = uint64(j0deg[cur])
        state += _GAMMA
        r = _mix64(state)
        slot = int64(((r >> uint64(32)) * (jd & uint64(0xFFFFFF))) >> uint64(32))
        idx = int64(jd >> uint64(24)) + slot
        if uint32(r & uint64(0xFFFFFFFF)) >= thr32[idx]:
            slot = int64(alias[idx])
        return state, int64(nbrs[int64(jd >> uint64(24)) + slot])
    # clique step through the eliminated vertex: sample a neighbour of the
    # eliminated vertex proportionally to its slack weights and reject self
    while True:
        state += _GAMMA
        r = _mix64(state)
        slot = int64(((r >> uint64(32)) * uint64(n_kept)) >> uint64(32))
        if uint32(r & uint64(0xFFFFFFFF)) >= cthr32[slot]:
            slot = int64(calias[slot])
        if slot != cur:
            return state, slot


@njit(cache=True)
def schur_sketch_counts(j0deg, nbrs, thr32, alias, pbase64, cthr32, calias,
                        s, t0, seed, u0, u1, out):
    """Endpoint counts like :func:`sketch_counts`, but walking on the
    single-vertex Schur complement without materializing its clique."""
    n_kept = pbase64.shape[0]
    for u in range(u0, u1):
        state = _mix64(uint64(seed) ^ (_VERTEX_SALT * uint64(u + 1)))
        row = out[u - u0]
        row[u] += s
        for _i in range(s):
            for l in range(1, t0):
                state, k = _draw_moves(state, l)
                cur = int64(u)
                for _ in range(k):
                    state, cur = _schur_real_step(
                        state, cur, j0deg, nbrs, thr32, alias,
                        pbase64, cthr32, calias, n_kept)
                row[cur] += 1
