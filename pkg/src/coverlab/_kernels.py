"""Compiled inner loops for the jump chain.

Randomness arrives as buffers of raw 64-bit words, each split into two
32-bit draws; a neighbour index is taken by Lemire's multiply-shift with
exact rejection, so the walk is unbiased for any degree.  The kernels keep
their state in a small int64 vector and return whenever they hit a stop
condition or run out of random words, letting the caller refill and resume.
"""

import numpy as np
from numba import njit

# state slots
POS, STEP, UNCOVERED, WORD, HALF = 0, 1, 2, 3, 4
STATE_SIZE = 5

# return codes
BUFFER_EMPTY = 0
REACHED_STOP = 1
REACHED_K = 2
COVERED = 3
HIT_TARGET = 4

_MASK32 = np.uint64(0xFFFFFFFF)
_TWO32 = np.uint64(1) << np.uint64(32)


@njit(cache=True, nogil=True, inline="always")
def _next32(buf, state):
    """Next 32-bit draw, or -1 when the buffer is exhausted."""
    w = state[WORD]
    if w >= buf.shape[0]:
        return np.int64(-1)
    word = buf[w]
    if state[HALF] == 0:
        state[HALF] = 1
        return np.int64(word & _MASK32)
    state[HALF] = 0
    state[WORD] = w + 1
    return np.int64(word >> np.uint64(32))


@njit(cache=True, nogil=True)
def _pick(buf, state, d):
    """Uniform index in ``[0, d)`` or -1 if more random words are needed.

    On exhaustion the state is rewound so the whole draw is redone after a
    refill.  The caller moves the unread tail to the front of the new buffer,
    so the sequence of consumed words never depends on the buffer size.
    """
    w0, h0 = state[WORD], state[HALF]
    du = np.uint64(d)
    threshold = (_TWO32 - du) % du
    while True:
        x = _next32(buf, state)
        if x < 0:
            state[WORD], state[HALF] = w0, h0
            return np.int64(-1)
        m = np.uint64(x) * du
        low = m & _MASK32
        if low >= threshold:
            return np.int64(m >> np.uint64(32))


@njit(cache=True, nogil=True)
def cover_chunk(adj, covered, state, buf, stop_step, k_next):
    """Advance the walk until an event.

    Stops when the step counter equals ``stop_step`` (before taking that
    step), when the uncovered count drops to ``k_next`` or to zero, or when
    ``buf`` runs dry.  ``k_next < 1`` disables the k event.
    """
    d = adj.shape[1]
    pos = state[POS]
    step = state[STEP]
    unc = state[UNCOVERED]
    code = BUFFER_EMPTY
    while True:
        if step >= stop_step:
            code = REACHED_STOP
            break
        j = _pick(buf, state, d)
        if j < 0:
            code = BUFFER_EMPTY
            break
        pos = adj[pos, j]
        step += 1
        if covered[pos] == 0:
            covered[pos] = 1
            unc -= 1
            if unc == 0:
                code = COVERED
                break
            if unc == k_next:
                code = REACHED_K
                break
    state[POS] = pos
    state[STEP] = step
    state[UNCOVERED] = unc
    return code


@njit(cache=True, nogil=True)
def hit_chunk(adj, target, state, buf, stop_step):
    """Walk until ``target[pos]`` is set, ``stop_step`` is reached or the buffer empties."""
    d = adj.shape[1]
    pos = state[POS]
    step = state[STEP]
    code = BUFFER_EMPTY
    while True:
        if target[pos]:
            code = HIT_TARGET
            break
        if step >= stop_step:
            code = REACHED_STOP
            break
        j = _pick(buf, state, d)
        if j < 0:
            code = BUFFER_EMPTY
            break
        pos = adj[pos, j]
        step += 1
    state[POS] = pos
    state[STEP] = step
    return code


@njit(cache=True, nogil=True)
def visit_chunk(adj, y, state, buf, stop_step, counter):
    """Walk to ``stop_step`` counting visits to ``y`` (arrivals only) in ``counter[0]``."""
    d = adj.shape[1]
    pos = state[POS]
    step = state[STEP]
    code = BUFFER_EMPTY
    while True:
        if step >= stop_step:
            code = REACHED_STOP
            break
        j = _pick(buf, state, d)
        if j < 0:
            code = BUFFER_EMPTY
            break
        pos = adj[pos, j]
        step += 1
        if pos == y:
            counter[0] += 1
    state[POS] = pos
    state[STEP] = step
    return code


@njit(cache=True, nogil=True)
def uncovered_ids(covered):
    n = covered.shape[0]
    count = 0
    for i in range(n):
        if covered[i] == 0:
            count += 1
    out = np.empty(count, dtype=np.int64)
    c = 0
    for i in range(n):
        if covered[i] == 0:
            out[c] = i
            c += 1
    return out


@njit(cache=True, nogil=True)
def product_cover_chunk(adj1, adj2, covered, state, buf, stop_step, k_next):
    """:func:`cover_chunk` on a strong product, stepping through the factors.

    A neighbour of ``(x1, x2)`` is a pair of closed-neighbourhood choices
    other than (stay, stay); picking one of the ``(d1+1)(d2+1) - 1`` pairs
    uniformly is the simple random walk on the product while only touching
    the two small factor tables.
    """
    n2 = adj2.shape[0]
    k2 = adj2.shape[1] + 1
    d = (adj1.shape[1] + 1) * k2 - 1
    pos = state[POS]
    step = state[STEP]
    unc = state[UNCOVERED]
    x1 = pos // n2
    x2 = pos - x1 * n2
    code = BUFFER_EMPTY
    while True:
        if step >= stop_step:
            code = REACHED_STOP
            break
        j = _pick(buf, state, d)
        if j < 0:
            code = BUFFER_EMPTY
            break
        c = j + 1
        a = c // k2
        b = c - a * k2
        if a > 0:
            x1 = adj1[x1, a - 1]
        if b > 0:
            x2 = adj2[x2, b - 1]
        pos = x1 * n2 + x2
        step += 1
        if covered[pos] == 0:
            covered[pos] = 1
            unc -= 1
            if unc == 0:
                code = COVERED
                break
            if unc == k_next:
                code = REACHED_K
                break
    state[POS] = pos
    state[STEP] = step
    state[UNCOVERED] = unc
    return code
