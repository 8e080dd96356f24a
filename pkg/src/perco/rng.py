"""Philox4x64-10 counter-based generator (Salmon et al., Random123).

Site colours are drawn from one 64-bit Philox output word per site: the key
is ``(master seed, stream index)`` and the counter is ``(site // 4, 0, 0, 0)``;
site ``i`` uses word ``i % 4`` of that block.  A site is black when the top 53
bits, read as a uniform in [0, 1), fall below ``p``.
"""

import numba as nb
import numpy as np

M0 = np.uint64(0xD2E7470EE14C6C93)
M1 = np.uint64(0xCA5A826395121157)
W0 = np.uint64(0x9E3779B97F4A7C15)
W1 = np.uint64(0xBB67AE8584CAA73B)
MASK32 = np.uint64(0xFFFFFFFF)
S32 = np.uint64(32)
S11 = np.uint64(11)
TWO53 = 9007199254740992.0


@nb.njit(cache=True, inline="always")
def _mulhilo(a, b):
    a_lo = a & MASK32
    a_hi = a >> S32
    b_lo = b & MASK32
    b_hi = b >> S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> S32) + (lh & MASK32) + (hl & MASK32)
    hi = hh + (lh >> S32) + (hl >> S32) + (mid >> S32)
    lo = a * b
    return hi, lo


@nb.njit(cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x64; returns the four output words."""
    for _ in range(10):
        hi0, lo0 = _mulhilo(M0, c0)
        hi1, lo1 = _mulhilo(M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = k0 + W0
        k1 = k1 + W1
    return c0, c1, c2, c3


@nb.njit(cache=True)
def fill_block(col, block, k0, k1, p, nsites):
    """Write the colours of sites ``4*block .. 4*block+3`` into ``col``."""
    w0, w1, w2, w3 = philox4x64(np.uint64(block), np.uint64(0), np.uint64(0), np.uint64(0), k0, k1)
    thr = p * TWO53
    base = 4 * block
    if base < nsites:
        col[base] = 1 if float(w0 >> S11) < thr else 0
    if base + 1 < nsites:
        col[base + 1] = 1 if float(w1 >> S11) < thr else 0
    if base + 2 < nsites:
        col[base + 2] = 1 if float(w2 >> S11) < thr else 0
    if base + 3 < nsites:
        col[base + 3] = 1 if float(w3 >> S11) < thr else 0


@nb.njit(cache=True)
def fill_all(nsites, k0, k1, p):
    col = np.empty(nsites, dtype=np.uint8)
    for b in range((nsites + 3) // 4):
        fill_block(col, b, k0, k1, p, nsites)
    return col


def to_u64(value: int) -> np.uint64:
    if not 0 <= value < 2**64:
        raise ValueError(f"{value} is not an unsigned 64-bit integer")
    return np.uint64(value)


def philox_block(counter, key):
    """Python entry point: Philox4x64-10 of a 4-word counter under a 2-word key."""
    c = [to_u64(int(v)) for v in counter]
    k = [to_u64(int(v)) for v in key]
    return tuple(int(w) for w in philox4x64(c[0], c[1], c[2], c[3], k[0], k[1]))
