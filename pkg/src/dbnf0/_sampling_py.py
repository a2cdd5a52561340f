"""Pure-Python sampling kernels (fallback backend).

Reference implementation of the seeded sampling stream. The compiled twin in
``_sampling_ext.pyx`` implements exactly the same integer and floating-point
operations, so both backends produce bit-identical streams on a given
platform.

Generator: xoshiro256** (public domain, Blackman & Vigna), state expanded
from a 64-bit seed with splitmix64. Uniform doubles take the top 53 bits of
a draw: (u64 >> 11) * 2^-53, giving values in [0, 1). Normals use the
Marsaglia polar method (log/sqrt only, no trig). Bounded integers reduce a
full draw modulo n.

State layout: each stream is one row of a (n_streams, 4) uint64 array; all
fill kernels walk rows independently, so multi-stream fills are
order-independent across rows.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


def _next(s):
    """Advance one xoshiro256** state (list of 4 ints), return a u64 draw."""
    result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
    t = (s[1] << 17) & MASK64
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


def fill_uniform(states, out):
    """Fill each row of `out` with uniforms in [0,1) from the matching stream."""
    rows, cols = out.shape
    for r in range(rows):
        s = [int(x) for x in states[r]]
        row = out[r]
        for c in range(cols):
            row[c] = (_next(s) >> 11) * _INV53
        states[r] = s


def fill_normal(states, out):
    """Fill rows with standard normals (polar method).

    Pairs are generated per row; a spare half-pair at the end of a row is
    discarded, so consumption depends only on (row length, stream state).
    """
    rows, cols = out.shape
    for r in range(rows):
        s = [int(x) for x in states[r]]
        row = out[r]
        c = 0
        while c < cols:
            while True:
                u = 2.0 * ((_next(s) >> 11) * _INV53) - 1.0
                v = 2.0 * ((_next(s) >> 11) * _INV53) - 1.0
                q = u * u + v * v
                if 0.0 < q < 1.0:
                    break
            f = math.sqrt(-2.0 * math.log(q) / q)
            row[c] = u * f
            c += 1
            if c < cols:
                row[c] = v * f
                c += 1
        states[r] = s


def fill_bernoulli(states, p, out):
    """out[r,c] = 1.0 with probability p[r,c], else 0.0 (one uniform each)."""
    rows, cols = out.shape
    for r in range(rows):
        s = [int(x) for x in states[r]]
        prow = p[r]
        row = out[r]
        for c in range(cols):
            u = (_next(s) >> 11) * _INV53
            row[c] = 1.0 if u < prow[c] else 0.0
        states[r] = s


def fill_u64(states, out):
    """Fill each row of `out` (uint64) with raw generator draws."""
    rows, cols = out.shape
    for r in range(rows):
        s = [int(x) for x in states[r]]
        row = out[r]
        for c in range(cols):
            row[c] = _next(s)
        states[r] = s


def shuffle_inplace(state, idx):
    """Fisher-Yates shuffle of int64 `idx` driven by a single stream row.

    `state` is a length-4 uint64 view (one row of a states array).
    """
    s = [int(x) for x in state]
    n = idx.shape[0]
    for i in range(n - 1, 0, -1):
        j = _next(s) % (i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    state[:] = np.array(s, dtype=np.uint64)
