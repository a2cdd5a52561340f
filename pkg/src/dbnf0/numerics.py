"""Deterministic numerical substrate: seeded RNG, activations, small helpers.

Matrices and vectors throughout the package are plain float64 numpy arrays
(row-major). The RNG is a xoshiro256** stream (see ``_sampling_py`` for the
full stream contract); identical seeds give identical draw sequences on any
platform, independent of the selected kernel backend.
"""

import numpy as np

from .backend import kernels

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(state):
    """One splitmix64 step: returns (next_state, output)."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return state, z


def seed_state(seed):
    """Expand a 64-bit seed into one xoshiro256** state row (shape (4,) uint64)."""
    s = int(seed) & MASK64
    words = []
    for _ in range(4):
        s, z = _splitmix64(s)
        words.append(z)
    if not any(words):
        words[0] = _GOLDEN
    return np.array(words, dtype=np.uint64)


def derive_seed(seed, index):
    """Mix (seed, index) into a child seed; distinct indices give independent streams."""
    z = (int(seed) + (int(index) + 1) * _GOLDEN) & MASK64
    _, out = _splitmix64(z)
    return out


def multi_stream_states(seed, n):
    """(n, 4) uint64 state array, row r seeded from derive_seed(seed, r)."""
    return np.stack([seed_state(derive_seed(seed, r)) for r in range(n)])


class Rng:
    """Single-owner deterministic random stream.

    Every method consumes draws from one sequential stream; the per-method
    consumption order is fixed (row-major for array fills), so a fixed call
    sequence always yields identical results.
    """

    def __init__(self, seed):
        self.seed = int(seed) & MASK64
        self._states = seed_state(self.seed).reshape(1, 4)

    @classmethod
    def derived(cls, seed, index):
        """Independent stream keyed by (seed, index); order-independent across indices."""
        return cls(derive_seed(seed, index))

    def uniform(self, shape=None):
        """Uniform draw(s) in [0, 1); scalar when shape is None."""
        if shape is None:
            out = np.empty((1, 1))
            kernels.fill_uniform(self._states, out)
            return float(out[0, 0])
        out = np.empty((1, int(np.prod(shape))))
        kernels.fill_uniform(self._states, out)
        return out.reshape(shape)

    def normal(self, shape=None, scale=1.0):
        """Standard normal draw(s) scaled by `scale`."""
        if shape is None:
            out = np.empty((1, 1))
            kernels.fill_normal(self._states, out)
            return float(out[0, 0]) * scale
        out = np.empty((1, int(np.prod(shape))))
        kernels.fill_normal(self._states, out)
        out *= scale
        return out.reshape(shape)

    def bernoulli(self, p):
        """Binary 0.0/1.0 array of p's shape; entry i is 1 with probability p[i]."""
        p = np.ascontiguousarray(p, dtype=np.float64)
        flat = p.reshape(1, p.size)
        out = np.empty_like(flat)
        kernels.fill_bernoulli(self._states, flat, out)
        return out.reshape(p.shape)

    def integers(self, bound, shape=None):
        """Integer draw(s) in [0, bound) via u64 modulo (bias ~bound/2^64)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        if shape is None:
            out = np.empty((1, 1), dtype=np.uint64)
            kernels.fill_u64(self._states, out)
            return int(out[0, 0] % bound)
        out = np.empty((1, int(np.prod(shape))), dtype=np.uint64)
        kernels.fill_u64(self._states, out)
        return (out % bound).astype(np.int64).reshape(shape)

    def permutation(self, n):
        """Fisher-Yates permutation of arange(n) as int64."""
        idx = np.arange(n, dtype=np.int64)
        kernels.shuffle_inplace(self._states[0], idx)
        return idx


def sigmoid(x):
    """Logistic function 1/(1+exp(-x)), overflow-safe, scalar or array."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def matvec(m, v):
    """Matrix-vector product with an explicit dimension check."""
    m = np.asarray(m, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1:
        raise ValueError("matvec expects a 2-D matrix and a 1-D vector")
    if m.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: {m.shape} x {v.shape}")
    return m @ v


def bernoulli_sample(p, rng):
    """Sample a binary vector with per-entry probabilities `p`, advancing `rng`."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return rng.bernoulli(p)


def logsumexp(a, axis=None):
    """Stable log(sum(exp(a)))."""
    a = np.asarray(a, dtype=np.float64)
    m = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return float(out.reshape(())) if axis is None else np.squeeze(out, axis=axis)


def softplus(x):
    """log(1+exp(x)) without overflow."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
