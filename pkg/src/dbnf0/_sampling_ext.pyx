# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels (xoshiro256** streams).

Bit-identical twin of ``_sampling_py``: same generator, same draw order,
same float conversion, same libm calls. See that module for the stream
contract.
"""

from libc.math cimport log, sqrt

import numpy as np

ctypedef unsigned long long u64

cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline u64 rotl(u64 x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline u64 nxt(u64* s) nogil:
    cdef u64 result = rotl(s[1] * 5ULL, 7) * 9ULL
    cdef u64 t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = rotl(s[3], 45)
    return result


def fill_uniform(u64[:, ::1] states, double[:, ::1] out):
    cdef Py_ssize_t rows = out.shape[0], cols = out.shape[1]
    cdef Py_ssize_t r, c
    cdef u64 s[4]
    for r in range(rows):
        s[0] = states[r, 0]; s[1] = states[r, 1]
        s[2] = states[r, 2]; s[3] = states[r, 3]
        for c in range(cols):
            out[r, c] = <double>(nxt(s) >> 11) * INV53
        states[r, 0] = s[0]; states[r, 1] = s[1]
        states[r, 2] = s[2]; states[r, 3] = s[3]


def fill_normal(u64[:, ::1] states, double[:, ::1] out):
    cdef Py_ssize_t rows = out.shape[0], cols = out.shape[1]
    cdef Py_ssize_t r, c
    cdef u64 s[4]
    cdef double u, v, q, f
    for r in range(rows):
        s[0] = states[r, 0]; s[1] = states[r, 1]
        s[2] = states[r, 2]; s[3] = states[r, 3]
        c = 0
        while c < cols:
            while True:
                u = 2.0 * (<double>(nxt(s) >> 11) * INV53) - 1.0
                v = 2.0 * (<double>(nxt(s) >> 11) * INV53) - 1.0
                q = u * u + v * v
                if 0.0 < q and q < 1.0:
                    break
            f = sqrt(-2.0 * log(q) / q)
            out[r, c] = u * f
            c += 1
            if c < cols:
                out[r, c] = v * f
                c += 1
        states[r, 0] = s[0]; states[r, 1] = s[1]
        states[r, 2] = s[2]; states[r, 3] = s[3]


def fill_bernoulli(u64[:, ::1] states, double[:, ::1] p, double[:, ::1] out):
    cdef Py_ssize_t rows = out.shape[0], cols = out.shape[1]
    cdef Py_ssize_t r, c
    cdef u64 s[4]
    cdef double u
    for r in range(rows):
        s[0] = states[r, 0]; s[1] = states[r, 1]
        s[2] = states[r, 2]; s[3] = states[r, 3]
        for c in range(cols):
            u = <double>(nxt(s) >> 11) * INV53
            out[r, c] = 1.0 if u < p[r, c] else 0.0
        states[r, 0] = s[0]; states[r, 1] = s[1]
        states[r, 2] = s[2]; states[r, 3] = s[3]


def fill_u64(u64[:, ::1] states, u64[:, ::1] out):
    cdef Py_ssize_t rows = out.shape[0], cols = out.shape[1]
    cdef Py_ssize_t r, c
    cdef u64 s[4]
    for r in range(rows):
        s[0] = states[r, 0]; s[1] = states[r, 1]
        s[2] = states[r, 2]; s[3] = states[r, 3]
        for c in range(cols):
            out[r, c] = nxt(s)
        states[r, 0] = s[0]; states[r, 1] = s[1]
        states[r, 2] = s[2]; states[r, 3] = s[3]


def shuffle_inplace(u64[::1] state, long long[::1] idx):
    cdef u64 s[4]
    s[0] = state[0]; s[1] = state[1]; s[2] = state[2]; s[3] = state[3]
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t i
    cdef u64 j
    cdef long long tmp
    for i in range(n - 1, 0, -1):
        j = nxt(s) % <u64>(i + 1)
        tmp = idx[i]
        idx[i] = idx[<Py_ssize_t>j]
        idx[<Py_ssize_t>j] = tmp
    state[0] = s[0]; state[1] = s[1]; state[2] = s[2]; state[3] = s[3]
