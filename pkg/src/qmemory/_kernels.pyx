# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: unifilar HMM sampling and sliding-window counting.

Semantics match :mod:`qmemory._fallback` exactly; both are driven by the
same uniform draws, so outputs are bit-identical across backends.
"""
from libc.stdint cimport int64_t, uint8_t


def sample_symbols(const double[:, ::1] cum, const int64_t[:, ::1] nxt,
                   Py_ssize_t state, const double[::1] u, uint8_t[::1] out):
    """Fill ``out`` with symbols and return the final hidden state.

    ``cum[s]`` is the cumulative emission distribution of state ``s`` with
    the last reachable entry raised above 1, so the scan always stops.
    """
    cdef Py_ssize_t i, x
    cdef Py_ssize_t n = u.shape[0]
    cdef double v
    with nogil:
        for i in range(n):
            v = u[i]
            x = 0
            while v >= cum[state, x]:
                x += 1
            out[i] = <uint8_t>x
            state = nxt[state, x]
    return state


def count_windows(const uint8_t[::1] seq, Py_ssize_t ell, Py_ssize_t base,
                  int64_t[::1] counts):
    """Add the base-``base`` codes of every length-``ell`` window to ``counts``."""
    cdef Py_ssize_t i
    cdef Py_ssize_t n = seq.shape[0]
    cdef int64_t code = 0
    cdef int64_t size = counts.shape[0]
    if ell > n:
        return
    with nogil:
        for i in range(ell - 1):
            code = code * base + seq[i]
        for i in range(ell - 1, n):
            code = (code * base + seq[i]) % size
            counts[code] += 1
