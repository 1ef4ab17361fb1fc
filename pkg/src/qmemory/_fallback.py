"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def sample_symbols(cum, nxt, state, u, out):
    cum_rows = [list(row) for row in np.asarray(cum)]
    nxt_rows = [list(row) for row in np.asarray(nxt).tolist()]
    symbols = bytearray(len(u))
    for i, v in enumerate(np.asarray(u).tolist()):
        row = cum_rows[state]
        x = 0
        while v >= row[x]:
            x += 1
        symbols[i] = x
        state = nxt_rows[state][x]
    out[:] = np.frombuffer(bytes(symbols), dtype=np.uint8)
    return state


def count_windows(seq, ell, base, counts):
    seq = np.asarray(seq)
    n = seq.shape[0]
    if ell > n:
        return
    m = n - ell + 1
    codes = np.zeros(m, dtype=np.int64)
    for j in range(ell):
        codes *= base
        codes += seq[j:j + m]
    counts += np.bincount(codes, minlength=counts.shape[0])
