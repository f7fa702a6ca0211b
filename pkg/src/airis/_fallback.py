"""Pure-Python/NumPy versions of the compiled kernels in ``_core.pyx``."""

import numpy as np


def exp_series_coeffs(c):
    c = np.ascontiguousarray(c, dtype=float)
    nx, width = c.shape
    nmax = width - 1
    b = np.zeros((nx, nmax + 1))
    b[:, 0] = 1.0
    jc = c * np.arange(width)
    for n in range(1, nmax + 1):
        # sum_{j=1}^{n} j c_j b_{n-j}
        b[:, n] = np.einsum("ij,ij->i", jc[:, 1:n + 1], b[:, n - 1::-1]) / n
    return b


def markov_trace(p01, p10, u, init):
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape[0], dtype=np.int8)
    state = int(init)
    for t, ut in enumerate(u.tolist()):
        if state == 0:
            if ut < p01:
                state = 1
        elif ut < p10:
            state = 0
        out[t] = state
    return out
