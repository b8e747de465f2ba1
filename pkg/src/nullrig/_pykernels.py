"""Pure numpy implementations of the truncated Taylor kernels."""
import numpy as np


def taylor_mul(a, b, ia, ib, starts):
    """Product of two coefficient blocks of shape (N, M) via a sparse triple table."""
    prod = a[:, ia] * b[:, ib]
    return np.add.reduceat(prod, starts, axis=1)


def series_eval(d, coeffs, ia, ib, starts):
    """Horner evaluation of sum_k coeffs[:, k] * d**k with d of zero constant term.

    d: (N, M), coeffs: (N, K+1). Returns (N, M).
    """
    n, m = d.shape
    deg = coeffs.shape[1] - 1
    out = np.zeros((n, m))
    out[:, 0] = coeffs[:, deg]
    for k in range(deg - 1, -1, -1):
        out = taylor_mul(out, d, ia, ib, starts)
        out[:, 0] += coeffs[:, k]
    return out
