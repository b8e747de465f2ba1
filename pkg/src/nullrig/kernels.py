"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set NULLRIG_PURE_PYTHON=1 to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_ck = None
if os.environ.get("NULLRIG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _ck
        BACKEND = "cython"
    except ImportError:
        _ck = None


def _rows(x, m):
    return np.ascontiguousarray(np.reshape(x, (-1, m)), dtype=float)


def taylor_mul(a, b, table):
    """Multiply coefficient arrays a, b (broadcastable, last axis = monomials)."""
    shape = np.broadcast_shapes(a.shape, b.shape)
    m = shape[-1]
    a2 = _rows(np.broadcast_to(a, shape), m)
    b2 = _rows(np.broadcast_to(b, shape), m)
    if _ck is not None:
        out = _ck.taylor_mul(a2, b2, table.ia, table.ib, table.ic, m)
    else:
        out = _pykernels.taylor_mul(a2, b2, table.ia, table.ib, table.starts)
    return out.reshape(shape)


def series_eval(d, coeffs, table):
    """Evaluate a power series in d (zero constant term) with per-element coefficients."""
    m = d.shape[-1]
    lead = np.broadcast_shapes(d.shape[:-1], coeffs.shape[:-1])
    d2 = _rows(np.broadcast_to(d, lead + (m,)), m)
    c2 = _rows(np.broadcast_to(coeffs, lead + coeffs.shape[-1:]), coeffs.shape[-1])
    if _ck is not None:
        out = _ck.series_eval(d2, c2, table.ia, table.ib, table.ic, m)
    else:
        out = _pykernels.series_eval(d2, c2, table.ia, table.ib, table.starts)
    return out.reshape(lead + (m,))
