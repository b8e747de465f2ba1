"""Scalar numerics: quadrature wrappers and a safeguarded Newton solver."""
from __future__ import annotations

import math

from scipy import integrate

from .errors import ConvergenceError

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-13


def quad(fn, a: float, b: float, points=None) -> float:
    """Adaptive Gauss-Kronrod integral of a scalar function."""
    if a == b:
        return 0.0
    val, _err = integrate.quad(fn, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                               limit=500, points=points)
    return float(val)


def safeguarded_newton(F, dF, target: float, lo: float, hi: float, x0: float | None = None,
                       tol: float = 1e-14, maxiter: int = 200) -> float:
    """Solve F(x) = target on [lo, hi] for increasing F.

    Newton steps are accepted only while they stay inside the current bracket;
    otherwise the bracket is bisected.
    """
    flo, fhi = F(lo) - target, F(hi) - target
    if flo > 0 or fhi < 0:
        raise ConvergenceError("target not bracketed")
    x = 0.5 * (lo + hi) if x0 is None or not (lo < x0 < hi) else x0
    for _ in range(maxiter):
        fx = F(x) - target
        if fx == 0.0:
            return x
        if fx > 0:
            hi = x
        else:
            lo = x
        d = dF(x)
        step_ok = d > 0 and math.isfinite(d)
        xn = x - fx / d if step_ok else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= tol * max(1.0, abs(x)):
            return xn
        x = xn
        if hi - lo <= tol * max(1.0, abs(x)):
            return 0.5 * (lo + hi)
    raise ConvergenceError("safeguarded Newton did not converge")


def central_diff(fn, x: float, h: float = 1e-5) -> float:
    """Richardson-extrapolated central difference."""
    d1 = (fn(x + h) - fn(x - h)) / (2 * h)
    d2 = (fn(x + h / 2) - fn(x - h / 2)) / h
    return (4 * d2 - d1) / 3
