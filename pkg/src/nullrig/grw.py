"""Generalized Robertson-Walker spacetimes I x_f F with constant-curvature fibres.

The metric is g = -dt^2 + f(t)^2 g_F.  Coordinates on the spacetime chart are
(t, x_1, ..., x_{n-1}) where x is a chart of the fibre.  Two fibre charts are
available: geodesic polar coordinates around a base point, and a stereographic
(conformally flat) chart that stays regular along whole geodesics.
"""
from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy import integrate

from . import jets as J
from .errors import ConfigError, DomainError, OutsideConeDomainError
from .numerics import quad, safeguarded_newton
from .tensor import ChartMetric

_INF = math.inf


# -- constant-curvature trigonometry ----------------------------------------

def sn_k(k: float, r):
    """Solution of y'' + k y = 0 with y(0)=0, y'(0)=1 (jet-aware)."""
    if k > 0:
        s = math.sqrt(k)
        return J.sin(r * s) / s
    if k < 0:
        s = math.sqrt(-k)
        return J.sinh(r * s) / s
    return r


def cs_k(k: float, r):
    """Solution of y'' + k y = 0 with y(0)=1, y'(0)=0 (jet-aware)."""
    if k > 0:
        return J.cos(r * math.sqrt(k))
    if k < 0:
        return J.cosh(r * math.sqrt(-k))
    return r * 0.0 + 1.0


def chord_to_distance(k: float, c):
    if k > 0:
        s = math.sqrt(k)
        return 2.0 / s * J.arcsin(c * (s / 2))
    if k < 0:
        s = math.sqrt(-k)
        return 2.0 / s * J.arcsinh(c * (s / 2))
    return c


# -- warping functions ------------------------------------------------------

class WarpFunction:
    """Positive smooth function f on an open interval I.

    ``f`` must accept floats, arrays and jets.  Optional closed-form
    antiderivatives of f and 1/f are used when supplied; otherwise integrals
    go through adaptive quadrature.  ``inv_limits`` are the limits of the
    antiderivative of 1/f at the ends of I; floating-point evaluation at an
    end where 1/f is not integrable would return a large finite number instead.
    """

    def __init__(self, f: Callable, interval=(-_INF, _INF), name: str = "custom",
                 antideriv=None, antideriv_inv=None, static: bool = False,
                 antideriv_inv_inverse=None, inv_limits=None):
        lo, hi = float(interval[0]), float(interval[1])
        if not lo < hi:
            raise ConfigError("warp interval must satisfy lo < hi")
        self._f = f
        self.interval = (lo, hi)
        self.name = name
        self._antideriv = antideriv
        self._antideriv_inv = antideriv_inv
        self._antideriv_inv_inverse = antideriv_inv_inverse
        self.static = static
        self._inv_limits = inv_limits

    def __repr__(self):
        return f"WarpFunction({self.name!r}, interval={self.interval})"

    def __call__(self, t):
        return self._f(t)

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (t > self.interval[0]) & (t < self.interval[1])

    def check(self, t):
        if not np.all(self.contains(J.value(t))):
            raise DomainError(f"time outside the interval {self.interval} of {self.name}")

    def derivatives(self, t, k: int = 2) -> np.ndarray:
        """[f(t), f'(t), ..., f^(k)(t)] along a new last axis."""
        t = np.asarray(t, dtype=float)
        c = J.series_coeffs(self._f, t, k)
        return c * np.array([math.factorial(i) for i in range(k + 1)])

    # integrals ----------------------------------------------------------
    def F_int(self, t0: float, t1: float) -> float:
        """Integral of f from t0 to t1."""
        if self._antideriv is not None:
            return float(self._antideriv(t1) - self._antideriv(t0))
        return quad(lambda r: float(self._f(r)), t0, t1)

    def Finv_int(self, t0: float, t1: float) -> float:
        """Integral of 1/f from t0 to t1 (the fibre distance swept by a null ray)."""
        if self._antideriv_inv is not None:
            return float(self._antideriv_inv(t1) - self._antideriv_inv(t0))
        return quad(lambda r: 1.0 / float(self._f(r)), t0, t1)

    def Finv_int_quad(self, t0: float, t1: float) -> float:
        """Quadrature-only version of :meth:`Finv_int` (oracle for closed forms)."""
        return quad(lambda r: 1.0 / float(self._f(r)), t0, t1)

    def _c_limits(self):
        if self._inv_limits is not None:
            return self._inv_limits
        lo, hi = self.interval
        with np.errstate(all="ignore"):
            return float(self._antideriv_inv(lo)), float(self._antideriv_inv(hi))

    def total_Finv(self) -> float:
        """Integral of 1/f over the whole interval (may be infinite)."""
        lo, hi = self.interval
        if self._antideriv_inv is not None:
            c_lo, c_hi = self._c_limits()
            return c_hi - c_lo
        return _improper(lambda r: 1.0 / float(self._f(r)), lo, hi)

    def sup_Finv(self, t0: float) -> float:
        """Integral of 1/f from t0 to the upper end of I (may be infinite)."""
        hi = self.interval[1]
        if self._antideriv_inv is not None:
            return self._c_limits()[1] - float(self._antideriv_inv(t0))
        return _improper(lambda r: 1.0 / float(self._f(r)), t0, hi)

    def inf_Finv(self, t0: float) -> float:
        """Integral of 1/f from the lower end of I to t0 (may be infinite)."""
        lo = self.interval[0]
        if self._antideriv_inv is not None:
            return float(self._antideriv_inv(t0)) - self._c_limits()[0]
        return _improper(lambda r: 1.0 / float(self._f(r)), lo, t0)

    def _inverse(self, F, dF, t0: float, s: float) -> float:
        lo, hi = self.interval
        if s == 0.0:
            return t0
        if s > 0:
            a, b = t0, hi
            step = 1.0
            while not math.isfinite(b) or b - a > 0:
                if math.isfinite(hi):
                    b = hi - 1e-15 * max(1.0, abs(hi))
                    break
                b = t0 + step
                if F(b) >= s:
                    break
                step *= 2.0
                if step > 1e8:
                    raise OutsideConeDomainError("no solution within the warp interval")
            if F(b) < s:
                raise OutsideConeDomainError(
                    f"target {s} exceeds the reachable range {F(b)} on {self.name}")
            return safeguarded_newton(F, dF, s, a, b, x0=t0 + s * float(self._f(t0)))
        # s < 0: decreasing direction
        a = t0
        step = 1.0
        while True:
            if math.isfinite(lo):
                b = lo + 1e-15 * max(1.0, abs(lo))
                break
            b = t0 - step
            if F(b) <= s:
                break
            step *= 2.0
            if step > 1e8:
                raise OutsideConeDomainError("no solution within the warp interval")
        if F(b) > s:
            raise OutsideConeDomainError(
                f"target {s} exceeds the reachable range {F(b)} on {self.name}")
        return safeguarded_newton(F, dF, s, b, a, x0=t0 + s * float(self._f(t0)))

    def inverse_Finv(self, t0: float, s: float) -> float:
        """t with Finv_int(t0, t) = s."""
        if self._antideriv_inv_inverse is not None:
            c0 = float(self._antideriv_inv(t0))
            c_lo, c_hi = self._c_limits()
            target = c0 + float(s)
            if not c_lo < target < c_hi:
                raise OutsideConeDomainError(
                    f"target {s} is outside the reachable range of {self.name}")
            return float(self._antideriv_inv_inverse(target))
        return self._inverse(lambda t: self.Finv_int(t0, t),
                             lambda t: 1.0 / float(self._f(t)), t0, float(s))

    def inverse_F(self, t0: float, s: float) -> float:
        """t with F_int(t0, t) = s (the affine parameter of null rays)."""
        return self._inverse(lambda t: self.F_int(t0, t),
                             lambda t: float(self._f(t)), t0, float(s))

    def _inverse_Finv_array(self, t0: float, d):
        d = np.asarray(d, dtype=float)
        if self._antideriv_inv_inverse is None or d.ndim == 0:
            return np.vectorize(lambda s: self.inverse_Finv(t0, s))(d)
        c_lo, c_hi = self._c_limits()
        target = float(self._antideriv_inv(t0)) + d
        if np.any(target <= c_lo) or np.any(target >= c_hi):
            raise OutsideConeDomainError(f"target outside the reachable range of {self.name}")
        return np.asarray(self._antideriv_inv_inverse(target), dtype=float)

    def inverse_Finv_jet(self, t0: float, d):
        """Jet-aware composition t = c^{-1}(d) with c(t) = Finv_int(t0, t)."""
        if not J.is_jet(d):
            return self._inverse_Finv_array(t0, d)
        d0 = d.value
        tb = self._inverse_Finv_array(t0, d0)
        K = d.order
        rc = J.series_coeffs(lambda u: J.reciprocal(self._f(u)), tb, max(K - 1, 0))
        a = np.zeros(np.shape(tb) + (K + 1,))
        a[..., 0] = d0
        a[..., 1:] = rc[..., :K] / np.arange(1, K + 1)
        b = J.invert_series(a)
        b[..., 0] = tb
        return J.apply_series(d, b)


def _improper(fn, a, b) -> float:
    """Quadrature that reports a divergent improper integral as infinity."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return quad(fn, a, b)
        except integrate.IntegrationWarning:
            return _INF if math.isinf(a) or math.isinf(b) else quad_loose(fn, a, b)


def quad_loose(fn, a, b) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return quad(fn, a, b)


def _poly_warp(coeffs, interval, name):
    coeffs = [float(c) for c in coeffs]

    def f(t):
        out = t * 0.0 + coeffs[-1]
        for c in reversed(coeffs[:-1]):
            out = out * t + c
        return out

    def F(t):
        out = 0.0
        for i, c in enumerate(coeffs):
            out = out + c * t ** (i + 1) / (i + 1)
        return out

    return WarpFunction(f, interval, name, antideriv=F, static=len(coeffs) == 1)


def _trig_warp(a0, cos_terms, sin_terms, interval, name):
    cos_terms = [float(c) for c in cos_terms]
    sin_terms = [float(c) for c in sin_terms]

    def f(t):
        out = t * 0.0 + float(a0)
        for j, c in enumerate(cos_terms, start=1):
            out = out + c * J.cos(t * j)
        for j, c in enumerate(sin_terms, start=1):
            out = out + c * J.sin(t * j)
        return out

    def F(t):
        out = float(a0) * t
        for j, c in enumerate(cos_terms, start=1):
            out = out + c * np.sin(j * t) / j
        for j, c in enumerate(sin_terms, start=1):
            out = out - c * np.cos(j * t) / j
        return out

    return WarpFunction(f, interval, name, antideriv=F)


def _gd(t):
    return 2.0 * np.arctan(np.tanh(np.asarray(t, dtype=float) / 2.0))


def _e_minus_sin(e):
    """e - sin(e) without cancellation for small e."""
    e = np.asarray(e, dtype=float)
    e2 = e * e
    ser = e * e2 / 6 * (1 - e2 / 20 * (1 - e2 / 42 * (1 - e2 / 72 * (1 - e2 / 110))))
    return np.where(np.abs(e) < 0.1, ser, e - np.sin(e))


def _eta_scalar(M: float) -> float:
    """Root of e - sin(e) = M on [0, 2 pi]: Newton kept inside a shrinking bracket."""
    if M <= 0.0:
        return 0.0
    if M >= 2 * math.pi:
        return 2 * math.pi
    lo, hi = 0.0, 2 * math.pi
    e = min((6.0 * M) ** (1.0 / 3.0), math.pi) if M < math.pi else M
    for _ in range(100):
        r = float(_e_minus_sin(e)) - M
        if r > 0:
            hi = e
        else:
            lo = e
        d = 1.0 - math.cos(e)
        en = e - r / d if d > 0 else 0.5 * (lo + hi)
        if not lo < en < hi:
            en = 0.5 * (lo + hi)
        if abs(en - e) <= 1e-16 * max(1.0, e) or hi - lo <= 1e-16 * max(1.0, e):
            return en
        e = en
    return e


def _eta_array(target):
    """Vectorised root of e - sin e = M on [0, 2 pi].

    e - sin e is convex on [0, pi], so Newton from the cube-root start decreases
    monotonically after its first step; M > pi is reflected for the start and then
    polished on the unreflected equation.
    """
    upper = target > math.pi
    M = np.where(upper, 2 * math.pi - target, target)
    e = np.cbrt(6.0 * M)
    for it in range(40):
        d = 2.0 * np.sin(0.5 * e) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d > 0, (_e_minus_sin(e) - M) / d, 0.0)
        en = np.clip(e - step, 0.0, math.pi)
        done = it > 0 and np.all((en >= e) | (e - en <= 1e-14 * e))
        e = en if it == 0 else np.minimum(en, e)
        if done:
            break
    e = np.where(upper, 2 * math.pi - e, e)
    for _ in range(2):
        d = 2.0 * np.sin(0.5 * e) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(upper & (d > 0), (_e_minus_sin(e) - target) / d, 0.0)
        e = np.where(upper, np.clip(e - step, math.pi, 2 * math.pi), e)
    return e


class FriedmannWarp(WarpFunction):
    """Closed dust model in cosmic time: t = A(eta - sin eta), f = A(1 - cos eta).

    The development angle eta is the conformal time, so the integral of 1/f
    in cosmic time over the whole life span equals the eta range 2*pi.
    """

    def __init__(self, A: float = 1.0):
        if A <= 0:
            raise ConfigError("Friedmann amplitude must be positive")
        self.A = float(A)
        super().__init__(self._f_of_t, (0.0, 2 * math.pi * self.A), "friedmann-closed",
                         antideriv=self._F_closed, antideriv_inv=self.eta,
                         antideriv_inv_inverse=self.cosmic_time, inv_limits=(0.0, 2 * math.pi))

    def cosmic_time(self, eta):
        return self.A * (eta - J.sin(eta))

    def eta(self, t):
        """Conformal time as a function of cosmic time (jet-aware)."""
        if J.is_jet(t):
            e0 = self.eta(t.value)
            a = J.series_coeffs(self.cosmic_time, e0, t.order)
            b = J.invert_series(a)
            b[..., 0] = e0
            return J.apply_series(t, b)
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        if np.any((tt < 0) | (tt > 2 * math.pi * self.A)):
            raise DomainError("cosmic time outside the Friedmann life span")
        if tt.size == 1:
            out = np.array([_eta_scalar(float(tt[0]) / self.A)])
        else:
            out = _eta_array(tt / self.A)
        return out[0] if scalar else out

    def _f_of_t(self, t):
        return self.A * (1.0 - J.cos(self.eta(t)))

    def _F_closed(self, t):
        e = self.eta(t)
        return self.A ** 2 * (1.5 * e - 2 * np.sin(e) + np.sin(2 * e) / 4)

    def total_Finv_conformal(self) -> float:
        """Integral of 1/f over I computed in the conformal-time variable.

        Substituting t = t(eta) gives the integrand t'(eta)/f(t(eta)), evaluated
        with jets of the cosmic-time map and integrated by quadrature.
        """
        def integrand(e):
            c = J.series_coeffs(self.cosmic_time, np.array(e), 1)
            return float(c[1] / self.A / (1 - math.cos(e))) if e > 0 else 1.0
        return quad(integrand, 0.0, 2 * math.pi)


def warp_from_name(name: str, **params) -> WarpFunction:
    name = name.lower()
    if name == "minkowski" or name == "static-sphere" or name == "static":
        return WarpFunction(lambda t: t * 0.0 + 1.0, name=name, antideriv=lambda t: t,
                            antideriv_inv=lambda t: t, static=True,
                            antideriv_inv_inverse=lambda c: c)
    if name == "desitter":
        return WarpFunction(J.cosh, name=name, antideriv=np.sinh, antideriv_inv=_gd,
                            antideriv_inv_inverse=lambda c: np.arctanh(np.sin(c)),
                            inv_limits=(-math.pi / 2, math.pi / 2))
    if name in ("ads-portion", "antidesitter-portion"):
        return WarpFunction(J.cos, (-math.pi / 2, math.pi / 2), name="ads-portion",
                            antideriv=np.sin,
                            antideriv_inv=lambda t: 2 * np.arctanh(np.tan(np.asarray(t) / 2)),
                            antideriv_inv_inverse=lambda c: 2 * np.arctan(np.tanh(c / 2)),
                            inv_limits=(-_INF, _INF))
    if name == "friedmann-closed":
        return FriedmannWarp(params.get("A", 1.0))
    if name == "grw-counterexample":
        return WarpFunction(lambda t: (1.0 + t * t) * 0.5, name=name,
                            antideriv=lambda t: (t + t ** 3 / 3) / 2,
                            antideriv_inv=lambda t: 2 * np.arctan(t),
                            antideriv_inv_inverse=lambda c: np.tan(c / 2),
                            inv_limits=(-math.pi, math.pi))
    if name == "custom-polynomial":
        coeffs = params.get("coeffs")
        if not coeffs:
            raise ConfigError("custom-polynomial needs coefficients")
        return _poly_warp(coeffs, params.get("interval", (-_INF, _INF)), name)
    if name == "custom-trigonometric":
        return _trig_warp(params.get("a0", 1.0), params.get("cos", ()), params.get("sin", ()),
                          params.get("interval", (-_INF, _INF)), name)
    raise ConfigError(f"unknown warp {name!r}")


# -- fibres -------------------------------------------------------------------

class FiberSpace:
    """Simply connected space form of dimension m and curvature k.

    chart="polar": x = (r, theta_1, ..., theta_{m-1}) around the base point,
    g_F = dr^2 + sn_k(r)^2 (dtheta_1^2 + sin^2 theta_1 dtheta_2^2 + ...).
    chart="stereo": g_F = |dy|^2 / (1 + k|y|^2/4)^2.
    """

    def __init__(self, dim: int, k: float, chart: str = "polar"):
        if dim < 1:
            raise ConfigError("fibre dimension must be at least 1")
        if chart not in ("polar", "stereo"):
            raise ConfigError(f"unknown fibre chart {chart!r}")
        self.dim = int(dim)
        self.k = float(k)
        self.chart = chart

    def __repr__(self):
        return f"FiberSpace(dim={self.dim}, k={self.k}, chart={self.chart!r})"

    def with_chart(self, chart: str) -> "FiberSpace":
        return FiberSpace(self.dim, self.k, chart)

    @property
    def radius_cap(self) -> float:
        return 0.95 * math.pi / math.sqrt(self.k) if self.k > 0 else _INF

    def sn(self, r):
        return sn_k(self.k, r)

    def cs(self, r):
        return cs_k(self.k, r)

    # chart domain -------------------------------------------------------
    def in_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.chart == "polar":
            r = x[..., 0]
            ok = (r > 0) & (r < self.radius_cap)
            if self.dim > 2:
                th = x[..., 1:-1]
                ok &= np.all((th > 0) & (th < math.pi), axis=-1)
            return ok
        q = np.sum(x * x, axis=-1)
        if self.k < 0:
            return q < 4.0 / (-self.k)
        return np.isfinite(q)

    def metric(self, x):
        """Fibre metric matrix (jet-aware), shape (..., m, m)."""
        m = self.dim
        if self.chart == "stereo":
            q = J.dot(x, x) if J.is_jet(x) else np.sum(np.asarray(x) ** 2, axis=-1)
            conf = J.power(1.0 + q * (self.k / 4.0), -2.0)
            if J.is_jet(conf):
                eye = np.eye(m)
                return J.Jet(conf.c[..., None, None, :] * eye[..., None], conf.space)
            return conf[..., None, None] * np.eye(m)
        r = x[..., 0]
        s2 = self.sn(r) ** 2
        diag = [r * 0.0 + 1.0]
        fac = s2
        for i in range(1, m):
            diag.append(fac)
            if i < m - 1:
                fac = fac * J.sin(x[..., i]) ** 2
        if J.is_jet(x):
            d = J.stack(diag, axis=-1)
            return J.Jet(d.c[..., :, None, :] * np.eye(m)[..., None], d.space)
        d = np.stack([np.broadcast_to(np.asarray(v, dtype=float), np.shape(r)) for v in diag], axis=-1)
        return d[..., :, None] * np.eye(m)

    # model-space representation ------------------------------------------
    def model_point(self, x):
        """(cs, Y) with cs = cs_k(r) and Y = sn_k(r) * (unit direction) in R^m."""
        if self.chart == "stereo":
            if J.is_jet(x):
                q = J.dot(x, x)
                sig = 1.0 + q * (self.k / 4.0)
                isig = J.reciprocal(sig)
                cs = (1.0 - q * (self.k / 4.0)) * isig
                Y = x * isig.expand_dims(-1)
                return cs, Y
            x = np.asarray(x, dtype=float)
            q = np.sum(x * x, axis=-1)
            sig = 1.0 + self.k * q / 4.0
            return (1.0 - self.k * q / 4.0) / sig, x / sig[..., None]
        r = x[..., 0]
        comps = []
        prod = self.sn(r)
        for i in range(1, self.dim):
            th = x[..., i]
            comps.append(prod * J.cos(th))
            prod = prod * J.sin(th)
        comps.append(prod)
        cs = self.cs(r)
        if J.is_jet(x):
            return cs, J.stack(comps, axis=-1)
        return np.asarray(cs, dtype=float), np.stack(
            [np.broadcast_to(np.asarray(c, dtype=float), np.shape(r)) for c in comps], axis=-1)

    def from_model(self, cs, Y) -> np.ndarray:
        """Inverse of :meth:`model_point` for float arrays."""
        cs = np.asarray(cs, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if self.chart == "stereo":
            return 2.0 * Y / (1.0 + cs)[..., None]
        rho = np.linalg.norm(Y, axis=-1)
        k = self.k
        if k > 0:
            r = np.arctan2(math.sqrt(k) * rho, cs) / math.sqrt(k)
        elif k < 0:
            r = np.arctanh(math.sqrt(-k) * rho / cs) / math.sqrt(-k)
        else:
            r = rho
        out = np.empty(Y.shape)
        out[..., 0] = r
        m = self.dim
        if m == 1:
            out[..., 0] = np.where(Y[..., 0] >= 0, r, -r)
            return out
        # hyperspherical angles of the unit direction
        for i in range(1, m - 1):
            out[..., i] = np.arctan2(np.linalg.norm(Y[..., i:], axis=-1), Y[..., i - 1])
        out[..., m - 1] = np.arctan2(Y[..., m - 1], Y[..., m - 2])
        return out

    def chord(self, x, y):
        """Chord length between two points in the model space (jet-aware in x)."""
        cx, Yx = self.model_point(x)
        cy, Yy = self.model_point(y)
        dY = Yx - Yy
        q = J.dot(dY, dY) if J.is_jet(dY) else np.sum(dY * dY, axis=-1)
        if self.k != 0:
            dc = cx - cy
            q = q + dc * dc / self.k
        return J.sqrt(q)

    def distance(self, x, y):
        """Riemannian distance d_F(x, y) (jet-aware in x)."""
        return chord_to_distance(self.k, self.chord(x, y))

    def distance_squared(self, x, y):
        return self.distance(x, y) ** 2

    def position_field(self, x_star, x) -> np.ndarray:
        """P^F at x: d(x*, x) times the gradient of d(x*, .), in chart components."""
        x = np.asarray(x, dtype=float)
        xj = J.Jet.variables(x, 1)
        d2 = self.distance(xj, np.broadcast_to(np.asarray(x_star, dtype=float), x.shape)) ** 2
        grad = d2.gradient_values()
        gF = self.metric(x)
        return 0.5 * np.linalg.solve(gF, grad[..., None])[..., 0]

    def tangent_to_model(self, x, v):
        """Push a chart tangent vector to the model space: (dcs, dY)."""
        xj = J.Jet.variables(np.asarray(x, dtype=float), 1)
        cs, Y = self.model_point(xj)
        dcs = np.einsum("...i,...i->...", cs.gradient_values(), v)
        dY = np.einsum("...ai,...i->...a", Y.gradient_values(), v)
        return dcs, dY

    def exp(self, x_star, v):
        """Exponential map exp_{x*}(v) in chart coordinates."""
        x_star = np.asarray(x_star, dtype=float)
        v = np.asarray(v, dtype=float)
        gF = self.metric(x_star)
        speed = np.sqrt(np.einsum("...ij,...i,...j->...", gF, v, v))
        cs0, Y0 = self.model_point(x_star)
        dcs, dY = self.tangent_to_model(x_star, v)
        with np.errstate(invalid="ignore", divide="ignore"):
            u_c = np.where(speed > 0, dcs / np.where(speed > 0, speed, 1), 0.0)
            u_Y = np.where(speed[..., None] > 0, dY / np.where(speed > 0, speed, 1)[..., None], 0.0)
        c = np.asarray(self.cs(speed), dtype=float)
        s = np.asarray(self.sn(speed), dtype=float)
        # geodesic in the model: P(d) = cs_k(d) P0 + sn_k(d) T with T the unit tangent
        Y = c[..., None] * Y0 + s[..., None] * u_Y
        if self.k != 0:
            cs = c * cs0 + s * u_c
        else:
            cs = np.ones_like(speed)
        return self.from_model(cs, Y)


# -- GRW spaces ------------------------------------------------------------------

class GRWSpace:
    """Spacetime I x_f F with metric -dt^2 + f(t)^2 g_F."""

    def __init__(self, warp: WarpFunction, fiber: FiberSpace, name: str | None = None):
        self.warp = warp
        self.fiber = fiber
        self.n = fiber.dim + 1
        self.name = name or warp.name

    def __repr__(self):
        return f"GRWSpace({self.name!r}, n={self.n}, k={self.fiber.k}, chart={self.fiber.chart!r})"

    def with_chart(self, chart: str) -> "GRWSpace":
        return GRWSpace(self.warp, self.fiber.with_chart(chart), self.name)

    @property
    def k(self) -> float:
        return self.fiber.k

    def metric_eval(self, p):
        """Spacetime metric at chart points (jet-aware)."""
        t = p[..., 0]
        x = p[..., 1:]
        f2 = self.warp(t) ** 2
        gF = self.fiber.metric(x)
        n = self.n
        if J.is_jet(p):
            gF = gF if J.is_jet(gF) else J.Jet.constant(gF, p.space)
            f2 = f2 if J.is_jet(f2) else J.Jet.constant(np.broadcast_to(f2, t.shape), p.space)
            c = np.zeros(p.shape[:-1] + (n, n, p.space.M))
            c[..., 0, 0, 0] = -1.0
            blk = gF * f2.expand_dims(-1).expand_dims(-1)
            c[..., 1:, 1:, :] = blk.c
            return J.Jet(c, p.space)
        p = np.asarray(p, dtype=float)
        out = np.zeros(p.shape[:-1] + (n, n))
        out[..., 0, 0] = -1.0
        out[..., 1:, 1:] = np.asarray(f2)[..., None, None] * gF
        return out

    def in_domain(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return self.warp.contains(p[..., 0]) & self.fiber.in_domain(p[..., 1:])

    def ambient_chart(self) -> ChartMetric:
        return ChartMetric(self.n, (-1,) + (1,) * (self.n - 1), self.metric_eval,
                           domain=self.in_domain, name=f"{self.name}/{self.fiber.chart}")

    # closed-form oracles ------------------------------------------------
    def null_ricci(self, t, w) -> np.ndarray:
        """Ric(v, v) for the null vector v = (1/f) d_t + w with f^2 g_F(w, w) = 1/f^2.

        Oracle from the warped-product curvature formulas:
        Ric(v, v) = (n-2) (k + f'^2 - f f'') g_F(w, w).
        """
        d = self.warp.derivatives(t, 2)
        f, f1, f2 = d[..., 0], d[..., 1], d[..., 2]
        gww = 1.0 / f ** 4
        return (self.n - 2) * (self.k + f1 ** 2 - f * f2) * gww

    def ricci_tt(self, t) -> np.ndarray:
        d = self.warp.derivatives(t, 2)
        return -(self.n - 1) * d[..., 2] / d[..., 0]


MODEL_DEFAULTS = {
    "minkowski": dict(k=0.0, t0=2.0),
    "desitter": dict(k=1.0, t0=1.0),
    "ads-portion": dict(k=-1.0, t0=math.pi / 4),
    "static-sphere": dict(k=1.0, t0=1.0),
    "friedmann-closed": dict(k=1.0, t0=None),
    "grw-counterexample": dict(k=0.0, t0=1.0),
}


def build_model(name: str, n: int = 4, chart: str = "polar", k: float | None = None, **params) -> GRWSpace:
    """Built-in spacetime by name; custom warps take their fibre curvature from ``k``."""
    if n < 3:
        raise ConfigError("spacetime dimension must be at least 3")
    key = "ads-portion" if name == "antidesitter-portion" else name
    warp = warp_from_name(key, **params)
    if k is None:
        if key not in MODEL_DEFAULTS:
            raise ConfigError(f"model {name!r} needs an explicit fibre curvature k")
        k = MODEL_DEFAULTS[key]["k"]
    return GRWSpace(warp, FiberSpace(n - 1, k, chart), key)
