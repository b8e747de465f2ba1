"""Null geodesics of GRW spaces and conjugate points along them.

A null geodesic from (t*, x*) with unit fibre direction u and speed c is
gamma(s) = (alpha(s), beta(s)) where

    F(alpha(s)) - F(t*) = c s          (F' = f),
    beta(s) = exp_{x*}(b(s) u),        b(s) = integral of 1/f from t* to alpha(s).

The scalar Jacobi equation J'' + Ric(g', g')/(n-2) J = 0 is checked against
the full system J'' = -R(J, g')g' integrated with the ambient curvature.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp

from . import jets as J
from .errors import (ConfigError, ConvergenceError, DomainError, IntervalExitError,
                     OutsideConeDomainError, PreconditionError, VertexError)
from .grw import GRWSpace
from .tensor import christoffel, riemann

RTOL = 1e-10
ATOL = 1e-12
UMBILIC_GATE = 1e-6
ZERO_XTOL = 1e-12
# the geodesic trace alone must conserve g(g', g') to 1e-10, which needs a tighter pair
TRACE_RTOL = 1e-13
TRACE_ATOL = 1e-14


def _fibre_frame(space: GRWSpace, x, u):
    """g_F-orthonormal basis of the complement of u at x (chart components)."""
    gF = space.fiber.metric(np.asarray(x, dtype=float))
    m = space.fiber.dim
    basis = [u]
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        for b in basis:
            e = e - (b @ gF @ e) * b
        ne = math.sqrt(max(e @ gF @ e, 0.0))
        if ne > 1e-8:
            basis.append(e / ne)
        if len(basis) == m:
            break
    return np.array(basis[1:])


def fibre_geodesic(space: GRWSpace, x_star, u, d):
    """Point and unit tangent of the fibre geodesic d -> exp_{x*}(d u), chart components."""
    fib = space.fiber
    x_star = np.asarray(x_star, dtype=float)
    d = np.atleast_1d(np.asarray(d, dtype=float))
    x = fib.exp(np.broadcast_to(x_star, (d.size, x_star.size)), np.outer(d, u))
    # model-space velocity -k sn(d) P0 + cs(d) T, pulled back by least squares
    cs0, Y0 = fib.model_point(x_star)
    dcs, dY = fib.tangent_to_model(x_star, u)
    sn = np.asarray(fib.sn(d), dtype=float)
    cs = np.asarray(fib.cs(d), dtype=float)
    vY = -fib.k * sn[:, None] * Y0 + cs[:, None] * dY
    vc = -fib.k * sn * cs0 + cs * dcs
    xj = J.Jet.variables(x, 1)
    mc, mY = fib.model_point(xj)
    Jy = mY.gradient_values()  # [b, a, i]
    Jc = mc.gradient_values()  # [b, i]
    if fib.k != 0:
        A = np.concatenate([Jc[:, None, :], Jy], axis=1)
        rhs = np.concatenate([vc[:, None], vY], axis=1)
    else:
        A, rhs = Jy, vY
    v = np.stack([np.linalg.lstsq(A[i], rhs[i], rcond=None)[0] for i in range(d.size)])
    return x, v


@dataclass
class NullGeodesic:
    """Closed-form null geodesic and its numeric trace."""

    space: GRWSpace
    t_star: float
    x_star: np.ndarray
    u: np.ndarray
    speed: float
    s: np.ndarray
    t: np.ndarray
    x: np.ndarray
    velocity: np.ndarray  # (t', x') in the stereo chart
    b: np.ndarray
    trace_s: np.ndarray | None = None
    trace: np.ndarray | None = None  # numeric (t, x, t', x')
    deviation: float | None = None

    @property
    def n(self):
        return self.space.n

    def alpha(self, s):
        return _alpha(self.space, self.t_star, self.speed, s)

    def null_residual(self) -> float:
        """max |g(g', g')| along the numeric trace (closed form if no trace)."""
        P, V = self._pv()
        G = np.asarray(self.space.metric_eval(P))
        return float(np.abs(np.einsum("bij,bi,bj->b", G, V, V)).max())

    def charge(self) -> np.ndarray:
        """g(gamma', f d_t) along the trace; constant for a geodesic."""
        P, V = self._pv()
        f = np.asarray(self.space.warp(P[:, 0]), dtype=float)
        return -f * V[:, 0]

    def cone_residual(self) -> float:
        """Distance from the trace to the cone of the start point."""
        P, _ = self._pv()
        fib = self.space.fiber
        d = fib.distance(P[:, 1:], np.broadcast_to(self.x_star, P[:, 1:].shape))
        w = self.space.warp
        c = np.array([w.Finv_int(self.t_star, t) for t in P[:, 0]])
        return float(np.abs(np.asarray(d) - c).max())

    def _pv(self):
        if self.trace is not None:
            n = self.n
            return self.trace[:, :n], self.trace[:, n:]
        return np.concatenate([self.t[:, None], self.x], axis=-1), self.velocity


def _alpha(space: GRWSpace, t_star: float, c: float, s):
    w = space.warp
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty_like(s)
    for i, si in enumerate(s):
        try:
            out[i] = w.inverse_F(t_star, c * si)
        except OutsideConeDomainError as exc:
            hi = w.interval[1] if si > 0 else w.interval[0]
            with np.errstate(all="ignore"):
                reach = abs(w.F_int(t_star, hi)) / c if math.isfinite(hi) else math.inf
            raise IntervalExitError(f"alpha leaves the interval of {w.name} at s = {reach}",
                                    parameter=reach) from exc
    return out


def _geodesic_rhs(space: GRWSpace):
    metric = space.ambient_chart()
    n = space.n

    def conn(p):
        G = metric.metric_jet(p, 1)
        return christoffel(G).value

    def rhs(s, y):
        p, v = y[:n], y[n:]
        Gam = conn(p)
        return np.concatenate([v, -np.einsum("abc,b,c->a", Gam, v, v)])

    return rhs


def null_geodesic(space: GRWSpace, t_star: float, x_star, u, s_max: float, speed: float = 1.0,
                  samples: int = 101, trace: bool = True) -> NullGeodesic:
    """Future null geodesic from (t*, x*) with fibre direction u (normalised here)."""
    if space.fiber.chart != "stereo":
        space = space.with_chart("stereo")
    w = space.warp
    if not w.contains(t_star):
        raise DomainError("start time outside the warp interval")
    if s_max <= 0 or speed <= 0:
        raise ConfigError("s_max and speed must be positive")
    x_star = np.asarray(x_star, dtype=float)
    u = np.asarray(u, dtype=float)
    gF = space.fiber.metric(x_star)
    nu = math.sqrt(u @ gF @ u)
    if nu == 0:
        raise ConfigError("fibre direction must be nonzero")
    u = u / nu
    s = np.linspace(0.0, s_max, samples)
    alpha = _alpha(space, t_star, speed, s)
    b = np.array([w.Finv_int(t_star, a) for a in alpha])
    x, tang = fibre_geodesic(space, x_star, u, b)
    f = np.asarray(w(alpha), dtype=float)
    vel = np.concatenate([(speed / f)[:, None], (speed / f ** 2)[:, None] * tang], axis=-1)
    geo = NullGeodesic(space, float(t_star), x_star, u, float(speed), s, alpha, x, vel, b)
    if trace:
        rhs = _geodesic_rhs(space)
        y0 = np.concatenate([[t_star], x_star, vel[0]])
        sol = solve_ivp(rhs, (0.0, s_max), y0, method="DOP853", rtol=TRACE_RTOL, atol=TRACE_ATOL,
                        t_eval=s)
        if not sol.success:
            raise ConvergenceError(f"geodesic integration failed: {sol.message}")
        geo.trace_s = sol.t
        geo.trace = sol.y.T
        closed = np.concatenate([alpha[:, None], x, vel], axis=-1)
        geo.deviation = float(np.abs(geo.trace - closed).max())
    return geo


# -- Jacobi fields ---------------------------------------------------------------------

@dataclass
class JacobiSolution:
    s: np.ndarray
    J: np.ndarray
    conjugate_points: list
    multiplicity: list
    method: str
    umbilic_residual: float | None = None
    full_zeros: list = field(default_factory=list)
    agreement: float | None = None
    reparam_factor: float | None = None
    meta: dict = field(default_factory=dict)

    def trace_dict(self, geodesic: NullGeodesic | None = None) -> dict:
        out = dict(s=self.s.tolist(), J=self.J.tolist(), conjugate_points=list(self.conjugate_points),
                   multiplicity=list(self.multiplicity), method=self.method)
        if geodesic is not None:
            t = geodesic.alpha(self.s)
            r = np.array([geodesic.space.warp.Finv_int(geodesic.t_star, a) for a in t])
            out["t"] = t.tolist()
            out["r"] = r.tolist()
        for key in ("umbilic_residual", "agreement", "reparam_factor"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.full_zeros:
            out["full_zeros"] = self.full_zeros
        out.update(self.meta)
        return out

    def to_json(self, geodesic=None, **kw) -> str:
        return json.dumps(self.trace_dict(geodesic), **kw)


def cone_umbilic_residual(geodesic: NullGeodesic) -> float:
    """Umbilicity residual of the lightcone of the start point (the cone containing gamma)."""
    from .hypersurface import Rigging, umbilicity_scan
    from .lightcone import ConeSpec, make_cone

    space = geodesic.space.with_chart("polar")
    spec = ConeSpec(geodesic.t_star)
    # the middle of the trace may lie past the cone's reach; step back toward the vertex
    for t_mid in geodesic.t[len(geodesic.t) // 2:0:-1]:
        try:
            cone = make_cone(space, spec, float(t_mid))
            break
        except (OutsideConeDomainError, VertexError):
            continue
    else:
        raise PreconditionError("no admissible cone level along the geodesic")
    x = cone.sample(np.random.default_rng(0), 24)
    rep = umbilicity_scan(cone, Rigging.f_dt(), x)
    return rep.residual


def _zeros(sol, s0: float, s1: float, fn, grid: int = 2000):
    """Sign changes of fn(s) (using dense output) refined by Brent's method."""
    ss = np.linspace(s0, s1, grid + 1)[1:]
    vals = np.array([fn(sol.sol(si)) for si in ss])
    out = []
    for i in range(len(ss) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            out.append(float(ss[i]))
        elif a * b < 0:
            out.append(float(optimize.brentq(lambda q: fn(sol.sol(q)), ss[i], ss[i + 1],
                                             xtol=ZERO_XTOL, rtol=4 * np.finfo(float).eps)))
    return out


def jacobi_scalar(geodesic: NullGeodesic, s_max: float | None = None, samples: int = 201,
                  gate: float = UMBILIC_GATE) -> JacobiSolution:
    """Scalar Jacobi equation with the closed-form null Ricci curvature."""
    resid = cone_umbilic_residual(geodesic)
    if resid > gate:
        raise PreconditionError(
            f"umbilicity residual {resid:.3e} exceeds {gate}; use the full Jacobi system")
    space = geodesic.space
    n = space.n
    c = geodesic.speed
    s_max = float(geodesic.s[-1]) if s_max is None else s_max
    ts = geodesic.t_star

    def ric(s):
        a = _alpha(space, ts, c, s)[0]
        return c * c * float(space.null_ricci(a, None))

    def rhs(s, y):
        return [y[1], -ric(s) / (n - 2) * y[0]]

    sol = solve_ivp(rhs, (0.0, s_max), [0.0, 1.0], method="DOP853", rtol=RTOL, atol=ATOL,
                    dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"scalar Jacobi integration failed: {sol.message}")
    zeros = _zeros(sol, 0.0, s_max, lambda y: y[0])
    s = np.linspace(0.0, s_max, samples)
    Jv = sol.sol(s)[0]
    return JacobiSolution(s, Jv, zeros, [n - 2] * len(zeros), "scalar", umbilic_residual=resid,
                          reparam_factor=c)


def _full_system(geodesic: NullGeodesic):
    space = geodesic.space
    metric = space.ambient_chart()
    n = space.n
    k = n - 2

    def curv(p):
        G = metric.metric_jet(p, 2)
        Gam = christoffel(G)
        return Gam.value, riemann(Gam).value

    def unpack(y):
        p, v = y[:n], y[n:2 * n]
        rest = y[2 * n:].reshape(3, k, n)
        return p, v, rest[0], rest[1], rest[2]

    def rhs(s, y):
        p, v, Jf, Wf, Ef = unpack(y)
        Gam, R = curv(p)
        dp = v
        dv = -np.einsum("abc,b,c->a", Gam, v, v)
        gv = np.einsum("abc,b->ac", Gam, v)  # Gamma(v, .)
        dJ = Wf - Jf @ gv.T
        # R(J, v) v with R(U,V)W^a = R^a_bcd W^b U^c V^d
        RJ = np.einsum("abcd,b,ic,d->ia", R, v, Jf, v)
        dW = -Wf @ gv.T - RJ
        dE = -Ef @ gv.T
        return np.concatenate([dp, dv, dJ.ravel(), dW.ravel(), dE.ravel()])

    return rhs, unpack


def jacobi_cross_check(geodesic: NullGeodesic, s_max: float | None = None,
                       scalar: JacobiSolution | None = None, rank_tol: float = 1e-6) -> JacobiSolution:
    """Full Jacobi system for n-2 screen initial directions; zeros, multiplicity, agreement."""
    space = geodesic.space
    n = space.n
    s_max = float(geodesic.s[-1]) if s_max is None else s_max
    p0 = np.concatenate([[geodesic.t_star], geodesic.x_star])
    v0 = geodesic.velocity[0]
    f0 = float(space.warp(geodesic.t_star))
    E = _fibre_frame(space, geodesic.x_star, geodesic.u) / f0  # g-unit, orthogonal to gamma' and d_t
    E = np.concatenate([np.zeros((E.shape[0], 1)), E], axis=-1)
    zeros = np.zeros_like(E)
    rhs, unpack = _full_system(geodesic)
    y0 = np.concatenate([p0, v0, zeros.ravel(), E.ravel(), E.ravel()])
    sol = solve_ivp(rhs, (0.0, s_max), y0, method="DOP853", rtol=RTOL, atol=ATOL,
                    dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"Jacobi system integration failed near s = {sol.t[-1]}: {sol.message}")

    def screen_matrix(y):
        p, _v, Jf, _W, Ef = unpack(y)
        G = np.asarray(space.metric_eval(p))
        return Jf @ G @ Ef.T

    comp_zeros = []
    for j in range(n - 2):
        comp_zeros.append(_zeros(sol, 0.0, s_max, lambda y, j=j: screen_matrix(y)[j, j]))
    cands = sorted({round(z, 9): z for zs in comp_zeros for z in zs}.values())
    conj, mult = [], []
    for z in cands:
        if any(abs(z - c0) < 1e-6 for c0 in conj):
            continue
        sv = np.linalg.svd(screen_matrix(sol.sol(z)), compute_uv=False)
        ref = max(np.linalg.svd(screen_matrix(sol.sol(max(z - 0.25, z / 2))), compute_uv=False).max(), 1e-300)
        drop = int(np.sum(sv <= rank_tol * ref))
        if drop:
            conj.append(z)
            mult.append(drop)
    s = np.linspace(0.0, s_max, 201)
    Jdiag = np.array([np.diag(screen_matrix(sol.sol(si))) for si in s])
    out = JacobiSolution(s, Jdiag, conj, mult, "full", full_zeros=[list(z) for z in comp_zeros])
    if scalar is not None:
        out.agreement = _zero_agreement(scalar.conjugate_points, comp_zeros)
        out.umbilic_residual = scalar.umbilic_residual
    return out


def _zero_agreement(scalar_zeros, comp_zeros) -> float:
    """Largest distance between scalar zeros and the zeros of every full component."""
    worst = 0.0
    for zs in comp_zeros:
        if len(zs) != len(scalar_zeros):
            return math.inf
        for a, b in zip(scalar_zeros, zs):
            worst = max(worst, abs(a - b))
    return worst


def default_start(space: GRWSpace):
    """Start point and direction used by the command line: the default cone vertex,
    a fibre point off the chart centre so great circles avoid the chart's missing point."""
    from .lightcone import default_cone_spec

    spec = default_cone_spec(space.with_chart("polar"))
    m = space.n - 1
    x_star = np.zeros(m)
    x_star[0] = 0.3
    u = np.zeros(m)
    u[1 if m > 1 else 0] = 1.0
    return spec.t_star, x_star, u


def run_jacobi(space: GRWSpace, s_max: float, direction=None, speed: float = 1.0,
               t_star: float | None = None) -> dict:
    """Closed-form geodesic, scalar and full Jacobi integrations, and their agreement."""
    space = space.with_chart("stereo")
    t0, x_star, u = default_start(space)
    t_star = t0 if t_star is None else float(t_star)
    if direction is not None:
        u = np.asarray(direction, dtype=float)
    geo = null_geodesic(space, t_star, x_star, u, s_max, speed)
    full = None
    try:
        sc = jacobi_scalar(geo)
    except PreconditionError as exc:
        sc = None
        gate_note = str(exc)
    else:
        gate_note = ""
    full = jacobi_cross_check(geo, scalar=sc)
    primary = sc if sc is not None else full
    out = primary.trace_dict(geo)
    out.update(model=space.name, n=space.n, s_max=s_max, t_star=t_star,
               x_star=list(x_star), direction=list(geo.u), speed=speed,
               full_conjugate_points=full.conjugate_points, full_multiplicity=full.multiplicity,
               geodesic_deviation=geo.deviation, null_residual=geo.null_residual())
    if sc is not None:
        out["agreement"] = full.agreement
        out["agree"] = bool(full.agreement is not None and full.agreement <= 1e-6)
    else:
        out["scalar_refused"] = gate_note
    return out
