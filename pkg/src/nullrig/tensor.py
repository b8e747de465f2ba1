"""Coordinate-chart curvature: Christoffel symbols, Riemann and Ricci tensors.

Curvature convention: R(U,V)W = nabla_U nabla_V W - nabla_V nabla_U W - nabla_[U,V] W,
stored as R[a, b, c, d] = R^a_{bcd} with R(d_c, d_d) d_b = R^a_{bcd} d_a.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .errors import DegenerateMetricError, DegeneratePlaneError, DomainError, PreconditionError


# -- jet-level building blocks (shared with the hypersurface module) -------

def christoffel(G: J.Jet, Ginv: J.Jet | None = None) -> J.Jet:
    """Gamma[a, b, c] = Gamma^a_{bc}; order drops by one."""
    if Ginv is None:
        Ginv = J.inv(G)
    dG = G.grad()  # dG[a, b, c] = d_c g_ab
    S = dG.swapaxes(-1, -2) + dG - dG.swapaxes(-3, -1).swapaxes(-2, -1)
    # S[d, b, c] = d_b g_dc + d_c g_db - d_d g_bc
    return 0.5 * J.einsum("...ad,...dbc->...abc", Ginv, S)


def riemann(Gamma: J.Jet) -> J.Jet:
    """R[a, b, c, d] = R^a_{bcd}; order drops by one relative to Gamma."""
    dGam = Gamma.grad()  # dGam[a, b, c, e] = d_e Gamma^a_bc
    # d_c Gamma^a_{db}: index pattern [a, d, b, c] -> want [a, b, c, d]
    t1 = J.Jet(np.einsum("...adbcM->...abcdM", dGam.c), dGam.space)
    t2 = t1.swapaxes(-1, -2)
    Gl = Gamma.truncate(Gamma.order - 1)
    q = J.einsum("...ace,...edb->...abcd", Gl, Gl)
    return t1 - t2 + q - q.swapaxes(-1, -2)


def ricci(R):
    """Ric_{bd} = R^a_{bad}; works for jets and arrays."""
    if isinstance(R, J.Jet):
        return J.Jet(np.einsum("...abadM->...bdM", R.c), R.space)
    return np.einsum("...abad->...bd", R)


def curvature_operator(R, u, v, w):
    """(R(u, v) w)^a = R^a_{bcd} w^b u^c v^d for arrays."""
    return np.einsum("...abcd,...b,...c,...d->...a", R, w, u, v)


def gdot(G, u, v):
    return np.einsum("...ij,...i,...j->...", G, u, v)


# -- chart metrics ------------------------------------------------------

@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature data at one or more points (leading batch axes allowed)."""

    g: np.ndarray
    Gamma: np.ndarray
    Riem: np.ndarray
    Ric: np.ndarray
    scal: np.ndarray

    def R(self, u, v, w):
        return curvature_operator(self.Riem, u, v, w)


class ChartMetric:
    """A pseudo-Riemannian metric on a coordinate chart.

    ``g_eval`` maps coordinates (array or jet of shape (..., n)) to the metric
    matrix (..., n, n); it must be written with the jet-aware functions of
    :mod:`nullrig.jets` so that derivatives are exact.
    """

    def __init__(self, dim: int, signature: Sequence[int], g_eval: Callable,
                 domain: Callable | None = None, name: str = "chart"):
        if dim < 2:
            raise ValueError("dimension must be at least 2")
        self.dim = dim
        self.signature = tuple(int(s) for s in signature)
        if len(self.signature) != dim:
            raise ValueError("signature length must equal dim")
        self.g_eval = g_eval
        self.domain = domain
        self.name = name

    def __repr__(self):
        return f"ChartMetric({self.name!r}, dim={self.dim})"

    def check_domain(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dim:
            raise DomainError(f"point has {p.shape[-1]} coordinates, chart has {self.dim}")
        if not np.all(np.isfinite(p)):
            raise DomainError("non-finite coordinates")
        if self.domain is not None and not np.all(self.domain(p)):
            raise DomainError(f"point outside the domain of {self.name}")
        return p

    def metric(self, p) -> np.ndarray:
        p = self.check_domain(p)
        return np.asarray(self.g_eval(p), dtype=float)

    def metric_jet(self, p, order: int = 2) -> J.Jet:
        p = self.check_domain(p)
        x = J.Jet.variables(p, order)
        G = self.g_eval(x)
        if not isinstance(G, J.Jet):
            G = J.Jet.constant(np.broadcast_to(G, p.shape[:-1] + (self.dim, self.dim)), x.space)
        return G


def _check_nondegenerate(g):
    det = np.linalg.det(g)
    scale = np.prod(np.abs(np.diagonal(g, axis1=-2, axis2=-1)) + 1e-300, axis=-1)
    if np.any(~np.isfinite(det)) or np.any(np.abs(det) <= 1e-13 * np.maximum(scale, 1.0)):
        raise DegenerateMetricError("metric matrix is singular at the requested point")


def signature_of(g) -> np.ndarray:
    """Eigenvalue signs of a symmetric matrix (sorted ascending)."""
    return np.sign(np.linalg.eigvalsh(g))


def curvature_at(metric: ChartMetric, p) -> CurvatureBundle:
    """Christoffel symbols and curvature from exact second-order jets of g."""
    G = metric.metric_jet(p, 2)
    g0 = G.value
    _check_nondegenerate(g0)
    Gam = christoffel(G)
    R = riemann(Gam)
    Rv = R.value
    Ric = ricci(Rv)
    ginv = np.linalg.inv(g0)
    scal = np.einsum("...ij,...ij->...", ginv, Ric)
    return CurvatureBundle(g=g0, Gamma=Gam.value, Riem=Rv, Ric=Ric, scal=scal)


def sectional(metric: ChartMetric, p, u, v, bundle: CurvatureBundle | None = None) -> np.ndarray:
    """Sectional curvature g(R(u,v)v,u) / (g(u,u)g(v,v) - g(u,v)^2)."""
    b = bundle if bundle is not None else curvature_at(metric, p)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    den = gdot(b.g, u, u) * gdot(b.g, v, v) - gdot(b.g, u, v) ** 2
    euclid = np.sum(u * u, axis=-1) * np.sum(v * v, axis=-1)
    if np.any(np.abs(den) <= 1e-10 * euclid):
        raise DegeneratePlaneError("plane is degenerate; use lightlike_sectional")
    num = gdot(b.g, b.R(u, v, v), u)
    return num / den


def lightlike_sectional(metric: ChartMetric, p, xi, x, bundle: CurvatureBundle | None = None,
                        tol: float = 1e-10) -> np.ndarray:
    """Null sectional curvature g(R(x, xi) xi, x) / g(x, x) of span(xi, x)."""
    b = bundle if bundle is not None else curvature_at(metric, p)
    xi = np.asarray(xi, dtype=float)
    x = np.asarray(x, dtype=float)
    scale = np.sqrt(np.abs(gdot(b.g, x, x))) * np.linalg.norm(xi, axis=-1)
    if np.any(np.abs(gdot(b.g, xi, xi)) > tol * np.maximum(np.linalg.norm(xi, axis=-1) ** 2, 1.0)):
        raise PreconditionError("xi is not lightlike")
    if np.any(gdot(b.g, x, x) <= 0):
        raise PreconditionError("x must be spacelike")
    if np.any(np.abs(gdot(b.g, xi, x)) > tol * np.maximum(scale, 1.0)):
        raise PreconditionError("x is not orthogonal to xi")
    return gdot(b.g, b.R(x, xi, xi), x) / gdot(b.g, x, x)


# -- finite-difference oracle ----------------------------------------------

def _fd_first(fn, p, k, h):
    e = np.zeros(p.shape[-1])
    e[k] = h
    return (fn(p + e) - fn(p - e)) / (2 * h)


def fd_metric_derivatives(metric: ChartMetric, p, h1: float = 1e-5, h2: float = 1e-3):
    """Central-difference first and second derivatives of g, Richardson-extrapolated.

    Returns (g, dg, ddg) with dg[..., a, b, c] = d_c g_ab and
    ddg[..., a, b, c, d] = d_c d_d g_ab.
    """
    p = metric.check_domain(p)
    n = metric.dim
    fn = metric.metric
    g = fn(p)
    dg = np.empty(g.shape + (n,))
    ddg = np.empty(g.shape + (n, n))
    for c in range(n):
        dg[..., c] = (4 * _fd_first(fn, p, c, h1 / 2) - _fd_first(fn, p, c, h1)) / 3
        for d in range(n):
            def mixed(step):
                return _fd_first(lambda q: _fd_first(fn, q, d, step), p, c, step)
            ddg[..., c, d] = (4 * mixed(h2 / 2) - mixed(h2)) / 3
    return g, dg, ddg


def curvature_from_derivatives(g, dg, ddg) -> CurvatureBundle:
    """Assemble Gamma and Riemann from float metric derivatives (FD oracle path)."""
    ginv = np.linalg.inv(g)
    S = np.swapaxes(dg, -1, -2) + dg - np.einsum("...bcd->...dbc", dg)
    Gam = 0.5 * np.einsum("...ad,...dbc->...abc", ginv, S)
    # derivative of Gamma: d_e Gamma^a_bc
    dginv = -np.einsum("...ai,...ije,...jd->...ade", ginv, dg, ginv)
    dS = (np.swapaxes(ddg, -2, -3) + ddg - np.einsum("...bcde->...dbce", ddg))
    dGam = 0.5 * (np.einsum("...ade,...dbc->...abce", dginv, S)
                  + np.einsum("...ad,...dbce->...abce", ginv, dS))
    t1 = np.einsum("...adbc->...abcd", dGam)
    q = np.einsum("...ace,...edb->...abcd", Gam, Gam)
    R = t1 - np.swapaxes(t1, -1, -2) + q - np.swapaxes(q, -1, -2)
    Ric = ricci(R)
    return CurvatureBundle(g=g, Gamma=Gam, Riem=R, Ric=Ric,
                           scal=np.einsum("...ij,...ij->...", ginv, Ric))


def curvature_fd(metric: ChartMetric, p, h1: float = 1e-5, h2: float = 1e-3) -> CurvatureBundle:
    return curvature_from_derivatives(*fd_metric_derivatives(metric, p, h1, h2))
