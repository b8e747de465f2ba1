"""Rigged lightlike graph hypersurfaces t = h(x) in a GRW spacetime.

All geometry is computed in the adapted chart (u, x) with t = h(x) + u, in
which the hypersurface is {u = 0} and its intrinsic chart is the fibre chart
x.  Ambient objects are built as exact Taylor jets in (u, x) and then
restricted to u = 0; intrinsic objects only differentiate along x.

Index conventions for batched arrays (leading axis = sample points):
ambient vectors have n components (u first), intrinsic vectors have m = n-1
components (the x chart), bilinear forms on TL are (m, m) matrices in the
coordinate basis d/dx_i.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets as J
from .errors import DomainError, PreconditionError, RiggingError
from .grw import GRWSpace
from .tensor import christoffel, riemann

JET_ORDER = 3  # order of the adapted-chart metric jet
FD_STEP = 1e-2


# -- hypersurfaces and riggings ------------------------------------------------

class GraphHypersurface:
    """Graph {t = h(x)} over the fibre chart of ``space``.

    ``h`` maps fibre chart points (..., m) to times and must be jet-aware.
    ``sampler(rng, count)`` returns fibre points inside the domain.
    """

    def __init__(self, space: GRWSpace, h: Callable, name: str = "graph",
                 domain: Callable | None = None, sampler: Callable | None = None, meta=None):
        self.space = space
        self.h = h
        self.name = name
        self._domain = domain
        self._sampler = sampler
        self.meta = dict(meta or {})

    def __repr__(self):
        return f"GraphHypersurface({self.name!r} in {self.space.name})"

    @property
    def n(self) -> int:
        return self.space.n

    def in_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ok = self.space.fiber.in_domain(x)
        if self._domain is not None:
            ok = ok & self._domain(x)
        return ok

    def check_domain(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[-1] != self.n - 1:
            raise DomainError(f"expected {self.n - 1} fibre coordinates, got {x.shape[-1]}")
        if not np.all(np.isfinite(x)) or not np.all(self.in_domain(x)):
            raise DomainError(f"point outside the domain of {self.name}")
        t = np.asarray(self.height(x))
        if not np.all(self.space.warp.contains(t)):
            raise DomainError(f"graph of {self.name} leaves the warp interval")
        return x

    def height(self, x):
        return self.h(x)

    def point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        t = np.asarray(self.height(x), dtype=float)
        return np.concatenate([t[..., None], x], axis=-1)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self._sampler is None:
            raise PreconditionError(f"{self.name} has no sampler")
        return self._sampler(rng, count)


@dataclass(frozen=True)
class Rigging:
    """Transverse vector field zeta along the hypersurface.

    ``field(space, p)`` returns the components of zeta in the (t, x) chart and
    must be jet-aware in p.
    """

    kind: str
    field: Callable
    is_closed: bool = False
    is_conformal: bool = False
    is_timelike: bool = False

    @classmethod
    def f_dt(cls) -> "Rigging":
        """zeta = f(t) d_t: timelike, closed and conformal."""
        def fld(space, p):
            t = p[..., 0]
            ft = space.warp(t)
            zero = t * 0.0
            return _stack_vec([ft] + [zero] * (space.n - 1))
        return cls("f_dt", fld, True, True, True)

    @classmethod
    def grad_t(cls, static: bool = False) -> "Rigging":
        """zeta = grad t = -d_t: closed; conformal only when f is constant."""
        def fld(space, p):
            t = p[..., 0]
            zero = t * 0.0
            return _stack_vec([zero - 1.0] + [zero] * (space.n - 1))
        return cls("grad_t", fld, True, static, True)

    @classmethod
    def custom(cls, field: Callable, closed: bool = False, conformal: bool = False,
               timelike: bool = False) -> "Rigging":
        return cls("custom", field, closed, conformal, timelike)

    @classmethod
    def from_name(cls, name: str, space: GRWSpace | None = None) -> "Rigging":
        if name == "f_dt":
            return cls.f_dt()
        if name == "grad_t":
            return cls.grad_t(static=bool(space is not None and space.warp.static))
        raise RiggingError(f"unknown rigging {name!r}; custom riggings need a field")


def _stack_vec(items):
    if any(J.is_jet(i) for i in items):
        return J.stack(items, axis=-1)
    arrs = np.broadcast_arrays(*[np.asarray(i, dtype=float) for i in items])
    return np.stack(arrs, axis=-1)


def _as_jet(x, space):
    if J.is_jet(x):
        return x
    return J.Jet.constant(np.asarray(x, dtype=float), space)


# -- the batched rigging apparatus ---------------------------------------------------

def _cov_tensor02(T: J.Jet, Conn: np.ndarray) -> np.ndarray:
    """(nabla_k T)_{ij} as out[..., k, i, j] from a jet T and connection values Conn[p, k, i]."""
    dT = T.gradient_values()  # [..., i, j, k]
    out = np.einsum("...ijk->...kij", dT)
    out -= np.einsum("...pki,...pj->...kij", Conn, T.value)
    out -= np.einsum("...pkj,...ip->...kij", Conn, T.value)
    return out


class RiggedGeometry:
    """Rigging apparatus at a batch of fibre points of a graph hypersurface.

    mode="jet" differentiates h, g and zeta exactly; mode="fd" replaces them by
    least-squares Taylor fits on a finite grid (the cross-check path).
    """

    def __init__(self, surface: GraphHypersurface, rigging: Rigging, x, mode: str = "jet",
                 order: int = JET_ORDER, fd_step: float = FD_STEP):
        if mode not in ("jet", "fd"):
            raise ValueError("mode must be 'jet' or 'fd'")
        self.surface = surface
        self.rigging = rigging
        self.space = space = surface.space
        self.mode = mode
        self.x = x = surface.check_domain(x)
        self.n = n = space.n
        self.m = m = n - 1
        self.batch = x.shape[0]
        K = order

        # jets of h in the fibre variables and of the ambient data in (t, x)
        if mode == "jet":
            hx = _as_jet(surface.height(J.Jet.variables(x, K + 1)), J.JetSpace.get(m, K + 1))
        else:
            hx = J.fit_taylor(lambda q: np.asarray(surface.height(q), dtype=float), x, K + 1,
                              fd_step, fit_degree=K + 3)
        self.h0 = hx.value
        self.hx = hx
        uvars = J.Jet.variables(np.concatenate([np.zeros((self.batch, 1)), x], axis=-1), K)
        dh = hx.grad().embed(0)  # (B, m), order K
        t = hx.truncate(K).embed(0) + uvars[..., 0]
        coords = J.stack([t] + [uvars[..., i] for i in range(1, n)], axis=-1)
        base = np.concatenate([self.h0[:, None], x], axis=-1)
        self.base = base
        if mode == "jet":
            g_o = space.metric_eval(coords)
            z_o = _as_jet(rigging.field(space, coords), coords.space)
        else:
            P = J.fit_taylor(space.metric_eval, base, K, fd_step, fit_degree=K + 2)
            g_o = J.compose(P, coords)
            Pz = J.fit_taylor(lambda q: np.asarray(rigging.field(space, q), dtype=float),
                              base, K, fd_step, fit_degree=K + 2)
            z_o = J.compose(Pz, coords)

        # Jacobian of (u, x) -> (t, x)
        cJ = np.zeros((self.batch, n, n, dh.space.M))
        cJ[:, 0, 0, 0] = 1.0
        cJ[:, 0, 1:, :] = dh.c
        for i in range(1, n):
            cJ[:, i, i, 0] = 1.0
        Jac = J.Jet(cJ, dh.space)
        self.jac = Jac.value
        G = J.einsum("...ab,...bc->...ac", Jac.T, J.einsum("...ab,...bc->...ac", g_o, Jac))
        zeta = z_o.copy()
        zeta.c[..., 0, :] = (z_o[..., 0] - J.dot(dh, z_o[..., 1:])).c
        self._zeta_orig = z_o.value

        Ginv = J.inv(G)
        Gam = christoffel(G, Ginv)
        Riem = riemann(Gam)
        alpha = J.matvec(G, zeta)
        zu = zeta[..., 0]
        if np.any(np.abs(zu.value) < 1e-12):
            raise RiggingError("rigging is tangent to the hypersurface at a sample point")
        nu = Ginv[..., :, 0]
        xi = nu / zu.expand_dims(-1)
        gzz = J.dot(zeta, alpha)
        N = zeta - xi * (0.5 * gzz).expand_dims(-1)

        # exterior derivative of alpha and Lie derivative of g along zeta (ambient)
        dal = alpha.grad()  # [a, b] = d_b alpha_a
        self._dalpha_amb = (dal.T - dal).restrict(0)  # d_a alpha_b - d_b alpha_a
        dz = zeta.grad()  # [c, a] = d_a zeta^c
        dG = G.grad()  # [a, b, c] = d_c g_ab
        lie = J.einsum("...abc,...c->...ab", dG.truncate(K - 1), zeta.truncate(K - 1)) \
            + J.einsum("...cb,...ca->...ab", G.truncate(K - 1), dz) \
            + J.einsum("...ac,...cb->...ab", G.truncate(K - 1), dz)
        self._lie_zeta_g_amb = lie.restrict(0)

        # restriction to u = 0 ------------------------------------------------
        self.G = G.restrict(0)
        self.Ginv = Ginv.restrict(0)
        self.Gam = Gam.restrict(0)
        self.Riem = Riem.restrict(0)
        self.zeta = zeta.restrict(0)
        self.alpha = alpha.restrict(0)
        self.xi_amb = xi.restrict(0)
        self.N_amb = N.restrict(0)
        self._build_intrinsic()

    # -- intrinsic quantities ------------------------------------------------------
    def _build_intrinsic(self):
        G, Gam = self.G, self.Gam
        self.xi = self.xi_amb[..., 1:]
        self.omega = self.alpha[..., 1:]
        self.g_ind = J.Jet(G.c[..., 1:, 1:, :], G.space)
        om = self.omega
        self.gt = self.g_ind + J.einsum("...i,...j->...ij", om, om)
        self.gt_inv = J.inv(self.gt)
        self.Gam_t = christoffel(self.gt, self.gt_inv)
        self.Riem_t = riemann(self.Gam_t)

        # ambient covariant derivatives along the coordinate fields of TL
        self.Dxi = self.cov_amb(self.xi_amb)  # [a, i] = (nabla_{E_i} xi)^a
        self.DN = self.cov_amb(self.N_amb)
        Gt = G.truncate(self.Dxi.order)
        GDxi = J.einsum("...ab,...bi->...ai", Gt, self.Dxi)
        self.B = -J.Jet(GDxi.c[..., 1:, :, :], GDxi.space).T  # B[i, j] = -g(nabla_i xi, E_j)
        xi_l = self.xi_amb.truncate(self.Dxi.order)
        N_l = self.N_amb.truncate(self.Dxi.order)
        self.tau = J.einsum("...ai,...a->...i", J.einsum("...ab,...bi->...ai", Gt, self.DN), xi_l)
        tau_e = self.tau.expand_dims(-2)
        self.Astar_amb = -self.Dxi - xi_l.expand_dims(-1) * tau_e  # [a, i]
        self.A_amb = N_l.expand_dims(-1) * tau_e - self.DN
        GA = J.einsum("...ab,...bi->...ai", Gt, self.A_amb)
        self.C = J.Jet(GA.c[..., 1:, :, :], GA.space).T  # C[i, j] = g(A(E_i), E_j)

        # induced connection nabla^L: tangential part of nabla along N
        Bn = self.B
        Gam_tl = J.Jet(Gam.c[..., :, 1:, 1:, :], Gam.space)  # [a, i, j]
        L_full = Gam_tl - J.einsum("...ij,...a->...aij", Bn, N_l)
        self.L = J.Jet(L_full.c[..., 1:, :, :, :], L_full.space)
        self.L_normal = J.Jet(L_full.c[..., 0, :, :, :], L_full.space)  # must vanish
        self.Riem_L = riemann(self.L)

        gti = self.gt_inv.truncate(Bn.order)
        self.H = J.einsum("...ij,...ij->...", gti, Bn)

    def cov_amb(self, V: J.Jet) -> J.Jet:
        """Ambient covariant derivative of an ambient field along TL: out[a, i]."""
        dV = V.grad()  # [a, i]
        Gam = self.Gam.truncate(dV.order)
        Gi = J.Jet(Gam.c[..., :, 1:, :, :], Gam.space)  # [a, i, b]
        return dV + J.einsum("...aib,...b->...ai", Gi, V.truncate(dV.order))

    # -- helpers on values -------------------------------------------------------------
    def embed(self, v) -> np.ndarray:
        """Intrinsic components (..., m) -> ambient components (..., n)."""
        v = np.asarray(v, dtype=float)
        return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)

    def g(self, a, b) -> np.ndarray:
        return np.einsum("...ab,...a,...b->...", self.G.value, a, b)

    def gt_(self, a, b) -> np.ndarray:
        return np.einsum("...ab,...a,...b->...", self.gt.value, a, b)

    def screen_project(self, v) -> np.ndarray:
        """TL -> screen: v - omega(v) xi (intrinsic components)."""
        om = self.omega.value
        return v - np.einsum("...i,...i->...", om, v)[..., None] * self.xi.value

    def screen_basis(self) -> np.ndarray:
        """g-orthonormal screen frame, shape (B, m, m-1), by Gram-Schmidt of projected d/dx_i.

        Candidates are taken longest first; one whose remainder is tiny relative
        to its projected length (numerically along xi) is skipped.
        """
        B, m = self.batch, self.m
        gt = self.gt.value
        P = np.eye(m)[None] - self.omega.value[:, None, :] * self.xi.value[:, :, None]  # [b, i, cand]
        lens = np.sqrt(np.maximum(np.einsum("bij,bik,bkj->bj", gt, P, P), 0.0))
        out = np.zeros((B, m, m - 1))
        for b in range(B):
            vecs = []
            scale = lens[b].max()
            for i in np.argsort(-lens[b], kind="stable"):
                v = P[b, :, i]
                for w in vecs:
                    v = v - (w @ gt[b] @ v) * w
                nv = np.sqrt(max(v @ gt[b] @ v, 0.0))
                if nv > 1e-3 * scale and len(vecs) < m - 1:
                    vecs.append(v / nv)
            if len(vecs) != m - 1:
                raise PreconditionError("screen basis construction failed")
            out[b] = np.stack(vecs, axis=-1)
        return out

    def tl_frame(self) -> np.ndarray:
        """g~-orthonormal frame (xi, e_1, ..., e_{m-1}) of TL, shape (B, m, m)."""
        return np.concatenate([self.xi.value[..., None], self.screen_basis()], axis=-1)

    def to_original(self, v_amb) -> np.ndarray:
        """Ambient adapted components -> (t, x) chart components."""
        return np.einsum("...ab,...b->...a", self.jac, v_amb)

    # -- derived tensors on values -------------------------------------------------------
    def cov_L(self, T: J.Jet) -> np.ndarray:
        return _cov_tensor02(T, self.L.value)

    def cov_t(self, T: J.Jet) -> np.ndarray:
        return _cov_tensor02(T, self.Gam_t.value)

    def exterior(self, w: J.Jet) -> np.ndarray:
        """d w as out[..., i, j] = d_i w_j - d_j w_i (no 1/2)."""
        dw = w.gradient_values()  # [j, i] = d_i w_j
        return np.swapaxes(dw, -1, -2) - dw

    def lie_xi_gt(self) -> np.ndarray:
        xi = self.xi.value
        dxi = self.xi.gradient_values()  # [k, i] = d_i xi^k
        gt = self.gt.value
        dgt = self.gt.gradient_values()  # [i, j, k]
        return (np.einsum("...ijk,...k->...ij", dgt, xi)
                + np.einsum("...kj,...ki->...ij", gt, dxi)
                + np.einsum("...ik,...kj->...ij", gt, dxi))

    def div_t(self, V: J.Jet) -> np.ndarray:
        dv = V.gradient_values()
        return np.einsum("...ii->...", dv) + np.einsum("...iik,...k->...", self.Gam_t.value, V.value)

    def nabla_t_vec(self, V: J.Jet) -> np.ndarray:
        """Intrinsic covariant derivative of a jet vector field: out[k, i] = (nabla~_i V)^k."""
        return V.gradient_values() + np.einsum("...kij,...j->...ki", self.Gam_t.value, V.value)

    def nabla_t_xi(self) -> J.Jet:
        """Jet of S(E_i) = nabla~_{E_i} xi as [k, i] (order drops by one)."""
        dxi = self.xi.grad()
        return dxi + J.einsum("...kij,...j->...ki", self.Gam_t.truncate(dxi.order),
                              self.xi.truncate(dxi.order))

    def dalpha(self) -> np.ndarray:
        return self._dalpha_amb.value

    def lie_zeta_g(self) -> np.ndarray:
        return self._lie_zeta_g_amb.value


# -- single-point frame ------------------------------------------------------------

@dataclass
class LightlikeFrame:
    """Rigging apparatus at one point, in (t, x) chart components for ambient vectors
    and in the fibre coordinate basis d/dx_i for forms on TL."""

    point: np.ndarray
    xi: np.ndarray
    N: np.ndarray
    zeta: np.ndarray
    screen: np.ndarray  # ambient (t, x) components, shape (n, n-2)
    screen_intrinsic: np.ndarray  # fibre-chart components, shape (n-1, n-2)
    omega: np.ndarray
    gtilde: np.ndarray
    B: np.ndarray
    C: np.ndarray
    tau: np.ndarray
    Astar: np.ndarray  # screen endomorphism in the orthonormal screen frame
    H: float
    g: np.ndarray  # ambient metric in (t, x) components

    def gdot(self, a, b):
        return float(a @ self.g @ b)


def frame_at(surface: GraphHypersurface, rigging: Rigging, x, mode: str = "jet") -> LightlikeFrame:
    geo = RiggedGeometry(surface, rigging, np.atleast_2d(x), mode=mode)
    return frames_from(geo)[0]


def frames_from(geo: RiggedGeometry) -> list:
    E = geo.screen_basis()
    out = []
    Jac = geo.jac
    for b in range(geo.batch):
        Eb = E[b]
        screen_amb = Jac[b] @ geo.embed(Eb.T).T
        Bv = geo.B.value[b]
        Ast = Eb.T @ Bv @ Eb  # orthonormal screen: A* matrix equals B restricted
        Jinv_T = np.linalg.inv(Jac[b]).T
        g_orig = Jinv_T @ geo.G.value[b] @ np.linalg.inv(Jac[b])
        out.append(LightlikeFrame(
            point=geo.base[b].copy(),
            xi=Jac[b] @ geo.xi_amb.value[b],
            N=Jac[b] @ geo.N_amb.value[b],
            zeta=geo._zeta_orig[b].copy(),
            screen=screen_amb,
            screen_intrinsic=Eb,
            omega=geo.omega.value[b],
            gtilde=geo.gt.value[b],
            B=Bv,
            C=geo.C.value[b] @ Eb,
            tau=geo.tau.value[b],
            Astar=Ast,
            H=float(geo.H.value[b]),
            g=g_orig,
        ))
    return out


# -- reports -----------------------------------------------------------------------

@dataclass
class GraphReport:
    eikonal: float
    remark: float
    count: int

    def passed(self, tol: float = 1e-9) -> bool:
        return self.eikonal <= tol and self.remark <= tol


def check_lightlike_graph(surface: GraphHypersurface, x) -> GraphReport:
    """Max | |grad h|_F - f(h) | and the residual of nabla_{grad h} grad h = f f'(h) grad h."""
    x = surface.check_domain(x)
    space = surface.space
    fib = space.fiber
    hx = _as_jet(surface.height(J.Jet.variables(x, 2)), J.JetSpace.get(x.shape[-1], 2))
    gF = _as_jet(fib.metric(J.Jet.variables(x, 2)), hx.space)
    gFinv = J.inv(gF)
    grad = J.matvec(gFinv.truncate(1), hx.grad())
    gv = grad.value
    norm = np.sqrt(np.einsum("...ij,...i,...j->...", gF.value, gv, gv))
    fd = space.warp.derivatives(hx.value, 1)
    eik = np.abs(norm - fd[..., 0])
    GamF = christoffel(gF, gFinv).value
    nab = np.einsum("...ki,...i->...k", grad.gradient_values(), gv) \
        + np.einsum("...kij,...i,...j->...k", GamF, gv, gv)
    target = (fd[..., 0] * fd[..., 1])[..., None] * gv
    rem = np.linalg.norm(nab - target, axis=-1) / np.maximum(1.0, np.linalg.norm(target, axis=-1))
    return GraphReport(float(eik.max()), float(rem.max()), int(x.shape[0]))


def induced_metric_at(frame: LightlikeFrame):
    """g~ at the frame point, checked to be Riemannian."""
    ev = np.linalg.eigvalsh(frame.gtilde)
    if np.any(ev <= 0):
        raise RiggingError("induced metric g~ is not positive definite; rigging not transverse")
    return frame.gtilde


def difference_tensor_at(geo: RiggedGeometry, U, V) -> np.ndarray:
    """D(U, V) = nabla^L_U V - nabla~_U V for intrinsic vectors at every batch point."""
    Dc = geo.L.value - geo.Gam_t.value
    return np.einsum("...kij,...i,...j->...k", Dc, U, V)


@dataclass
class UmbilicReport:
    verdict: str  # "geodesic", "umbilic", "trivially umbilic (n=3)" or "neither"
    max_B: float
    residual: float
    rho: np.ndarray
    H: np.ndarray
    points: np.ndarray


def umbilicity_scan(surface: GraphHypersurface, rigging: Rigging, x, tol: float = 1e-8,
                    mode: str = "jet") -> UmbilicReport:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[0] < 20:
        raise PreconditionError("umbilicity scan needs at least 20 sample points")
    geo = RiggedGeometry(surface, rigging, x, mode=mode)
    return umbilic_report(geo, tol)


def umbilic_report(geo: RiggedGeometry, tol: float = 1e-8) -> UmbilicReport:
    F = geo.tl_frame()
    Bf = np.einsum("...ia,...ij,...jb->...ab", F, geo.B.value, F)
    H = geo.H.value
    n = geo.n
    rho = H / (n - 2)
    scr = Bf[:, 1:, 1:]
    eye = np.eye(n - 2)
    resid = np.abs(scr - rho[:, None, None] * eye).max()
    max_B = float(np.abs(Bf).max())
    if max_B <= tol:
        verdict = "geodesic"
    elif n == 3:
        verdict = "trivially umbilic (n=3)"
    elif resid <= tol:
        verdict = "umbilic"
    else:
        verdict = "neither"
    return UmbilicReport(verdict, max_B, float(resid), rho, H, geo.base.copy())
