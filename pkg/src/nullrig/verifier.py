"""Numerical verification of the rigging identities on sampled hypersurfaces.

Every check evaluates both sides of an identity at random points and random
unit vectors (unit for g~ on TL, or g-unit screen vectors) and reports the
per-sample residual

    |lhs - rhs| / max(|lhs|, |rhs|, sum of |terms|, 1).

Each side is assembled from different intermediate objects (ambient
Christoffel symbols versus the induced connection, the shape operator versus
the second fundamental form, and so on), so agreement is not a tautology.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import jets as J
from .errors import DomainError, NullrigError, RiggingError
from .hypersurface import GraphHypersurface, RiggedGeometry, Rigging, umbilic_report
from .tensor import curvature_operator, ricci

DEFAULT_TOL = {"jet": 1e-7, "fd": 1e-4}
CLAIM_TOL = 1e-9


# -- residual helpers -----------------------------------------------------------------

def _mag(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return np.abs(a) if a.ndim <= 1 else np.linalg.norm(a.reshape(a.shape[0], -1), axis=-1)


def residual(lhs, rhs, *terms) -> np.ndarray:
    """Per-sample scaled residual; vectors are compared in Euclidean norm."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    num = _mag(lhs - rhs)
    scale = np.maximum(_mag(lhs), _mag(rhs))
    tsum = sum((_mag(t) for t in terms), np.zeros_like(num))
    return num / np.maximum(np.maximum(scale, tsum), 1.0)


def _ein(spec, *ops):
    return np.einsum(spec, *ops)


# -- evaluation context ---------------------------------------------------------------

class Context:
    """Values of the rigging apparatus plus random test vectors at a sample batch."""

    def __init__(self, geo: RiggedGeometry, rng: np.random.Generator, flags: dict):
        self.geo = geo
        self.flags = flags
        self.rng = rng
        self.n, self.m, self.B_ = geo.n, geo.m, geo.batch
        self.G = geo.G.value
        self.Gam = geo.Gam.value
        self.Riem = geo.Riem.value
        self.Ric = ricci(self.Riem)
        self.xi_a = geo.xi_amb.value
        self.N_a = geo.N_amb.value
        self.zeta_a = geo.zeta.value
        self.xi = geo.xi.value
        self.om = geo.omega.value
        self.gi = geo.g_ind.value
        self.gt = geo.gt.value
        self.Gt = geo.Gam_t.value
        self.Rt = geo.Riem_t.value
        self.Rict = ricci(self.Rt)
        self.Lc = geo.L.value
        self.RL = geo.Riem_L.value
        self.Bm = geo.B.value
        self.Cm = geo.C.value
        self.tau = geo.tau.value
        self.H = geo.H.value
        self.Dxi = geo.Dxi.value  # ambient [a, i]
        self.Ast = geo.Astar_amb.value[:, 1:, :]  # intrinsic [k, i]
        self.S = geo.nabla_t_xi().value  # [k, i]
        F = geo.tl_frame()
        self.frame = F
        self.screen = F[:, :, 1:]
        self.U, self.V, self.W = (self.tl_unit() for _ in range(3))
        self.X, self.Y, self.Z = (self.screen_unit() for _ in range(3))
        self.X1, self.Y1 = self.screen_pair()

    # random vectors
    def tl_unit(self):
        z = self.rng.standard_normal((self.B_, self.m))
        z /= np.linalg.norm(z, axis=-1, keepdims=True)
        return _ein("bij,bj->bi", self.frame, z)

    def screen_unit(self):
        z = self.rng.standard_normal((self.B_, self.m - 1))
        z /= np.linalg.norm(z, axis=-1, keepdims=True)
        return _ein("bij,bj->bi", self.screen, z)

    def screen_pair(self):
        if self.m - 1 < 2:
            return None, None
        z = self.rng.standard_normal((self.B_, self.m - 1, 2))
        q, _ = np.linalg.qr(z)
        X = _ein("bij,bj->bi", self.screen, q[:, :, 0])
        Y = _ein("bij,bj->bi", self.screen, q[:, :, 1])
        return X, Y

    # algebra
    def e(self, v):
        return self.geo.embed(v)

    def g(self, a, b):
        return _ein("bij,bi,bj->b", self.G, a, b)

    def gtd(self, a, b):
        return _ein("bij,bi,bj->b", self.gt, a, b)

    def gid(self, a, b):
        return _ein("bij,bi,bj->b", self.gi, a, b)

    @staticmethod
    def bil(M, a, b):
        return _ein("bij,bi,bj->b", M, a, b)

    @staticmethod
    def form(w, a):
        return _ein("bi,bi->b", w, a)

    @staticmethod
    def conn(Gm, a, b):
        return _ein("bkij,bi,bj->bk", Gm, a, b)

    def R(self, a, b, c):
        """Ambient curvature operator on ambient vectors."""
        return curvature_operator(self.Riem, a, b, c)

    def Ramb(self, U, V, W):
        return self.R(self.e(U), self.e(V), self.e(W))

    def nabla_xi(self, U):
        """Ambient nabla_U xi (tangent, ambient components)."""
        return _ein("bai,bi->ba", self.Dxi, U)

    def Astar(self, U):
        return _ein("bki,bi->bk", self.Ast, U)

    def sample_points(self, count):
        return self.geo.x[:min(count, self.B_)]


# -- identity catalog -----------------------------------------------------------------

@dataclass(frozen=True)
class IdentityCheck:
    id: str
    name: str
    statement: str
    fn: Callable
    requires: tuple = ()
    min_n: int = 3

    def applicable(self, flags: dict, n: int) -> tuple[bool, str]:
        if n < self.min_n:
            return False, f"needs n >= {self.min_n}"
        for r in self.requires:
            if not flags.get(r, False):
                return False, f"needs a {r.replace('_', ' ')} setting"
        return True, ""


def _c01(c: Context):
    amb = c.conn(c.Gam, c.e(c.U), c.e(c.V))
    BN = c.bil(c.Bm, c.U, c.V)[:, None] * c.N_a
    tang = amb - BN
    tl = c.conn(c.Lc, c.U, c.V)
    return [residual(tang[:, 0], 0.0, amb[:, 0], BN[:, 0]),
            residual(tang[:, 1:], tl, amb, BN)]


def _c02(c: Context):
    cov = c.geo.cov_L(c.geo.g_ind)
    lhs = _ein("bkij,bk,bi,bj->b", cov, c.U, c.V, c.W)
    gN = _ein("bai,ba->bi", c.G[:, :, 1:], c.N_a)  # g(N, E_i)
    t1 = c.bil(c.Bm, c.U, c.V) * c.form(gN, c.W)
    t2 = c.bil(c.Bm, c.U, c.W) * c.form(gN, c.V)
    return [residual(lhs, t1 + t2, t1, t2)]


def _c03(c: Context):
    B_uv = c.bil(c.Bm, c.U, c.V)
    via_gamma = c.g(c.conn(c.Gam, c.e(c.U), c.e(c.V)), c.xi_a)
    return [residual(B_uv, via_gamma),
            residual(B_uv, c.bil(c.Bm, c.V, c.U)),
            residual(c.bil(c.Bm, c.xi, c.V), 0.0)]


def _c04(c: Context):
    lhs = c.nabla_xi(c.xi)
    rhs = -c.form(c.tau, c.xi)[:, None] * c.xi_a
    return [residual(lhs, rhs)]


def _c05(c: Context):
    a = c.bil(c.Bm, c.Astar(c.U), c.V)
    b = c.bil(c.Bm, c.U, c.Astar(c.V))
    return [residual(a, b)]


def _screen_field(c: Context, a):
    """Jet of the screen field P(a) = a - omega(a) xi for a constant vector a."""
    geo = c.geo
    om = geo.omega.truncate(2)
    xi = geo.xi.truncate(2)
    aj = J.Jet.constant(a, om.space)
    return aj - xi * J.dot(om, aj).expand_dims(-1)


def _c06(c: Context):
    Xf = _screen_field(c, c.X)
    Yf = _screen_field(c, c.Y)
    br = _ein("bj,bkj->bk", Xf.value, Yf.gradient_values()) - \
        _ein("bj,bkj->bk", Yf.value, Xf.gradient_values())
    lhs = c.bil(c.Cm, c.X, c.Y) - c.bil(c.Cm, c.Y, c.X)
    rhs = c.g(c.N_a, c.e(br))
    return [residual(lhs, rhs, c.bil(c.Cm, c.X, c.Y), c.bil(c.Cm, c.Y, c.X))]


def _c07(c: Context):
    lhs = curvature_operator(c.RL, c.U, c.V, c.xi)
    rhs = c.R(c.e(c.U), c.e(c.V), c.xi_a)
    return [residual(c.e(lhs), rhs)]


def _c08(c: Context):
    lhs = c.g(c.Ramb(c.U, c.V, c.W), c.e(c.X))
    t0 = c.gid(curvature_operator(c.RL, c.U, c.V, c.W), c.X)
    t1 = c.bil(c.Bm, c.U, c.W) * c.bil(c.Cm, c.V, c.X)
    t2 = c.bil(c.Bm, c.V, c.W) * c.bil(c.Cm, c.U, c.X)
    return [residual(lhs, t0 + t1 - t2, t0, t1, t2)]


def _c09(c: Context):
    lhs = c.g(c.Ramb(c.U, c.V, c.W), c.xi_a)
    covB = c.geo.cov_L(c.geo.B)
    t1 = _ein("bkij,bk,bi,bj->b", covB, c.U, c.V, c.W)
    t2 = _ein("bkij,bk,bi,bj->b", covB, c.V, c.U, c.W)
    t3 = c.form(c.tau, c.U) * c.bil(c.Bm, c.V, c.W)
    t4 = c.form(c.tau, c.V) * c.bil(c.Bm, c.U, c.W)
    return [residual(lhs, t1 - t2 + t3 - t4, t1, t2, t3, t4)]


def _c10(c: Context):
    lhs = c.g(c.Ramb(c.U, c.V, c.X), c.N_a)
    covC = c.geo.cov_L(c.geo.C)
    t1 = _ein("bkij,bk,bi,bj->b", covC, c.U, c.V, c.X)
    t2 = _ein("bkij,bk,bi,bj->b", covC, c.V, c.U, c.X)
    t3 = c.form(c.tau, c.V) * c.bil(c.Cm, c.U, c.X)
    t4 = c.form(c.tau, c.U) * c.bil(c.Cm, c.V, c.X)
    return [residual(lhs, t1 - t2 + t3 - t4, t1, t2, t3, t4)]


def _c11(c: Context):
    lhs = c.g(c.R(c.e(c.U), c.e(c.V), c.xi_a), c.N_a)
    dtau = c.geo.exterior(c.geo.tau)
    t1 = c.bil(c.Cm, c.V, c.Astar(c.U))
    t2 = c.bil(c.Cm, c.U, c.Astar(c.V))
    t3 = c.bil(dtau, c.U, c.V)
    return [residual(lhs, t1 - t2 - t3, t1, t2, t3)]


def _null_sectional(c: Context, X):
    return c.g(c.R(c.e(X), c.xi_a, c.xi_a), c.e(X)) / c.gid(X, X)


def _c12(c: Context):
    K = _null_sectional(c, c.X)
    covB = c.geo.cov_L(c.geo.B)
    t1 = _ein("bkij,bk,bi,bj->b", covB, c.xi, c.X, c.X)
    t2 = _ein("bkij,bk,bi,bj->b", covB, c.X, c.xi, c.X)
    t3 = c.form(c.tau, c.xi) * c.bil(c.Bm, c.X, c.X)
    out = [residual(K, t1 - t2 + t3, t1, t2, t3)]
    if c.flags.get("umbilic"):
        rho = c.H / (c.n - 2)
        drho = _ein("bi,bi->b", c.geo.H.gradient_values(), c.xi) / (c.n - 2)
        t4 = c.form(c.tau, c.xi) * rho
        out.append(residual(K, drho + t4 - rho ** 2, drho, t4, rho ** 2))
    return out


def _lie_terms(c: Context, U, V, W):
    lie = c.geo.lie_xi_gt()
    dw = c.geo.exterior(c.geo.omega)
    a = c.form(c.om, W) * c.bil(lie, U, V)
    b = c.form(c.om, U) * c.bil(dw, V, W)
    d = c.form(c.om, V) * c.bil(dw, U, W)
    return a, b, d


def _c13(c: Context):
    amb = c.conn(c.Gam, c.e(c.U), c.e(c.V))
    tt = c.e(c.conn(c.Gt, c.U, c.V))
    lhs = c.g(amb - tt, c.e(c.W))
    a, b, d = _lie_terms(c, c.U, c.V, c.W)
    return [residual(lhs, -0.5 * (a + b + d), a, b, d)]


def _c14(c: Context):
    D = c.conn(c.Lc - c.Gt, c.U, c.V)
    lhs = c.gid(D, c.W)
    a, b, d = _lie_terms(c, c.U, c.V, c.W)
    t = c.bil(c.Bm, c.U, c.V) * c.form(c.om, c.W)
    return [residual(lhs, -0.5 * (a + b + d) - t, a, b, d, t)]


def _c15(c: Context):
    Dc = c.Lc - c.Gt
    r1 = c.gid(c.conn(Dc, c.X, c.U), c.X)
    r2 = c.gid(c.conn(Dc, c.X, c.Y), c.Z)
    d_uxi = c.gtd(c.conn(Dc, c.U, c.xi), c.xi)
    tauU = c.form(c.tau, c.U)
    dzeta = c.geo.cov_amb(c.geo.zeta).value  # [a, i]
    nz = c.g(_ein("bai,bi->ba", dzeta, c.U), c.xi_a)
    lhs4 = -2 * c.bil(c.Cm, c.U, c.X)
    da = c.bil(c.geo.dalpha(), c.e(c.U), c.e(c.X))
    lz = c.bil(c.geo.lie_zeta_g(), c.e(c.U), c.e(c.X))
    gzz = c.g(c.zeta_a, c.zeta_a) * c.bil(c.Bm, c.U, c.X)
    return [residual(r1, 0.0), residual(r2, 0.0),
            residual(d_uxi, -tauU), residual(tauU, nz),
            residual(lhs4, da + lz + gzz, da, lz, gzz)]


def _c16(c: Context):
    lie = c.geo.lie_xi_gt()
    a = c.bil(lie, c.X, c.Y)
    b = -2 * c.bil(c.Bm, c.X, c.Y)
    div = c.geo.div_t(c.geo.xi)
    return [residual(a, b), residual(c.H, -div)]


def _c17(c: Context):
    acc = c.nabla_xi(c.xi)
    tx = c.form(c.tau, c.xi)
    Z = _Svec(c, c.xi)
    rhs = -0.5 * c.gtd(Z, c.X)
    return [residual(acc, 0.0), residual(tx, 0.0), residual(c.form(c.tau, c.X), rhs)]


def _c18(c: Context):
    X, Y = c.X1, c.Y1
    K = c.g(c.Ramb(X, Y, Y), c.e(X))
    Kt = c.gtd(curvature_operator(c.Rt, X, Y, Y), X)
    dw = c.bil(c.geo.exterior(c.geo.omega), X, Y)
    terms = [-c.bil(c.Cm, Y, Y) * c.bil(c.Bm, X, X),
             -c.bil(c.Cm, X, X) * c.bil(c.Bm, Y, Y),
             (c.bil(c.Cm, X, Y) + c.bil(c.Cm, Y, X)) * c.bil(c.Bm, X, Y),
             c.bil(c.Bm, X, X) * c.bil(c.Bm, Y, Y),
             -c.bil(c.Bm, X, Y) ** 2,
             0.75 * dw ** 2]
    return [residual(K - Kt, sum(terms), K, Kt, *terms)]


def _Svec(c: Context, v):
    return _ein("bki,bi->bk", c.S, v)


def _Sstar_perp(c: Context, v):
    # g~-adjoint: S* = g~^{-1} S^T g~
    Sstar = np.linalg.solve(c.gt, _ein("bki,bkl->bil", c.S, c.gt))
    sv = _ein("bki,bi->bk", Sstar, v)
    acc = _Svec(c, c.xi)
    return sv - c.gtd(acc, v)[:, None] * c.xi


def _c19(c: Context):
    SX = _Svec(c, c.X)
    SpX = _Sstar_perp(c, c.X)
    return [residual(c.gtd(SX, SX), c.gtd(SpX, SpX))]


def _acc_jet(c: Context):
    Sj = c.geo.nabla_t_xi()
    return J.einsum("...ki,...i->...k", Sj, c.geo.xi.truncate(Sj.order))


def _c20(c: Context):
    X = c.X
    Kxi = _null_sectional(c, X)
    Kt = c.gtd(curvature_operator(c.Rt, X, c.xi, c.xi), X)
    Zj = _acc_jet(c)
    Z = Zj.value
    nZ = _ein("bki,bi->bk", c.geo.nabla_t_vec(Zj), X)
    SX = _Svec(c, X)
    S2X = _Svec(c, SX)
    t1 = c.form(c.tau, c.xi) * c.bil(c.Bm, X, X)
    t2 = -c.gtd(nZ, X)
    t3 = c.gtd(X, Z) ** 2
    t4 = 0.5 * (c.gtd(S2X, X) - c.gtd(SX, SX))
    return [residual(Kxi - Kt, t1 + t2 + t3 + t4, Kxi, Kt, t1, t2, t3, t4)]


def _c21(c: Context):
    ric = c.bil(c.Ric, c.xi_a, c.xi_a)
    rict = c.bil(c.Rict, c.xi, c.xi)
    t1 = c.form(c.tau, c.xi) * c.H
    t2 = -c.geo.div_t(_acc_jet(c))
    S2 = _ein("bij,bjk->bik", c.S, c.S)
    tr = np.trace(S2, axis1=-2, axis2=-1)
    SE = _ein("bki,bia->bka", c.S, c.screen)
    perp = _ein("bka,bkl,bla->b", SE, c.gt, SE)
    t3 = 0.5 * (tr - perp)
    return [residual(ric, rict + t1 + t2 + t3, ric, rict, t1, t2, t3)]


def _c22(c: Context):
    SX = _Svec(c, c.X)
    a = c.gtd(_Svec(c, SX), c.X)
    b = c.gtd(SX, SX)
    return [np.maximum(a - b, 0.0) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)]


def _c23(c: Context):
    ric = c.bil(c.Ric, c.xi_a, c.xi_a)
    dH = _ein("bi,bi->b", c.geo.H.gradient_values(), c.xi)
    Amat = np.linalg.solve(c.gt, c.Bm)
    A2 = np.trace(Amat @ Amat, axis1=-2, axis2=-1)
    return [residual(ric, dH - A2, dH, A2)]


def _c24(c: Context):
    return [residual(_Svec(c, c.U), -c.Astar(c.U)), residual(_Svec(c, c.xi), 0.0)]


def _c25(c: Context):
    lhs = c.gtd(c.conn(c.Gt, c.U, c.V), c.W)
    a = c.g(c.conn(c.Gam, c.e(c.U), c.e(c.V)), c.e(c.W))
    dom = c.geo.omega.gradient_values()  # [j, i] = d_i omega_j
    b = c.form(c.om, c.W) * _ein("bji,bi,bj->b", dom, c.U, c.V)
    return [residual(lhs, a + b, a, b)]


def _c26(c: Context):
    Dc = c.Lc - c.Gt
    DUX = c.conn(Dc, c.U, c.X)
    rhs = (c.bil(c.Cm, c.U, c.X) - c.bil(c.Bm, c.U, c.X))[:, None] * c.xi
    DUxi = c.conn(Dc, c.U, c.xi)
    covt = _ein("bkij,bk,bi,bj->b", c.geo.cov_t(c.geo.B), c.U, c.V, c.W)
    covl = _ein("bkij,bk,bi,bj->b", c.geo.cov_L(c.geo.B), c.U, c.V, c.W)
    return [residual(DUX, rhs), residual(DUxi, -c.form(c.tau, c.U)[:, None] * c.xi),
            residual(covt, covl)]


def _c27(c: Context):
    U, V, X = c.U, c.V, c.X
    lhs = curvature_operator(c.RL, U, V, X) - curvature_operator(c.Rt, U, V, X)
    RX = c.Ramb(U, V, X)
    t1 = (c.g(RX, c.N_a) - c.g(RX, c.xi_a))[:, None] * c.xi
    t2 = c.bil(c.Cm, U, X)[:, None] * c.Astar(V)
    t3 = -c.bil(c.Cm, V, X)[:, None] * c.Astar(U)
    t4 = c.bil(c.Bm, U, X)[:, None] * c.nabla_xi(V)[:, 1:]
    t5 = -c.bil(c.Bm, V, X)[:, None] * c.nabla_xi(U)[:, 1:]
    out = [residual(lhs, t1 + t2 + t3 + t4 + t5, t1, t2, t3, t4, t5)]
    lhs2 = curvature_operator(c.RL, U, V, c.xi) - curvature_operator(c.Rt, U, V, c.xi)
    s1 = c.g(c.R(c.e(U), c.e(V), c.xi_a), c.N_a)[:, None] * c.xi
    s2 = -c.form(c.tau, U)[:, None] * c.Astar(V)
    s3 = c.form(c.tau, V)[:, None] * c.Astar(U)
    out.append(residual(lhs2, s1 + s2 + s3, s1, s2, s3))
    return out


def _c28(c: Context):
    U, V, W, X, Y = c.U, c.V, c.W, c.X, c.Y
    out = []
    RW = c.Ramb(U, V, W)
    Rt = c.e(curvature_operator(c.Rt, U, V, W))
    out.append(residual(RW - Rt, c.g(RW, c.N_a)[:, None] * c.xi_a, RW, Rt))
    # spacelike plane through a screen vector
    den = c.gid(X, X) * c.gid(U, U) - c.gid(X, U) ** 2
    ok = den > 1e-3
    K = c.g(c.Ramb(X, U, U), c.e(X)) / np.where(ok, den, 1.0)
    dent = c.gtd(X, X) * c.gtd(U, U) - c.gtd(X, U) ** 2
    Kt = c.gtd(curvature_operator(c.Rt, X, U, U), X) / dent
    fac = 1 + c.gid(X, X) * c.gtd(U, c.xi) ** 2 / np.where(ok, den, 1.0)
    out.append(np.where(ok, residual(K, fac * Kt, K, fac * Kt), 0.0))
    out.append(residual(_null_sectional(c, X), 0.0))
    out.append(residual(c.gtd(curvature_operator(c.Rt, X, c.xi, c.xi), X), 0.0))
    # Ricci tensors
    xiA = c.xi_a
    ricXY = c.bil(c.Ric, c.e(X), c.e(Y))
    a = c.g(c.R(xiA, c.e(X), c.e(Y)), c.N_a)
    b = c.g(c.R(xiA, c.e(Y), c.e(X)), c.N_a)
    rictXY = c.bil(c.Rict, X, Y)
    out.append(residual(rictXY, ricXY - a - b, ricXY, a, b))
    out.append(residual(c.bil(c.Rict, c.xi, U), 0.0))
    out.append(residual(c.bil(c.Ric, xiA, c.e(U)), 0.0))
    # scalar curvatures
    s = np.einsum("bij,bij->b", np.linalg.inv(c.G), c.Ric)
    st = np.einsum("bij,bij->b", np.linalg.inv(c.gt), c.Rict)
    ricxn = c.bil(c.Ric, xiA, c.N_a)
    Kxn = c.g(c.R(xiA, c.N_a, c.N_a), xiA) / (c.g(xiA, xiA) * c.g(c.N_a, c.N_a) - c.g(xiA, c.N_a) ** 2)
    out.append(residual(s - st, 4 * ricxn - 2 * Kxn, s, st, ricxn, Kxn))
    return out


def _c29(c: Context):
    X = c.X
    Kxi = _null_sectional(c, X)
    Kt = c.gtd(curvature_operator(c.Rt, X, c.xi, c.xi), X)
    t = c.form(c.tau, c.xi) * c.bil(c.Bm, X, X) / c.gid(X, X)
    ric = c.bil(c.Ric, c.xi_a, c.xi_a)
    rict = c.bil(c.Rict, c.xi, c.xi)
    t2 = c.form(c.tau, c.xi) * c.H
    return [residual(Kxi, Kt + t, Kt, t), residual(ric, rict + t2, rict, t2)]


FLOW_POINTS = 3


def _c30(c: Context):
    from .lightcone import xi_flow_warp

    geo = c.geo
    # finite-difference frames are only good to about 1e-6, so a tighter flow buys nothing
    tols = dict(rtol=1e-11, atol=1e-13) if geo.mode == "jet" else dict(rtol=1e-8, atol=1e-10)
    out = []
    for j, x0 in enumerate(c.sample_points(FLOW_POINTS)):
        # keep the fibre displacement of the flow near 0.2 chart units
        r_max = 0.2 / max(1.0, float(np.linalg.norm(c.xi[j])))
        for _ in range(4):
            try:
                fw = xi_flow_warp(geo.surface, geo.rigging, x0, r_max,
                                  r_eval=[0.5 * r_max, r_max], mode=geo.mode, **tols)
                break
            except (DomainError, RuntimeError):
                r_max *= 0.5
        else:
            continue
        out.append(residual(fw.lambda_H, fw.lambda_leaf))
    if not out:
        raise NullrigError("the xi-flow left the chart at every test point")
    return [np.concatenate(out)]


def _c31(c: Context):
    from .lightcone import mu_formula

    geo = c.geo
    oracle = geo.surface.meta.get("fiber_warp")
    s_vals = np.array([-0.15, 0.2])
    out = []
    for x0 in c.sample_points(FLOW_POINTS):
        try:
            mu = mu_formula(geo.surface, x0, s_vals, mode=geo.mode)
        except DomainError:
            continue
        ref = np.array([oracle(x0, s) for s in s_vals])
        out.append(residual(mu, ref))
    if not out:
        raise NullrigError("the fibre gradient flow left the chart at every test point")
    return [np.concatenate(out)]


CATALOG: tuple[IdentityCheck, ...] = (
    IdentityCheck("C01", "gauss-decomposition", "nabla_U V = nabla^L_U V + B(U,V) N", _c01),
    IdentityCheck("C02", "induced-metric-derivative",
                  "(nabla^L_U g)(V,W) = B(U,V) g(N,W) + B(U,W) g(N,V)", _c02),
    IdentityCheck("C03", "second-fundamental-form",
                  "B(U,V) = g(nabla_U V, xi) = -g(nabla_U xi, V), symmetric, B(xi,.) = 0", _c03),
    IdentityCheck("C04", "xi-pregeodesic", "nabla_xi xi = -tau(xi) xi", _c04),
    IdentityCheck("C05", "shape-operator-self-adjoint", "B(A*U, V) = B(U, A*V)", _c05),
    IdentityCheck("C06", "screen-form-asymmetry", "C(X,Y) - C(Y,X) = g(N, [X,Y])", _c06),
    IdentityCheck("C07", "curvature-on-xi", "R^L(U,V) xi = R(U,V) xi", _c07),
    IdentityCheck("C08", "gauss-equation",
                  "g(R(U,V)W, X) = g(R^L(U,V)W, X) + B(U,W)C(V,X) - B(V,W)C(U,X)", _c08),
    IdentityCheck("C09", "codazzi-B",
                  "g(R(U,V)W, xi) = (nabla^L_U B)(V,W) - (nabla^L_V B)(U,W) "
                  "+ tau(U)B(V,W) - tau(V)B(U,W)", _c09),
    IdentityCheck("C10", "codazzi-C",
                  "g(R(U,V)X, N) = (nabla^L_U C)(V,X) - (nabla^L_V C)(U,X) "
                  "+ tau(V)C(U,X) - tau(U)C(V,X)", _c10),
    IdentityCheck("C11", "ricci-equation",
                  "g(R(U,V)xi, N) = C(V, A*U) - C(U, A*V) - dtau(U,V)", _c11),
    IdentityCheck("C12", "null-sectional",
                  "K_xi(X) = (nabla^L_xi B)(X,X) - (nabla^L_X B)(xi,X) + tau(xi)B(X,X); "
                  "umbilic: K_xi = xi(rho) + tau(xi) rho - rho^2", _c12),
    IdentityCheck("C13", "ambient-vs-rigged-connection",
                  "g(nabla_U V - nabla~_U V, W) = -1/2 (omega(W) L_xi g~(U,V) "
                  "+ omega(U) domega(V,W) + omega(V) domega(U,W))", _c13),
    IdentityCheck("C14", "difference-tensor",
                  "g(D(U,V), W) = -1/2 (...) - B(U,V) omega(W), D = nabla^L - nabla~", _c14),
    IdentityCheck("C15", "difference-tensor-values",
                  "g(D(X,U),X) = 0; g(D(X,Y),Z) = 0; g~(D(U,xi),xi) = -tau(U) = -g(nabla_U zeta, xi); "
                  "-2C(U,X) = dalpha(U,X) + L_zeta g(U,X) + g(zeta,zeta) B(U,X)", _c15),
    IdentityCheck("C16", "lie-derivative-and-mean-curvature",
                  "L_xi g~(X,Y) = -2B(X,Y); H = -div~ xi", _c16),
    IdentityCheck("C17", "conformal-rigging",
                  "nabla_xi xi = 0, tau(xi) = 0, tau(X) = -1/2 g~(nabla~_xi xi, X)", _c17,
                  requires=("conformal",)),
    IdentityCheck("C18", "screen-sectional-difference",
                  "K - K~ = -C(Y,Y)B(X,X) - C(X,X)B(Y,Y) + (C(X,Y)+C(Y,X))B(X,Y) "
                  "+ B(X,X)B(Y,Y) - B(X,Y)^2 + 3/4 domega(X,Y)^2", _c18, min_n=4),
    IdentityCheck("C19", "orthogonally-normal",
                  "g~(SX, SX) = g~(S*perp X, S*perp X)", _c19, requires=("closed_or_umbilic",)),
    IdentityCheck("C20", "null-sectional-vs-rigged",
                  "K_xi - K~ = tau(xi)B(X,X) - g~(nabla~_X nabla~_xi xi, X) + g~(X, nabla~_xi xi)^2 "
                  "+ 1/2 (g~(S^2 X, X) - g~(SX, SX))", _c20, requires=("closed_or_umbilic",)),
    IdentityCheck("C21", "ricci-xi-vs-rigged",
                  "Ric(xi) = Ric~(xi) + tau(xi) H - div~(nabla~_xi xi) + 1/2 (tr S^2 - |S perp|^2)",
                  _c21, requires=("closed_or_umbilic",)),
    IdentityCheck("C22", "shape-inequality", "g~(S^2 X, X) <= g~(SX, SX)", _c22,
                  requires=("closed_or_umbilic",)),
    IdentityCheck("C23", "raychaudhuri", "Ric(xi) = xi(H) - |A*|^2", _c23, requires=("conformal",)),
    IdentityCheck("C24", "closed-shape", "nabla~_U xi = -A*(U), nabla~_xi xi = 0", _c24,
                  requires=("closed",)),
    IdentityCheck("C25", "closed-rigged-connection",
                  "g~(nabla~_U V, W) = g(nabla_U V, W) + omega(W) U(omega(V))", _c25,
                  requires=("closed",)),
    IdentityCheck("C26", "closed-difference-tensor",
                  "D(U,X) = (C(U,X) - B(U,X)) xi, D(U,xi) = -tau(U) xi, nabla~ B = nabla^L B", _c26,
                  requires=("closed",)),
    IdentityCheck("C27", "closed-curvature-difference",
                  "R^L(U,V)X - R~(U,V)X = (g(R(U,V)X,N) - g(R(U,V)X,xi)) xi + C(U,X)A*V - C(V,X)A*U "
                  "+ B(U,X) nabla_V xi - B(V,X) nabla_U xi; on xi: g(R(U,V)xi,N) xi - tau(U)A*V "
                  "+ tau(V)A*U", _c27, requires=("closed",)),
    IdentityCheck("C28", "totally-geodesic-curvature",
                  "R(U,V)W - R~(U,V)W = g(R(U,V)W,N) xi; K(X,U) = (1 + ...) K~(X,U); "
                  "K_xi = K~(X,xi) = 0; Ric~ relations; s - s~ = 4Ric(xi,N) - 2K(xi,N)", _c28,
                  requires=("closed", "totally_geodesic")),
    IdentityCheck("C29", "closed-null-sectional",
                  "K_xi(X) = K~(X,xi) + tau(xi)B(X,X)/g(X,X); Ric(xi) = Ric~(xi) + tau(xi) H", _c29,
                  requires=("closed",)),
    IdentityCheck("C30", "twisted-product-warp",
                  "xi-flow scaling of screen vectors = exp(-int H/(n-2))", _c30,
                  requires=("closed", "umbilic")),
    IdentityCheck("C31", "fibre-warp-formula",
                  "mu(s) = f(t0)/f(h(s)) exp(int H f^2/(n-2)) matches the fibre geometry", _c31,
                  requires=("closed", "umbilic", "fiber_oracle")),
)

CHECK_IDS = tuple(chk.id for chk in CATALOG)


# -- reports --------------------------------------------------------------------------

@dataclass
class CheckResult:
    id: str
    name: str
    statement: str
    status: str  # pass, fail, skipped, error
    max_residual: float | None = None
    mean_residual: float | None = None
    samples: int = 0
    tolerance: float | None = None
    note: str = ""


@dataclass
class ResidualReport:
    surface: str
    model: str
    rigging: str
    mode: str
    seed: int
    n_samples: int
    flags: dict
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status in ("pass", "skipped") for c in self.checks)

    def by_id(self, cid: str) -> CheckResult:
        for c in self.checks:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def as_dict(self) -> dict:
        return dict(surface=self.surface, model=self.model, rigging=self.rigging, mode=self.mode,
                    seed=self.seed, n_samples=self.n_samples, flags=self.flags,
                    passed=self.passed, checks=[asdict(c) for c in self.checks])

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), default=_json_default, **kw)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


# -- rigging claims -------------------------------------------------------------------

def validate_rigging(geo: RiggedGeometry, tol: float = CLAIM_TOL) -> dict:
    """Measure closedness, conformality and causal type; raise if a claim fails."""
    da = np.abs(geo.dalpha()).max()
    lie = geo.lie_zeta_g()
    G = geo.G.value
    n = geo.n
    tr = np.einsum("bij,bij->b", np.linalg.inv(G), lie) / n
    tf = np.abs(lie - tr[:, None, None] * G).max()
    gzz = np.einsum("bij,bi,bj->b", G, geo.zeta.value, geo.zeta.value)
    rig = geo.rigging
    measured = dict(closed=bool(da <= tol), conformal=bool(tf <= tol), timelike=bool(np.all(gzz < 0)))
    for key, claim in (("closed", rig.is_closed), ("conformal", rig.is_conformal),
                       ("timelike", rig.is_timelike)):
        if claim and not measured[key]:
            raise RiggingError(f"rigging {rig.kind!r} is declared {key} but the check fails")
    return measured


# -- driver ---------------------------------------------------------------------------

def run_suite(surface: GraphHypersurface, rigging: Rigging, n_samples: int = 100, seed: int = 0,
              mode: str = "jet", tol: float | None = None, checks=None,
              points=None) -> ResidualReport:
    """Evaluate the identity catalog on random points of a graph hypersurface."""
    if mode not in DEFAULT_TOL:
        raise ValueError("mode must be 'jet' or 'fd'")
    tol = DEFAULT_TOL[mode] if tol is None else tol
    rng = np.random.default_rng(seed)
    x = surface.sample(rng, n_samples) if points is None else np.atleast_2d(points)
    jet_geo = RiggedGeometry(surface, rigging, x, mode="jet")
    measured = validate_rigging(jet_geo)
    ureport = umbilic_report(jet_geo)
    umb = ureport.verdict != "neither"
    closed = rigging.is_closed or measured["closed"]
    flags = dict(closed=closed,
                 conformal=rigging.is_conformal or measured["conformal"],
                 umbilic=umb,
                 totally_geodesic=ureport.verdict == "geodesic",
                 closed_or_umbilic=closed or umb,
                 fiber_oracle="fiber_warp" in surface.meta,
                 verdict=ureport.verdict)
    geo = jet_geo if mode == "jet" else RiggedGeometry(surface, rigging, x, mode="fd")
    ctx = Context(geo, rng, flags)
    wanted = set(checks) if checks is not None else None
    report = ResidualReport(surface.name, surface.space.name, rigging.kind, mode, seed,
                            x.shape[0], flags)
    for chk in CATALOG:
        if wanted is not None and chk.id not in wanted:
            continue
        ok, why = chk.applicable(flags, geo.n)
        if not ok:
            report.checks.append(CheckResult(chk.id, chk.name, chk.statement, "skipped", note=why))
            continue
        try:
            parts = chk.fn(ctx)
        except NullrigError as exc:
            report.checks.append(CheckResult(chk.id, chk.name, chk.statement, "error",
                                             note=str(exc)))
            continue
        res = np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts])
        worst = float(np.max(res)) if res.size else 0.0
        status = "pass" if math.isfinite(worst) and worst <= tol else "fail"
        report.checks.append(CheckResult(chk.id, chk.name, chk.statement, status, worst,
                                         float(np.mean(res)), int(res.size), tol))
    return report
