"""Multivariate truncated Taylor polynomials ("jets") with numpy batching.

A jet stores the coefficients c_a = (d^a F)/a! of a function F around a base
point, for all multi-indices a with |a| <= order.  Coefficient arrays carry
arbitrary leading axes (batch and tensor axes); the monomial axis is last.
Monomials are sorted by total degree, so truncation is a prefix slice.
"""
from __future__ import annotations

import functools
import itertools
import math
import string

import numpy as np

from . import kernels


class _MulTable:
    def __init__(self, ia, ib, ic, m):
        order = np.argsort(ic, kind="stable")
        self.ia = np.ascontiguousarray(ia[order], dtype=np.int64)
        self.ib = np.ascontiguousarray(ib[order], dtype=np.int64)
        self.ic = np.ascontiguousarray(ic[order], dtype=np.int64)
        self.starts = np.searchsorted(self.ic, np.arange(m)).astype(np.int64)
        self.m = m


class JetSpace:
    """Monomial bookkeeping for jets in ``nvar`` variables up to ``order``."""

    def __init__(self, nvar: int, order: int):
        self.nvar = nvar
        self.order = order
        monos = [a for a in itertools.product(range(order + 1), repeat=nvar) if sum(a) <= order]
        monos.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
        self.monos = np.array(monos, dtype=np.int64).reshape(len(monos), nvar)
        self.index = {a: i for i, a in enumerate(monos)}
        self.M = len(monos)
        self.degree = self.monos.sum(axis=1)
        ia, ib, ic = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                s = tuple(x + y for x, y in zip(a, b))
                k = self.index.get(s)
                if k is not None:
                    ia.append(i)
                    ib.append(j)
                    ic.append(k)
        self.table = _MulTable(np.array(ia), np.array(ib), np.array(ic), self.M)

    def __repr__(self):
        return f"JetSpace(nvar={self.nvar}, order={self.order})"

    @staticmethod
    @functools.lru_cache(maxsize=None)
    def get(nvar: int, order: int) -> "JetSpace":
        return JetSpace(nvar, order)

    def count(self, order: int) -> int:
        return math.comb(self.nvar + order, order)

    def unit(self, v: int) -> int:
        e = [0] * self.nvar
        e[v] = 1
        return self.index[tuple(e)]

    @functools.lru_cache(maxsize=None)
    def deriv_map(self, v: int):
        """Indices and factors mapping coefficients to those of d/dx_v (order - 1)."""
        low = JetSpace.get(self.nvar, self.order - 1)
        src = np.empty(low.M, dtype=np.int64)
        fac = np.empty(low.M)
        for i, a in enumerate(low.monos):
            b = a.copy()
            b[v] += 1
            src[i] = self.index[tuple(b)]
            fac[i] = b[v]
        return src, fac

    @functools.lru_cache(maxsize=None)
    def restrict_map(self, v: int):
        """Monomials not involving x_v, listed in the order of the (nvar-1) space."""
        low = JetSpace.get(self.nvar - 1, self.order)
        idx = np.empty(low.M, dtype=np.int64)
        for i, a in enumerate(low.monos):
            b = tuple(a[:v]) + (0,) + tuple(a[v:])
            idx[i] = self.index[b]
        return idx


def _letters_free(spec: str) -> str:
    for ch in string.ascii_letters[::-1]:
        if ch not in spec:
            return ch
    raise ValueError("no free einsum letter")


class Jet:
    """Truncated Taylor polynomial with array-valued coefficients."""

    __array_priority__ = 1000

    def __init__(self, coef, space: JetSpace):
        coef = np.asarray(coef, dtype=float)
        if coef.shape[-1] != space.M:
            raise ValueError(f"coefficient axis {coef.shape[-1]} != {space.M}")
        self.c = coef
        self.space = space

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, space: JetSpace) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (space.M,))
        c[..., 0] = value
        return cls(c, space)

    @classmethod
    def variables(cls, base, order: int) -> "Jet":
        """Independent variables around ``base`` (..., nvar); returns a jet of shape (..., nvar)."""
        base = np.asarray(base, dtype=float)
        nvar = base.shape[-1]
        space = JetSpace.get(nvar, order)
        c = np.zeros(base.shape + (space.M,))
        c[..., 0] = base
        if order >= 1:
            for v in range(nvar):
                c[..., v, space.unit(v)] = 1.0
        return cls(c, space)

    # -- basic properties ---------------------------------------------
    @property
    def shape(self):
        return self.c.shape[:-1]

    @property
    def ndim(self):
        return self.c.ndim - 1

    @property
    def order(self):
        return self.space.order

    @property
    def nvar(self):
        return self.space.nvar

    @property
    def value(self):
        return self.c[..., 0]

    def __repr__(self):
        return f"Jet(shape={self.shape}, nvar={self.nvar}, order={self.order})"

    def __len__(self):
        return self.shape[0]

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            key = key + (slice(None),)
        else:
            key = key + (Ellipsis, slice(None))
        return Jet(self.c[key], self.space)

    def copy(self):
        return Jet(self.c.copy(), self.space)

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        low = JetSpace.get(self.nvar, order)
        return Jet(self.c[..., : low.M], low)

    def diff(self, v: int) -> "Jet":
        """Partial derivative along variable v (order drops by one)."""
        src, fac = self.space.deriv_map(v)
        return Jet(self.c[..., src] * fac, JetSpace.get(self.nvar, self.order - 1))

    def grad(self) -> "Jet":
        """Jet of shape (..., nvar) holding all first partials (last tensor axis)."""
        return stack([self.diff(v) for v in range(self.nvar)], axis=-1)

    def restrict(self, v: int) -> "Jet":
        """Restrict to the coordinate hyperplane x_v = base value."""
        idx = self.space.restrict_map(v)
        return Jet(self.c[..., idx], JetSpace.get(self.nvar - 1, self.order))

    def embed(self, v: int) -> "Jet":
        """Inverse of restrict: view as a jet in nvar+1 variables, constant in x_v."""
        big = JetSpace.get(self.nvar + 1, self.order)
        idx = big.restrict_map(v)
        c = np.zeros(self.shape + (big.M,))
        c[..., idx] = self.c
        return Jet(c, big)

    def derivative_values(self, alpha) -> np.ndarray:
        """Value of the partial derivative d^alpha F at the base point."""
        alpha = tuple(alpha)
        fac = float(np.prod([math.factorial(a) for a in alpha]))
        return self.c[..., self.space.index[alpha]] * fac

    def gradient_values(self) -> np.ndarray:
        idx = [self.space.unit(v) for v in range(self.nvar)]
        return self.c[..., idx]

    def hessian_values(self) -> np.ndarray:
        n = self.nvar
        out = np.empty(self.shape + (n, n))
        for i in range(n):
            for j in range(n):
                a = [0] * n
                a[i] += 1
                a[j] += 1
                out[..., i, j] = self.c[..., self.space.index[tuple(a)]] * (2.0 if i == j else 1.0)
        return out

    # -- tensor-axis helpers --------------------------------------------
    def _axis(self, axis):
        return axis - 1 if axis < 0 else axis

    def sum(self, axis=None):
        if axis is None:
            return Jet(self.c.reshape(-1, self.space.M).sum(axis=0), self.space)
        return Jet(self.c.sum(axis=self._axis(axis)), self.space)

    def swapaxes(self, a, b):
        return Jet(np.swapaxes(self.c, self._axis(a), self._axis(b)), self.space)

    @property
    def T(self):
        return self.swapaxes(-1, -2)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.c.reshape(tuple(shape) + (self.space.M,)), self.space)

    def expand_dims(self, axis):
        return Jet(np.expand_dims(self.c, self._axis(axis)), self.space)

    def broadcast_to(self, shape):
        return Jet(np.broadcast_to(self.c, tuple(shape) + (self.space.M,)), self.space)

    # -- arithmetic -----------------------------------------------------
    def _match(self, other: "Jet"):
        if other.space is self.space:
            return self, other
        if other.nvar != self.nvar:
            raise ValueError("jets over different variable counts")
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._match(other)
            return Jet(a.c + b.c, a.space)
        other = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        c = np.array(np.broadcast_to(self.c, shape + (self.space.M,)))
        c[..., 0] += other
        return Jet(c, self.space)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.space)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._match(other)
            return Jet(kernels.taylor_mul(a.c, b.c, a.space.table), a.space)
        other = np.asarray(other, dtype=float)
        return Jet(self.c * other[..., None], self.space)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        return Jet(self.c / other[..., None], self.space)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)):
            if p < 0:
                return reciprocal(self) ** (-p)
            result = None
            base = self
            while p:
                if p & 1:
                    result = base if result is None else result * base
                p >>= 1
                if p:
                    base = base * base
            return result if result is not None else ones_like(self)
        return power(self, p)


def ones_like(x: Jet) -> Jet:
    return Jet.constant(np.ones(x.shape), x.space)


def zeros(shape, space: JetSpace) -> Jet:
    return Jet(np.zeros(tuple(shape) + (space.M,)), space)


def is_jet(x) -> bool:
    return isinstance(x, Jet)


def value(x):
    """Base value of a jet, or the input itself for plain numbers and arrays."""
    return x.value if isinstance(x, Jet) else x


def stack(items, axis=0) -> Jet:
    jets = [i for i in items if isinstance(i, Jet)]
    if not jets:
        raise ValueError("stack needs at least one jet")
    k = min(j.order for j in jets)
    space = JetSpace.get(jets[0].nvar, k)
    coefs = []
    for i in items:
        if isinstance(i, Jet):
            coefs.append(i.truncate(k).c)
        else:
            coefs.append(Jet.constant(i, space).c)
    shape = np.broadcast_shapes(*[c.shape for c in coefs])
    coefs = [np.broadcast_to(c, shape) for c in coefs]
    ax = axis - 1 if axis < 0 else axis
    return Jet(np.stack(coefs, axis=ax), space)


def apply_series(x: Jet, coeffs) -> Jet:
    """Compose the power series sum_k coeffs[..., k] (x - x0)^k with jet x."""
    coeffs = np.asarray(coeffs, dtype=float)
    d = x.c.copy()
    d[..., 0] = 0.0
    return Jet(kernels.series_eval(d, coeffs[..., : x.order + 1], x.space.table), x.space)


# -- univariate coefficient generators ------------------------------------

def _fact(k):
    return np.array([1.0 / math.factorial(i) for i in range(k + 1)])


def _cyclic(vals, k):
    return np.stack([vals[i % len(vals)] for i in range(k + 1)], axis=-1) * _fact(k)


def _exp_coeffs(x0, k):
    e = np.exp(x0)
    return e[..., None] * _fact(k)


def _log_coeffs(x0, k):
    out = np.empty(x0.shape + (k + 1,))
    out[..., 0] = np.log(x0)
    for i in range(1, k + 1):
        out[..., i] = (-1.0) ** (i + 1) / (i * x0 ** i)
    return out


def _power_coeffs(x0, k, p):
    out = np.empty(x0.shape + (k + 1,))
    out[..., 0] = x0 ** p
    for i in range(1, k + 1):
        out[..., i] = out[..., i - 1] * (p - i + 1) / (i * x0)
    return out


def _recip_coeffs(x0, k):
    out = np.empty(x0.shape + (k + 1,))
    for i in range(k + 1):
        out[..., i] = (-1.0) ** i / x0 ** (i + 1)
    return out


def _from_derivative(x0, k, f0, dfn):
    """Coefficients of F with F(x0)=f0 and F' = dfn (dfn must accept jets)."""
    out = np.empty(np.shape(x0) + (k + 1,))
    out[..., 0] = f0
    if k >= 1:
        u = Jet.variables(np.asarray(x0, dtype=float)[..., None], k - 1)[..., 0]
        w = dfn(u)
        out[..., 1:] = w.c / np.arange(1, k + 1)
    return out


def series_coeffs(fn, x0, k):
    """Univariate Taylor coefficients of a jet-aware function fn at x0."""
    u = Jet.variables(np.asarray(x0, dtype=float)[..., None], k)[..., 0]
    return fn(u).c


def invert_series(a) -> np.ndarray:
    """Series of the local inverse of x -> sum_k a_k (x - x0)^k, requires a_1 != 0.

    The result b satisfies x - x0 = sum_{k>=1} b_k (y - a_0)^k; b_0 is left at 0
    so the caller adds x0.
    """
    a = np.asarray(a, dtype=float)
    k = a.shape[-1] - 1
    sp = JetSpace.get(1, k)
    if k == 0:
        return np.zeros_like(a)
    s = Jet(np.zeros(a.shape[:-1] + (sp.M,)), sp)
    s.c[..., 1] = 1.0
    x = s / a[..., 1]
    a_shift = a.copy()
    a_shift[..., 0] = 0.0
    for _ in range(k):
        # chord iteration: each step fixes one more order
        px = Jet(kernels.series_eval(x.c, a_shift, sp.table), sp)
        x = x - (px - s) / a[..., 1]
    out = x.c.copy()
    out[..., 0] = 0.0
    return out


# -- elementary functions -------------------------------------------------

def _dispatch(x, jet_fn, np_fn):
    if isinstance(x, Jet):
        return jet_fn(x)
    return np_fn(x)


def exp(x):
    return _dispatch(x, lambda j: apply_series(j, _exp_coeffs(j.value, j.order)), np.exp)


def log(x):
    return _dispatch(x, lambda j: apply_series(j, _log_coeffs(j.value, j.order)), np.log)


def reciprocal(x):
    return _dispatch(x, lambda j: apply_series(j, _recip_coeffs(j.value, j.order)),
                     lambda v: 1.0 / np.asarray(v, dtype=float))


def power(x, p):
    return _dispatch(x, lambda j: apply_series(j, _power_coeffs(j.value, j.order, p)),
                     lambda v: np.power(v, p))


def sqrt(x):
    return _dispatch(x, lambda j: power(j, 0.5), np.sqrt)


def sin(x):
    def f(j):
        s, c = np.sin(j.value), np.cos(j.value)
        return apply_series(j, _cyclic([s, c, -s, -c], j.order))
    return _dispatch(x, f, np.sin)


def cos(x):
    def f(j):
        s, c = np.sin(j.value), np.cos(j.value)
        return apply_series(j, _cyclic([c, -s, -c, s], j.order))
    return _dispatch(x, f, np.cos)


def sinh(x):
    def f(j):
        s, c = np.sinh(j.value), np.cosh(j.value)
        return apply_series(j, _cyclic([s, c], j.order))
    return _dispatch(x, f, np.sinh)


def cosh(x):
    def f(j):
        s, c = np.sinh(j.value), np.cosh(j.value)
        return apply_series(j, _cyclic([c, s], j.order))
    return _dispatch(x, f, np.cosh)


def tan(x):
    return _dispatch(x, lambda j: sin(j) / cos(j), np.tan)


def tanh(x):
    return _dispatch(x, lambda j: sinh(j) / cosh(j), np.tanh)


def arctan(x):
    return _dispatch(x, lambda j: apply_series(
        j, _from_derivative(j.value, j.order, np.arctan(j.value), lambda u: 1.0 / (1.0 + u * u))),
        np.arctan)


def arctanh(x):
    return _dispatch(x, lambda j: apply_series(
        j, _from_derivative(j.value, j.order, np.arctanh(j.value), lambda u: 1.0 / (1.0 - u * u))),
        np.arctanh)


def arcsin(x):
    return _dispatch(x, lambda j: apply_series(
        j, _from_derivative(j.value, j.order, np.arcsin(j.value), lambda u: power(1.0 - u * u, -0.5))),
        np.arcsin)


def arccos(x):
    return _dispatch(x, lambda j: apply_series(
        j, _from_derivative(j.value, j.order, np.arccos(j.value), lambda u: -power(1.0 - u * u, -0.5))),
        np.arccos)


def arcsinh(x):
    return _dispatch(x, lambda j: apply_series(
        j, _from_derivative(j.value, j.order, np.arcsinh(j.value), lambda u: power(1.0 + u * u, -0.5))),
        np.arcsinh)


def arccosh(x):
    return _dispatch(x, lambda j: apply_series(
        j, _from_derivative(j.value, j.order, np.arccosh(j.value), lambda u: power(u * u - 1.0, -0.5))),
        np.arccosh)


def arctan2(y, x):
    """Angle of (x, y); smooth away from the origin."""
    if not isinstance(y, Jet) and not isinstance(x, Jet):
        return np.arctan2(y, x)
    y0, x0 = np.asarray(value(y)), np.asarray(value(x))
    th0 = np.arctan2(y0, x0)
    # differentiate atan(y/x) where |x| dominates, -atan(x/y) elsewhere; both differ
    # from the true angle by a locally constant offset
    use_x = np.abs(x0) >= np.abs(y0)
    a = arctan(y / _nonzero(x, use_x))
    b = -arctan(x / _nonzero(y, ~use_x))
    c = np.where(use_x[..., None], a.c, b.c)
    c[..., 0] = th0
    return Jet(c, a.space)


def _nonzero(j, mask):
    """Replace base values that will be discarded by 1 to keep the division finite."""
    if isinstance(j, Jet):
        c = j.c.copy()
        c[..., 0] = np.where(mask, c[..., 0], 1.0)
        return Jet(c, j.space)
    return np.where(mask, j, 1.0)


def absolute(x):
    return _dispatch(x, lambda j: j * np.sign(j.value), np.abs)


# -- tensor algebra on jets -------------------------------------------------

def einsum(spec: str, a, b):
    """Two-operand einsum where either operand may be a jet (ellipsis allowed)."""
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    z = _letters_free(spec)
    if ja and jb:
        a, b = a._match(b)
        t = a.space.table
        pa = a.c[..., t.ia]
        pb = b.c[..., t.ib]
        prod = np.einsum(f"{sa}{z},{sb}{z}->{out}{z}", pa, pb)
        return Jet(np.add.reduceat(prod, t.starts, axis=-1), a.space)
    if ja:
        return Jet(np.einsum(f"{sa}{z},{sb}->{out}{z}", a.c, np.asarray(b, dtype=float)), a.space)
    if jb:
        return Jet(np.einsum(f"{sa},{sb}{z}->{out}{z}", np.asarray(a, dtype=float), b.c), b.space)
    return np.einsum(spec, a, b)


def inv(G: Jet) -> Jet:
    """Matrix inverse of a jet-valued square matrix (last two tensor axes)."""
    g0 = np.linalg.inv(G.value)
    delta = G.copy()
    delta.c[..., 0] = 0.0
    step = einsum("...ij,...jk->...ik", -g0, delta)
    term = Jet.constant(g0, G.space)
    total = term
    for _ in range(G.order):
        term = einsum("...ij,...jk->...ik", step, term)
        total = total + term
    return total


def matvec(A, v):
    return einsum("...ij,...j->...i", A, v)


def dot(u, v):
    return einsum("...i,...i->...", u, v)


def quad_form(G, u, v):
    """g(u, v) for a jet or array metric G and vectors u, v."""
    return dot(matvec(G, v), u) if isinstance(u, Jet) or isinstance(G, Jet) or isinstance(v, Jet) \
        else np.einsum("...ij,...i,...j->...", G, u, v)


# -- finite-difference Taylor fits ----------------------------------------

@functools.lru_cache(maxsize=None)
def _fit_design(nvar: int, deg: int, hw: int):
    """Integer sampling grid and pseudo-inverse of its Vandermonde matrix."""
    space = JetSpace.get(nvar, deg)
    grid = np.array(list(itertools.product(range(-hw, hw + 1), repeat=nvar)), dtype=float)
    vander = np.prod(grid[:, None, :] ** space.monos[None, :, :], axis=-1)
    return grid, np.linalg.pinv(vander)


def fit_taylor(func, base, order: int, step: float, fit_degree: int | None = None,
               half_width: int | None = None) -> Jet:
    """Taylor jet of a float-only function from a least-squares polynomial fit.

    func maps points of shape (..., nvar) to arrays of shape (..., *out).  The
    fit uses a symmetric integer grid scaled by ``step``; coefficients above
    ``order`` are discarded.  This is the finite-difference cross-check path.
    """
    base = np.asarray(base, dtype=float)
    nvar = base.shape[-1]
    deg = fit_degree if fit_degree is not None else order + 2
    hw = half_width if half_width is not None else (deg + 2) // 2
    space = JetSpace.get(nvar, deg)
    grid, pinv = _fit_design(nvar, deg, hw)
    pts = base[..., None, :] + step * grid
    vals = np.asarray(func(pts), dtype=float)
    lead = base.shape[:-1]
    out_shape = vals.shape[len(lead) + 1:]
    vals = vals.reshape(lead + (grid.shape[0], -1))
    coef = np.swapaxes(np.matmul(pinv, vals), -1, -2)  # matmul goes through BLAS, einsum does not
    coef = coef / step ** space.degree
    keep = JetSpace.get(nvar, order)
    return Jet(coef[..., : keep.M].reshape(lead + out_shape + (keep.M,)), keep)


def compose(P: Jet, args: Jet) -> Jet:
    """Substitute jet arguments into a Taylor polynomial P.

    P has shape (*lead, *out) over variables y; args has shape (*lead, nvar_y) with
    base values equal to P's base point.  Returns a jet over args' variables.
    """
    nv = P.nvar
    order = min(P.order, args.order)
    sp = args.space if args.order == order else JetSpace.get(args.nvar, order)
    args = args.truncate(order)
    lead = args.shape[:-1]
    extra = P.ndim - len(lead)
    deltas = []
    for v in range(nv):
        d = args[..., v].c.copy()
        d[..., 0] = 0.0
        pw = [Jet.constant(np.ones(lead), sp), Jet(d, sp)]
        for _ in range(2, order + 1):
            pw.append(pw[-1] * pw[1])
        deltas.append(pw)
    psp = JetSpace.get(nv, order)
    pc = P.truncate(order).c
    out = np.zeros(P.shape + (sp.M,))
    for i, a in enumerate(psp.monos):
        term = deltas[0][a[0]]
        for v in range(1, nv):
            if a[v]:
                term = term * deltas[v][a[v]]
        coef = pc[..., i]
        out += coef[..., None] * term.c.reshape(lead + (1,) * extra + (sp.M,))
    return Jet(out, sp)
