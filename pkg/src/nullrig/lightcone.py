"""Local lightcones and other lightlike graphs in GRW spaces.

Cones with vertex (t*, x*) are the graphs t = c^{-1}(d_F(x*, x)) with
c(t) = integral of 1/f from t*.  Also here: the totally geodesic graphs of
the space forms, the umbilic non-cone example over a flat fibre, the space
form tables, cone-membership tests and the explicit quadric embeddings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import jets as J
from .errors import (ConfigError, DomainError, OutsideConeDomainError, PreconditionError,
                     VertexError)
from .grw import GRWSpace, build_model, cs_k, sn_k
from .hypersurface import GraphHypersurface, RiggedGeometry, Rigging

COLLAR = 1e-3


# -- cones --------------------------------------------------------------------

@dataclass(frozen=True)
class ConeSpec:
    """Vertex (t*, x*) and orientation; x* = None means the polar chart origin."""

    t_star: float
    x_star: tuple | None = None
    orientation: str = "future"
    collar: float = COLLAR

    def __post_init__(self):
        if self.orientation not in ("future", "past"):
            raise ConfigError("orientation must be 'future' or 'past'")


def _sign(spec: ConeSpec) -> float:
    return 1.0 if spec.orientation == "future" else -1.0


def vertex_distance(space: GRWSpace, spec: ConeSpec, x):
    """d_F(x*, x), jet-aware in x."""
    if spec.x_star is None:
        if space.fiber.chart != "polar":
            raise ConfigError("implicit vertex needs the polar fibre chart")
        return x[..., 0]
    xs = np.asarray(spec.x_star, dtype=float)
    shape = J.value(x).shape
    return space.fiber.distance(x, np.broadcast_to(xs, shape))


def cone_height(space: GRWSpace, spec: ConeSpec, x):
    """t solving the cone level-set equation at fibre point(s) x (jet-aware)."""
    d = vertex_distance(space, spec, x)
    dv = np.asarray(J.value(d), dtype=float)
    if np.any(dv <= 0):
        raise VertexError("cone height requested at the vertex")
    return space.warp.inverse_Finv_jet(spec.t_star, d * _sign(spec))


def cone_reach(space: GRWSpace, spec: ConeSpec) -> float:
    """Largest fibre distance reachable by the cone inside I."""
    w = space.warp
    if spec.orientation == "future":
        return w.sup_Finv(spec.t_star)
    return w.inf_Finv(spec.t_star)


def cone_rho(space: GRWSpace, spec: ConeSpec, t) -> np.ndarray:
    """Umbilic factor of the future cone for the rigging f d_t (closed form)."""
    if spec.orientation != "future":
        raise PreconditionError("closed-form umbilic factor covers future cones")
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t - spec.t_star) <= 0.0):
        raise VertexError("umbilic factor is singular at the vertex")
    w = space.warp
    c = np.vectorize(lambda tt: w.Finv_int(spec.t_star, tt))(t)
    d = w.derivatives(t, 1)
    f, f1 = d[..., 0], d[..., 1]
    k = space.k
    if k > 0:
        s = math.sqrt(k)
        cot = s / np.tan(s * c)
    elif k < 0:
        s = math.sqrt(-k)
        cot = s / np.tanh(s * c)
    else:
        cot = 1.0 / c
    return (f1 + cot) / f ** 2


def cone_position_field(space: GRWSpace, spec: ConeSpec, p, tol: float = 1e-10) -> np.ndarray:
    """Position vector field of the vertex at cone points p = (t, x), (t, x) components."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    t, x = p[:, 0], p[:, 1:]
    w = space.warp
    d = np.asarray(vertex_distance(space, spec, x), dtype=float)
    c = np.array([w.Finv_int(spec.t_star, ti) for ti in t])
    if np.any(np.abs(c * _sign(spec) - d) > tol * np.maximum(1.0, d)):
        raise DomainError("point is not on the cone")
    ft = np.asarray(w(t), dtype=float)
    a = np.array([w.F_int(spec.t_star, ti) for ti in t]) / ft
    if spec.x_star is None:
        PF = np.zeros_like(x)
        PF[:, 0] = x[:, 0]
    else:
        PF = space.fiber.position_field(np.asarray(spec.x_star, dtype=float), x)
    coef = a / (ft * c)
    return np.concatenate([a[:, None], coef[:, None] * PF], axis=-1)


def _angles(rng, count, m):
    ang = np.empty((count, m - 1))
    if m - 1 > 1:
        ang[:, :-1] = rng.uniform(0.35, math.pi - 0.35, size=(count, m - 2))
    if m - 1 >= 1:
        ang[:, -1] = rng.uniform(-math.pi + 0.1, math.pi - 0.1, size=count)
    return ang


def make_cone(space: GRWSpace, spec: ConeSpec, t0: float | None = None,
              band: float = 0.25) -> GraphHypersurface:
    """Cone graph over the polar chart centred at the vertex.

    Samples lie in a band of fibre radii around the radius reached at time t0.
    """
    if space.fiber.chart != "polar" or spec.x_star is not None:
        raise ConfigError("cone surfaces are built over the polar chart centred at the vertex")
    w = space.warp
    if not w.contains(spec.t_star):
        raise DomainError("vertex time outside the warp interval")
    if t0 is None:
        t0 = default_t0(space, spec)
    if abs(t0 - spec.t_star) <= spec.collar:
        raise VertexError(f"t0={t0} lies inside the vertex collar of width {spec.collar}")
    if not w.contains(t0):
        raise DomainError("t0 outside the warp interval")
    d0 = w.Finv_int(spec.t_star, t0) * _sign(spec)
    if d0 <= 0:
        raise ConfigError("t0 is on the wrong side of the vertex for this orientation")
    reach = min(cone_reach(space, spec), space.fiber.radius_cap)
    d_min = w.Finv_int(spec.t_star, spec.t_star + _sign(spec) * spec.collar) * _sign(spec)
    lo = max(d0 * (1 - band), 1.01 * d_min)
    hi = min(d0 * (1 + band), 0.98 * reach)
    if not lo < hi:
        raise OutsideConeDomainError("no admissible sampling band for this cone")
    m = space.n - 1

    def sampler(rng, count):
        r = rng.uniform(lo, hi, size=count)
        return np.concatenate([r[:, None], _angles(rng, count, m)], axis=-1)

    def domain(x):
        r = x[..., 0]
        return (r > d_min) & (r < reach)

    k = space.k
    sg = _sign(spec)

    def fiber_warp(x0, s):
        # level sets of h are geodesic spheres about the vertex
        r = float(x0[0])
        return sn_k(k, r + sg * s) / sn_k(k, r)

    return GraphHypersurface(space, lambda x: cone_height(space, spec, x), "cone", domain,
                             sampler, meta=dict(kind="cone", spec=spec, t0=t0, d0=d0,
                                                fiber_warp=fiber_warp))


def default_t0(space: GRWSpace, spec: ConeSpec) -> float:
    w = space.warp
    if space.name == "friedmann-closed":
        return float(w.inverse_Finv(spec.t_star, _sign(spec) * 1.0))
    defaults = {"minkowski": 2.0, "desitter": 1.0, "ads-portion": math.pi / 4,
                "static-sphere": 1.0}
    return spec.t_star + _sign(spec) * defaults.get(space.name, 1.0)


FRIEDMANN_VERTEX_ETA = 0.3


def default_cone_spec(space: GRWSpace) -> ConeSpec:
    if space.name == "friedmann-closed":
        return ConeSpec(float(space.warp.cosmic_time(FRIEDMANN_VERTEX_ETA)))
    return ConeSpec(0.0)


# -- other lightlike graphs -------------------------------------------------------

def _first_model_coord(space: GRWSpace, x):
    """First component of the model-space point, sn_k(r) cos(theta_1) in polar form."""
    _cs, Y = space.fiber.model_point(x)
    return Y[..., 0]


def _signed_distance_to_equator(space: GRWSpace, x):
    Y1 = _first_model_coord(space, x)
    k = space.k
    if k > 0:
        return J.arcsin(Y1 * math.sqrt(k)) / math.sqrt(k)
    if k < 0:
        return J.arcsinh(Y1 * math.sqrt(-k)) / math.sqrt(-k)
    return Y1


def _box_sampler(m, lo, hi):
    def sampler(rng, count):
        return rng.uniform(lo, hi, size=(count, m))
    return sampler


def make_table1_graph(space: GRWSpace) -> GraphHypersurface:
    """Totally geodesic lightlike graph of the space form as printed in the tables.

    s is the signed fibre distance to a totally geodesic fibre hypersurface;
    Minkowski: t = s; de Sitter: t = 2 artanh(tan(s/2)); anti de Sitter portion:
    t = 2 arctan(tanh(s/2)).
    """
    name = space.name
    if space.fiber.chart != "stereo":
        space = space.with_chart("stereo")
    m = space.n - 1
    if name == "minkowski":
        def h(x):
            return _signed_distance_to_equator(space, x)
    elif name == "desitter":
        def h(x):
            s = _signed_distance_to_equator(space, x)
            return 2.0 * J.arctanh(J.tan(s * 0.5))
    elif name == "ads-portion":
        def h(x):
            s = _signed_distance_to_equator(space, x)
            return 2.0 * J.arctan(J.tanh(s * 0.5))
    else:
        raise ConfigError(f"no totally geodesic table graph for model {name!r}")
    k = space.k

    def fiber_warp(x0, s):
        # level sets are equidistant to a totally geodesic fibre hypersurface
        s0 = float(np.asarray(_signed_distance_to_equator(space, np.asarray(x0, dtype=float))))
        return cs_k(k, s0 + s) / cs_k(k, s0)

    return GraphHypersurface(space, h, "table1", None, _box_sampler(m, -0.6, 0.6),
                             meta=dict(kind="table1", fiber_warp=fiber_warp))


def make_hyperplane(space: GRWSpace) -> GraphHypersurface:
    if space.name != "minkowski":
        raise ConfigError("lightlike hyperplanes need the Minkowski model")
    g = make_table1_graph(space)
    g.name = "hyperplane"
    g.meta["kind"] = "hyperplane"
    return g


def make_counterexample(n: int = 4) -> GraphHypersurface:
    """Umbilic non-cone graph t = c^{-1}(x_1) in R x_f R^{n-1}, f = (1 + t^2)/2."""
    space = build_model("grw-counterexample", n, chart="stereo")
    m = n - 1

    def h(x):
        return J.tan(x[..., 0] * 0.5)

    return GraphHypersurface(space, h, "counterexample", lambda x: np.abs(x[..., 0]) < math.pi,
                             _box_sampler(m, -1.5, 1.5),
                             meta=dict(kind="counterexample", fiber_warp=lambda x0, s: 1.0))


def make_torus_graph(space: GRWSpace, R: float = 2.0) -> GraphHypersurface:
    """Minkowski graph t = distance to a circle of radius R: lightlike, not umbilic."""
    if space.name != "minkowski" or space.n < 4:
        raise ConfigError("the tube graph needs Minkowski with n >= 4")
    sp = space.with_chart("stereo")
    m = sp.n - 1

    def h(x):
        rho = J.sqrt(x[..., 0] ** 2 + x[..., 1] ** 2)
        q = (rho - R) ** 2
        for i in range(2, m):
            q = q + x[..., i] ** 2
        return J.sqrt(q)

    def sampler(rng, count):
        rho = rng.uniform(R + 0.5, R + 1.5, size=count)
        phi = rng.uniform(0, 2 * math.pi, size=count)
        rest = rng.uniform(0.3, 1.0, size=(count, m - 2))
        return np.concatenate([(rho * np.cos(phi))[:, None], (rho * np.sin(phi))[:, None], rest],
                              axis=-1)

    return GraphHypersurface(sp, h, "tube", None, sampler, meta=dict(kind="neither"))


def make_surface(space: GRWSpace, kind: str, t0: float | None = None,
                 spec: ConeSpec | None = None) -> GraphHypersurface:
    kind = kind.lower()
    if kind == "cone":
        spec = spec or default_cone_spec(space)
        return make_cone(space, spec, t0)
    if kind in ("table1", "table1-graph"):
        return make_table1_graph(space)
    if kind in ("hyperplane", "table1-hyperplane"):
        return make_hyperplane(space)
    if kind == "counterexample":
        return make_counterexample(space.n)
    if kind in ("tube", "neither"):
        return make_torus_graph(space)
    raise ConfigError(f"unknown surface {kind!r}")


# -- space-form tables ------------------------------------------------------------

TABLE_MODELS = ("minkowski", "desitter", "ads-portion")


def table_formulas(model: str, t0: float, n: int):
    """Closed forms for the cone of (0, x*): (H, fibre radius, warping function)."""
    if model == "minkowski":
        return (n - 2) / t0, t0, lambda r: (t0 - r) / t0
    if model == "desitter":
        return (n - 2) / math.sinh(t0), math.tanh(t0), lambda r: (math.sinh(t0) - r) / math.sinh(t0)
    if model == "ads-portion":
        return (n - 2) / math.sin(t0), math.tan(t0), lambda r: (math.sin(t0) - r) / math.sin(t0)
    raise ConfigError(f"tables cover {TABLE_MODELS}, not {model!r}")


@dataclass
class TableRow:
    model: str
    t0: float
    n: int
    H_closed: float
    H_engine: float
    radius_closed: float
    radius_engine: float
    warp_residual: float
    leaf_residual: float

    def as_dict(self):
        return dict(model=self.model, t0=self.t0, n=self.n, H_closed=self.H_closed,
                    H_engine=self.H_engine, radius_closed=self.radius_closed,
                    radius_engine=self.radius_engine, warp_residual=self.warp_residual,
                    leaf_residual=self.leaf_residual)


def space_form_tables(model: str, t0: float, n: int = 4, r_samples=(0.1, 0.25, 0.4)) -> TableRow:
    if model not in TABLE_MODELS:
        raise ConfigError(f"tables cover {TABLE_MODELS}, not {model!r}")
    space = build_model(model, n)
    if not space.warp.contains(t0) or t0 <= COLLAR:
        raise DomainError(f"t0={t0} outside the admissible range of {model}")
    H_p, rad_p, lam_p = table_formulas(model, t0, n)
    spec = ConeSpec(0.0)
    cone = make_cone(space, spec, t0)
    d0 = cone.meta["d0"]
    x = np.array([[d0] + [math.pi / 2] * (n - 3) + [0.4]])
    geo = RiggedGeometry(cone, Rigging.f_dt(), x)
    H_e = float(geo.H.value[0])
    rad_e = leaf_radius(geo)
    fracs = np.asarray(r_samples) * (d0 if model != "desitter" else math.sinh(t0))
    flow = xi_flow_warp(cone, Rigging.f_dt(), x[0], float(fracs.max()), r_eval=fracs)
    lam_ref = np.array([lam_p(r) for r in fracs])
    warp_res = float(max(np.abs(flow.lambda_H - lam_ref).max(),
                         np.abs(flow.lambda_leaf - lam_ref).max()))
    leaf = leaf_metric_residual(geo)
    return TableRow(model, t0, n, H_p, H_e, rad_p, rad_e, warp_res, leaf)


def leaf_metric_residual(geo: RiggedGeometry) -> float:
    """Screen leaves of a polar cone are round spheres: f(t)^2 sn_k(r)^2 times the unit round metric.

    Returns the largest deviation of the screen frame from being orthonormal for
    that metric, together with its radial component (which must vanish).
    """
    if geo.space.fiber.chart != "polar" or geo.n < 4:
        raise ConfigError("leaf metric check needs a polar cone with n >= 4")
    E = geo.screen_basis()
    x = geo.x
    f = np.asarray(geo.space.warp(geo.h0), dtype=float)
    sn = np.asarray(geo.space.fiber.sn(x[:, 0]), dtype=float)
    m = geo.m
    out = 0.0
    for b in range(geo.batch):
        # unit round metric on S^{m-1} in the angular coordinates
        round_ = np.zeros((m, m))
        w = 1.0
        for i in range(1, m):
            round_[i, i] = w
            w *= math.sin(x[b, i]) ** 2
        gl = (f[b] * sn[b]) ** 2 * round_
        Eb = E[b]
        out = max(out, float(np.abs(Eb.T @ gl @ Eb - np.eye(m - 1)).max()),
                  float(np.abs(Eb[0]).max()))
    return out


def leaf_radius(geo: RiggedGeometry) -> float:
    """Fibre radius of the screen leaf through the first sample point.

    From the leaf's intrinsic curvature K_S = K~ + B(X,X)B(Y,Y) - B(X,Y)^2 for
    orthonormal screen X, Y; a round leaf of fibre radius R at time t has
    K_S = 1 / (f(t) R)^2.  For n = 3 the leaf is a curve and the radius is read
    from the fibre metric instead.
    """
    t = geo.h0[0]
    f = float(geo.space.warp(t))
    if geo.n == 3:
        gF = geo.space.fiber.metric(geo.x[0])
        return float(math.sqrt(gF[1, 1]))
    E = geo.screen_basis()[0]
    X, Y = E[:, 0], E[:, 1]
    Rt = geo.Riem_t.value[0]
    gt = geo.gt.value[0]
    RXY = np.einsum("abcd,b,c,d->a", Rt, Y, X, Y)
    Kt = float(X @ gt @ RXY)
    Bv = geo.B.value[0]
    KS = Kt + (X @ Bv @ X) * (Y @ Bv @ Y) - (X @ Bv @ Y) ** 2
    return 1.0 / (f * math.sqrt(KS))


# -- xi-flow and the twisted warp ----------------------------------------------------

@dataclass
class FlowWarp:
    r: np.ndarray
    lambda_H: np.ndarray  # exp(-int H/(n-2)) along the flow
    lambda_leaf: np.ndarray  # scaling of transported screen vectors
    points: np.ndarray


def xi_flow_warp(surface: GraphHypersurface, rigging: Rigging, x0, r_max: float, r_eval=None,
                 rtol: float = 1e-11, atol: float = 1e-13, mode: str = "jet") -> FlowWarp:
    """Integrate the xi-flow with its variational equation and H along it."""
    from scipy.integrate import solve_ivp

    x0 = np.asarray(x0, dtype=float)
    m = x0.shape[0]
    n = m + 1
    geo0 = RiggedGeometry(surface, rigging, x0[None, :], mode=mode)
    E0 = geo0.screen_basis()[0][:, 0]
    g0 = float(E0 @ geo0.gt.value[0] @ E0)

    def rhs(r, y):
        x = y[:m]
        V = y[m:2 * m]
        geo = RiggedGeometry(surface, rigging, x[None, :], mode=mode)
        xi = geo.xi.value[0]
        dxi = geo.xi.gradient_values()[0]  # [k, i] = d_i xi^k
        H = geo.H.value[0]
        return np.concatenate([xi, dxi @ V, [H / (n - 2)]])

    y0 = np.concatenate([x0, E0, [0.0]])
    r_eval = np.sort(np.atleast_1d(r_eval if r_eval is not None else [r_max]))
    sol = solve_ivp(rhs, (0.0, r_max), y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=r_eval, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"xi-flow integration failed: {sol.message}")
    xs = sol.y[:m].T
    Vs = sol.y[m:2 * m].T
    geo = RiggedGeometry(surface, rigging, xs, mode=mode)
    gt = geo.gt.value
    scale = np.sqrt(np.einsum("bi,bij,bj->b", Vs, gt, Vs) / g0)
    return FlowWarp(sol.t, np.exp(-sol.y[-1]), scale, xs)


# -- mu formula along the fibre gradient flow -----------------------------------------

def mu_formula(surface: GraphHypersurface, x0, s_values, nodes: int = 24,
               mode: str = "jet") -> np.ndarray:
    """mu(s) = f(h0)/f(h(s)) exp(int_0^s H f(h)^2/(n-2) dr) along the unit fibre gradient of h.

    The integral uses Gauss-Legendre nodes on the flow line of E = grad h/|grad h|,
    traced here with the fibre exponential map (E-lines are unit-speed fibre geodesics).
    """
    space = surface.space
    fib = space.fiber
    n = space.n
    x0 = np.asarray(x0, dtype=float)
    xj = J.Jet.variables(x0[None, :], 1)
    hx = surface.height(xj)
    dh = hx.gradient_values()[0]
    gF = fib.metric(x0)
    grad = np.linalg.solve(gF, dh)
    E = grad / math.sqrt(grad @ gF @ grad)
    f = space.warp
    h0 = float(np.asarray(surface.height(x0)))
    out = []
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    for s in np.atleast_1d(s_values):
        r = 0.5 * s * (xg + 1)
        pts = fib.exp(np.broadcast_to(x0, (nodes, x0.size)), np.outer(r, E))
        geo = RiggedGeometry(surface, Rigging.f_dt(), pts, mode=mode)
        ft = np.asarray(f(geo.h0), dtype=float)
        integrand = geo.H.value * ft ** 2 / (n - 2)
        integral = 0.5 * s * np.dot(wg, integrand)
        hs = float(np.asarray(surface.height(fib.exp(x0, s * E))))
        out.append(float(f(h0)) / float(f(hs)) * math.exp(integral))
    return np.array(out)


# -- cone membership ------------------------------------------------------------------

@dataclass
class MembershipReport:
    is_cone: bool
    vertex: tuple | None
    proportionality: float
    limit: float
    mu_endpoint: float | None
    reachable: bool | None
    detail: str = ""


def _gradient_and_position(surface: GraphHypersurface, x, x_star):
    fib = surface.space.fiber
    xj = J.Jet.variables(x, 1)
    dh = surface.height(xj).gradient_values()
    gF = fib.metric(x)
    grad = np.linalg.solve(gF, dh[..., None])[..., 0]
    P = fib.position_field(np.broadcast_to(x_star, x.shape), x)
    gg = np.einsum("bij,bi,bj->b", gF, grad, grad)
    pp = np.einsum("bij,bi,bj->b", gF, P, P)
    gp = np.einsum("bij,bi,bj->b", gF, grad, P)
    return grad, P, gg, pp, gp


def stereo_view(surface: GraphHypersurface) -> GraphHypersurface:
    """Re-chart a polar cone over the stereographic chart, where its vertex is a regular point."""
    if surface.space.fiber.chart == "stereo":
        return surface
    spec = surface.meta.get("spec")
    if surface.meta.get("kind") != "cone" or spec is None:
        raise ConfigError("only cones can be moved off the polar chart")
    polar = surface.space.fiber
    sp = surface.space.with_chart("stereo")
    fib = sp.fiber
    sv = ConeSpec(spec.t_star, tuple(np.zeros(fib.dim)), spec.orientation, spec.collar)

    def sampler(rng, count):
        return fib.from_model(*polar.model_point(surface.sample(rng, count)))

    def domain(y):
        return surface.in_domain(polar.from_model(*fib.model_point(y)))

    return GraphHypersurface(sp, lambda y: cone_height(sp, sv, y), surface.name, domain, sampler,
                             meta=dict(surface.meta, spec=sv))


def cone_membership_test(surface: GraphHypersurface, vertex=None, samples: int = 40,
                         seed: int = 0, tol: float = 1e-8) -> MembershipReport:
    """Is the lightlike graph contained in a local lightcone?

    Tests the proportionality of grad h and the fibre position field, the limit
    of h at the vertex, and (for umbilic inputs) the vanishing of the twisted
    warp at the vertex end together with reachability of the vertex time.
    With ``vertex=None`` the vertex is searched by least squares seeded from
    backward generator shooting.
    """
    if surface.space.fiber.chart == "polar":
        surface = stereo_view(surface)
    space = surface.space
    fib = space.fiber
    rng = np.random.default_rng(seed)
    x = surface.sample(rng, samples)
    if vertex is None:
        vertex, detail = _search_vertex(surface, x)
        if vertex is None:
            return MembershipReport(False, None, math.inf, math.inf, None, None, detail)
    t_star, x_star = float(vertex[0]), np.asarray(vertex[1], dtype=float)
    if not np.all(fib.in_domain(x_star)):
        raise DomainError("vertex outside the fibre chart")
    grad, P, gg, pp, gp = _gradient_and_position(surface, x, x_star)
    # sine of the angle between grad h and P, from the perpendicular part (no cancellation)
    perp = grad - (gp / pp)[:, None] * P
    gF = fib.metric(x)
    prop = float(np.sqrt(np.einsum("bij,bi,bj->b", gF, perp, perp) / gg).max())
    # limit of h toward the vertex along the rays through the samples
    lim = 0.0
    w = space.warp
    for xi in x[:5]:
        P1 = fib.position_field(x_star, xi[None, :])[0]
        d = float(fib.distance(xi, x_star))
        u = -P1 / d  # unit vector at x pointing to the vertex; rays are geodesics
        vals = []
        for eps in (2e-3, 1e-3):
            y = fib.exp(xi, (d - eps) * u)
            vals.append(float(np.asarray(surface.height(y[None, :]))[0]))
        lim = max(lim, abs(2 * vals[1] - vals[0] - t_star))
    mu_end = None
    reach = None
    if prop <= tol:
        d0 = float(fib.distance(x[0], x_star))
        reach = abs(w.Finv_int(t_star, float(np.asarray(surface.height(x[:1]))[0])) - d0) <= 1e-6
        # twisted warp toward the vertex end, quadratically extrapolated to s = -d0
        ss = -d0 * np.array([0.7, 0.8, 0.9])
        try:
            mus = mu_formula(surface, x[0], ss)
            mu_end = float(np.polyval(np.polyfit(ss, mus, 2), -d0))
        except DomainError:
            mu_end = None
    ok = prop <= tol and lim <= 1e-5
    return MembershipReport(bool(ok), (t_star, tuple(x_star)), prop, lim, mu_end, reach)


def _search_vertex(surface: GraphHypersurface, x):
    """Least-squares vertex search from backward generator shooting."""
    space = surface.space
    fib = space.fiber
    w = space.warp
    xj = J.Jet.variables(x, 1)
    dh = surface.height(xj).gradient_values()
    hvals = np.asarray(surface.height(x), dtype=float)
    gF = fib.metric(x)
    grad = np.linalg.solve(gF, dh[..., None])[..., 0]
    E = grad / np.sqrt(np.einsum("bij,bi,bj->b", gF, grad, grad))[:, None]

    # seed: closest approach of two generators
    j = int(np.argmax(np.linalg.norm(x - x[0], axis=-1)))
    x2 = x[[0, j]]
    E2 = E[[0, j]]

    def gap(s):
        a = fib.exp(x2[0], -s[0] * E2[0])
        b = fib.exp(x2[1], -s[1] * E2[1])
        ca, Ya = fib.model_point(a)
        cb, Yb = fib.model_point(b)
        extra = [(ca - cb) / math.sqrt(abs(fib.k))] if fib.k != 0 else []
        return np.concatenate([Ya - Yb, extra])

    try:
        seed = optimize.least_squares(gap, x0=[0.5, 0.5], bounds=([0, 0], [50, 50]))
    except Exception as exc:  # pragma: no cover - defensive
        return None, f"seed failed: {exc}"
    if np.linalg.norm(seed.fun) > 1e-6:
        return None, "generators do not meet (no vertex)"
    xs0 = fib.exp(x2[0], -seed.x[0] * E2[0])
    try:
        t0 = w.inverse_Finv(float(hvals[0]), -float(seed.x[0]))
    except Exception:
        return None, "vertex time not reachable"

    def resid(z):
        ts, xs = z[0], z[1:]
        d = np.asarray(fib.distance(x, np.broadcast_to(xs, x.shape)), dtype=float)
        c = np.array([w.Finv_int(ts, hv) for hv in hvals])
        return c - d

    sol = optimize.least_squares(resid, x0=np.concatenate([[t0], xs0]), xtol=1e-14, ftol=1e-14)
    if np.abs(sol.fun).max() > 1e-6:
        return None, "no common vertex fits the samples"
    return (float(sol.x[0]), sol.x[1:]), "vertex found by search"


# -- quadric embeddings ------------------------------------------------------------

@dataclass
class EmbeddingReport:
    mode: str
    metric_residual: float
    quadric_residual: float
    cone_residual: float
    samples: int

    def passed(self, tol: float = 1e-8) -> bool:
        return max(self.metric_residual, self.quadric_residual, self.cone_residual) <= tol


def _gd_jet(s):
    return 2.0 * J.arctan(J.tanh(s * 0.5))


def phi_map(theta: float, v):
    """Phi(t, s, w) with z = (sqrt(cosh^2 theta + |w|^2), w); jet-aware in v = (t, s, w)."""
    t, s, w = v[..., 0], v[..., 1], v[..., 2:]
    ch = math.cosh(theta)
    ww = J.dot(w, w) if J.is_jet(w) else np.sum(w * w, axis=-1)
    z0 = J.sqrt(ww + ch * ch)
    scale = J.cos(t) * J.cosh(s + theta) / ch
    comps = [J.cos(t) * J.sinh(s + theta), scale * z0]
    comps += [scale * w[..., i] for i in range(w.shape[-1])]
    comps.append(J.sin(t))
    return _stackish(comps)


def phi_signature(n: int) -> np.ndarray:
    # (x_1, z_0, w_1..w_{n-2}, x_last): z_0 and the last coordinate are timelike
    return np.array([1.0, -1.0] + [1.0] * (n - 2) + [-1.0])


def phi_target_metric(theta: float, v) -> np.ndarray:
    t, s, w = v[..., 0], v[..., 1], v[..., 2:]
    ch = math.cosh(theta)
    m = w.shape[-1]
    gH = np.eye(m) - np.einsum("...i,...j->...ij", w, w) / (ch * ch + np.sum(w * w, axis=-1))[..., None, None]
    c2 = np.cos(t) ** 2
    out = np.zeros(v.shape[:-1] + (m + 2, m + 2))
    out[..., 0, 0] = -1.0
    out[..., 1, 1] = c2
    out[..., 2:, 2:] = (c2 * (np.cosh(s + theta) / ch) ** 2)[..., None, None] * gH
    return out


def phi_vertex(theta: float, n: int) -> np.ndarray:
    p = np.zeros(n + 1)
    p[0] = -1.0 / math.sinh(theta)
    p[-1] = -1.0 / math.tanh(theta)
    return p


def psi_map(v):
    """Psi(t, s, z) into R^{n+1} with signature (+...+, +, -, -); jet-aware."""
    t, s, z = v[..., 0], v[..., 1], v[..., 2:]
    zz = J.dot(z, z) if J.is_jet(z) else np.sum(z * z, axis=-1)
    es, ems = J.exp(s), J.exp(-s)
    ct = J.cos(t)
    comps = [es * ct * z[..., i] for i in range(z.shape[-1])]
    comps.append(ct * (es * (1.0 - zz) - ems) * 0.5)
    comps.append(ct * (es * (1.0 + zz) + ems) * 0.5)
    comps.append(J.sin(t))
    return _stackish(comps)


def psi_signature(n: int) -> np.ndarray:
    return np.array([1.0] * (n - 2) + [1.0, -1.0, -1.0])


def psi_target_metric(v) -> np.ndarray:
    t, s, z = v[..., 0], v[..., 1], v[..., 2:]
    m = z.shape[-1]
    c2 = np.cos(t) ** 2
    out = np.zeros(v.shape[:-1] + (m + 2, m + 2))
    out[..., 0, 0] = -1.0
    out[..., 1, 1] = c2
    out[..., 2:, 2:] = (c2 * np.exp(2 * s))[..., None, None] * np.eye(m)
    return out


def psi_vertex(n: int) -> np.ndarray:
    p = np.zeros(n + 1)
    p[-3], p[-2], p[-1] = -1.0, 1.0, -1.0
    return p


def _stackish(comps):
    if any(J.is_jet(c) for c in comps):
        return J.stack(comps, axis=-1)
    return np.stack(np.broadcast_arrays(*comps), axis=-1)


def quadric_embedding_check(mode: str = "phi", theta: float = 0.7, n: int = 4, samples: int = 50,
                            seed: int = 0) -> EmbeddingReport:
    """Pullback, quadric and cone residuals of the explicit embeddings into the quadric.

    The cone residual is evaluated on the image of the lightlike graph t = gd(s).
    """
    if n < 4:
        raise ConfigError("embedding checks need n >= 4")
    if mode == "phi" and theta == 0.0:
        raise ConfigError("Phi needs theta != 0")
    rng = np.random.default_rng(seed)
    m = n - 2
    v = np.empty((samples, n))
    v[:, 0] = rng.uniform(-1.2, 1.2, samples)
    v[:, 1] = rng.uniform(-1.0, 1.0, samples)
    v[:, 2:] = rng.uniform(-1.0, 1.0, (samples, m))
    if mode == "phi":
        fmap = lambda q: phi_map(theta, q)
        sig = phi_signature(n)
        target = phi_target_metric(theta, v)
        p = phi_vertex(theta, n)
    elif mode == "psi":
        fmap = psi_map
        sig = psi_signature(n)
        target = psi_target_metric(v)
        p = psi_vertex(n)
    else:
        raise ConfigError("mode must be 'phi' or 'psi'")
    q = fmap(J.Jet.variables(v, 1))
    Jm = q.gradient_values()  # [A, i]
    pull = np.einsum("bai,a,baj->bij", Jm, sig, Jm)
    metric_res = float(np.abs(pull - target).max() / max(1.0, np.abs(target).max()))
    qv = q.value
    quad_res = float(np.abs(np.einsum("ba,a,ba->b", qv, sig, qv) + 1.0).max())
    vL = v.copy()
    vL[:, 0] = np.asarray(_gd_jet(v[:, 1]))
    qL = np.asarray(fmap(vL))
    dq = qL - p
    cone_res = float(np.abs(np.einsum("ba,a,ba->b", dq, sig, dq)).max())
    return EmbeddingReport(mode, metric_res, quad_res, cone_res, samples)
