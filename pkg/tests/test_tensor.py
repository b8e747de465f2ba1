import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nullrig import jets as J
from nullrig.errors import DegenerateMetricError, DegeneratePlaneError, DomainError, PreconditionError
from nullrig.grw import GRWSpace, FiberSpace, WarpFunction, build_model
from nullrig.tensor import (ChartMetric, curvature_at, curvature_fd, fd_metric_derivatives,
                            lightlike_sectional, sectional, signature_of)


def minkowski_chart(n=4):
    eta = np.diag([-1.0] + [1.0] * (n - 1))

    def g(p):
        if J.is_jet(p):
            return J.Jet.constant(np.broadcast_to(eta, p.shape[:-1] + (n, n)), p.space)
        return np.broadcast_to(eta, np.shape(p)[:-1] + (n, n))
    return ChartMetric(n, (-1,) + (1,) * (n - 1), g, name="minkowski")


def random_points(space, rng, count, t_range=(0.2, 0.8)):
    m = space.n - 1
    t = rng.uniform(*t_range, size=count)
    r = rng.uniform(0.3, 1.2, size=count)
    ang = rng.uniform(0.4, 2.6, size=(count, m - 1))
    return np.concatenate([t[:, None], r[:, None], ang], axis=-1)


def test_minkowski_is_flat():
    b = curvature_at(minkowski_chart(), np.array([0.3, 1.0, -2.0, 0.5]))
    assert np.abs(b.Riem).max() == 0.0
    assert np.abs(b.Ric).max() == 0.0
    assert b.scal == 0.0


def test_desitter_sectional_is_one(rng):
    space = build_model("desitter", 4)
    ch = space.ambient_chart()
    p = np.array([0.3, 0.9, 1.1, 0.4])
    b = curvature_at(ch, p)
    for _ in range(20):
        u, v = rng.standard_normal((2, 4))
        try:
            K = sectional(ch, p, u, v, b)
        except DegeneratePlaneError:
            continue
        assert abs(K - 1.0) <= 1e-9
    # the finite-difference oracle sees the same curvature
    bf = curvature_fd(ch, p)
    u, v = np.array([0.2, 1.0, 0.0, 0.0]), np.array([0.0, 0.3, 1.0, 0.5])
    assert abs(sectional(ch, p, u, v, bf) - 1.0) <= 1e-6


def test_ads_sectional_is_minus_one():
    ch = build_model("ads-portion", 4).ambient_chart()
    p = np.array([0.4, 0.7, 1.0, 2.0])
    u, v = np.array([1.0, 0.2, 0.0, 0.1]), np.array([0.0, 1.0, 0.5, 0.0])
    assert abs(sectional(ch, p, u, v) + 1.0) <= 1e-9


def test_static_sphere_fibre_plane():
    ch = build_model("static-sphere", 4).ambient_chart()
    p = np.array([0.0, 1.0, 1.2, 0.3])
    K = sectional(ch, p, np.array([0, 1.0, 0, 0]), np.array([0, 0, 1.0, 0]))
    assert abs(K - 1.0) <= 1e-9


@pytest.mark.parametrize("t", [0.0, 1.0])
def test_grw_ricci_tt_closed_form(t):
    # f = 2 + sin t over flat R^3: Ric(d_t, d_t) = -3 f''/f
    warp = WarpFunction(lambda s: 2.0 + J.sin(s), name="trig")
    space = GRWSpace(warp, FiberSpace(3, 0.0, "stereo"))
    b = curvature_at(space.ambient_chart(), np.array([t, 0.0, 0.0, 0.0]))
    expected = -3 * (-math.sin(t)) / (2 + math.sin(t))
    assert abs(b.Ric[0, 0] - expected) <= 1e-12


def test_lightlike_sectional():
    ch = minkowski_chart()
    p = np.zeros(4)
    assert lightlike_sectional(ch, p, [1, 1, 0, 0], [0, 0, 1, 0]) == 0.0
    with pytest.raises(PreconditionError):
        lightlike_sectional(ch, p, [1, 0.5, 0, 0], [0, 0, 1, 0])
    ds = build_model("desitter", 4, chart="stereo").ambient_chart()
    q = np.array([0.5, 0.2, -0.1, 0.3])
    g = ds.metric(q)
    # null vector and a unit vector orthogonal to it
    xi = np.array([1.0, 0, 0, 0]) + np.array([0, 1.0, 0, 0]) / math.sqrt(g[1, 1])
    x = np.array([0, 0, 1.0, 0])
    x = x - (x @ g @ xi) / (xi @ g @ np.array([0, 1.0, 0, 0])) * np.array([0, 1.0, 0, 0])
    assert abs(lightlike_sectional(ds, q, xi, x)) <= 1e-9


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.sampled_from([-1.0, 1.0]))
def test_lightlike_sectional_scaling(a, b, sb):
    # static sphere: xi = d_t + e with e a unit fibre vector, x a unit fibre vector
    # orthogonal to e; R(x, xi) xi = R_F(x, e) e, so the value is the fibre curvature 1
    ch = build_model("static-sphere", 4, chart="stereo").ambient_chart()
    q = np.array([0.4, 0.3, -0.2, 0.1])
    g = ch.metric(q)
    e = np.array([0.0, 1.0, 0.5, 0.0])
    e /= math.sqrt(e @ g @ e)
    x = np.array([0.0, 0.0, 1.0, 0.3])
    x -= (x @ g @ e) * e
    x /= math.sqrt(x @ g @ x)
    xi = np.array([1.0, 0.0, 0.0, 0.0]) + e
    K = float(lightlike_sectional(ch, q, xi, x))
    assert K == pytest.approx(1.0, abs=1e-9)
    scaled = float(lightlike_sectional(ch, q, a * xi, sb * b * x))
    assert scaled == pytest.approx(a * a * K, rel=1e-9)


def test_degenerate_inputs():
    ch = minkowski_chart()
    with pytest.raises(DegeneratePlaneError):
        sectional(ch, np.zeros(4), [1, 1, 0, 0], [0, 0, 0, 0])
    sing = ChartMetric(3, (-1, 1, 1), lambda p: np.zeros(np.shape(p)[:-1] + (3, 3)))
    with pytest.raises(DegenerateMetricError):
        curvature_at(sing, np.zeros(3))
    with pytest.raises(DomainError):
        curvature_at(build_model("ads-portion", 4).ambient_chart(), np.array([2.0, 1, 1, 1]))


@pytest.mark.parametrize("model", ["desitter", "ads-portion", "friedmann-closed", "static-sphere"])
def test_bundle_invariants(model, rng):
    space = build_model(model, 4)
    ch = space.ambient_chart()
    t_range = (0.5, 2.0) if model == "friedmann-closed" else (0.2, 0.8)
    p = random_points(space, rng, 40, t_range)
    b = curvature_at(ch, p)
    g = ch.metric(p)
    assert np.abs(g - np.swapaxes(g, -1, -2)).max() <= 1e-14
    assert np.all(signature_of(g) == np.array([-1, 1, 1, 1]))
    assert np.abs(b.Gamma - np.swapaxes(b.Gamma, -1, -2)).max() <= 1e-12
    R = b.Riem
    bianchi = R + np.einsum("...ijkl->...iklj", R) + np.einsum("...ijkl->...iljk", R)
    assert np.abs(bianchi).max() <= 1e-10
    assert np.abs(R + np.swapaxes(R, -1, -2)).max() <= 1e-12
    assert np.abs(b.Ric - np.swapaxes(b.Ric, -1, -2)).max() <= 1e-12
    # metric compatibility: d_k g_ij = Gamma^l_ki g_lj + Gamma^l_kj g_il
    G = ch.metric_jet(p, 1)
    dg = np.moveaxis(G.gradient_values(), -1, -3)  # [k, i, j]
    rhs = (np.einsum("...lki,...lj->...kij", b.Gamma, g)
           + np.einsum("...lkj,...il->...kij", b.Gamma, g))
    assert np.abs(dg - rhs).max() <= 1e-11


def test_jet_vs_fd_derivatives(rng):
    space = build_model("desitter", 4)
    ch = space.ambient_chart()
    for p in random_points(space, rng, 5):
        bj = curvature_at(ch, p)
        bf = curvature_fd(ch, p)
        scale = max(1.0, np.abs(bj.Riem).max())
        assert np.abs(bj.Gamma - bf.Gamma).max() <= 1e-6 * max(1.0, np.abs(bj.Gamma).max())
        assert np.abs(bj.Riem - bf.Riem).max() <= 1e-5 * scale


@pytest.mark.parametrize("model", ["minkowski", "desitter", "ads-portion", "static-sphere",
                                   "friedmann-closed"])
def test_metric_first_derivatives_vs_fd(model, rng):
    space = build_model(model, 4)
    ch = space.ambient_chart()
    p = random_points(space, rng, 100)
    dg_jet = ch.metric_jet(p, 1).gradient_values()  # [a, b, c] = d_c g_ab
    _, dg_fd, _ = fd_metric_derivatives(ch, p)
    scale = np.maximum(np.abs(dg_jet).max(axis=(-3, -2, -1)), 1.0)
    assert (np.abs(dg_jet - dg_fd).max(axis=(-3, -2, -1)) / scale).max() <= 1e-6


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.sampled_from([-1.0, 1.0]),
       st.sampled_from([-1.0, 1.0]))
def test_sectional_scale_invariance(a, b, sa, sb):
    ch = build_model("friedmann-closed", 4).ambient_chart()
    p = np.array([1.0, 0.8, 1.0, 0.5])
    u = np.array([0.3, 1.0, 0.2, 0.0])
    v = np.array([0.1, 0.0, 1.0, 0.4])
    bnd = curvature_at(ch, p)
    K = sectional(ch, p, u, v, bnd)
    assert abs(sectional(ch, p, sa * a * u, sb * b * v, bnd) - K) <= 1e-10 * max(1.0, abs(K))
