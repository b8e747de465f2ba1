import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nullrig import jets as J
from nullrig.errors import ConfigError, DomainError, OutsideConeDomainError
from nullrig.grw import FiberSpace, FriedmannWarp, build_model, warp_from_name
from nullrig.tensor import curvature_at, sectional


def test_polar_radius_is_distance():
    fib = FiberSpace(3, 1.0)
    base = np.array([1e-9, 1.0, 0.5])  # the centre itself is not a polar chart point
    y = np.array([1.2, 0.7, 2.0])
    assert float(fib.distance(y, base)) == pytest.approx(1.2, abs=1e-8)
    for k in (-1.0, 0.0, 1.0):
        f = FiberSpace(3, k)
        assert float(f.distance(y, y)) == pytest.approx(0.0, abs=1e-7)


def test_great_circle_distance():
    # two points at radius 0.5, angular direction reversed: embed S^3 in R^4 and take arccos
    fib = FiberSpace(3, 1.0)
    x = np.array([0.5, 1.0, 0.3])
    y = np.array([0.5, math.pi - 1.0, 0.3 + math.pi])
    def emb(p):
        r, a, b = p
        d = np.array([math.cos(a), math.sin(a) * math.cos(b), math.sin(a) * math.sin(b)])
        return np.concatenate([[math.cos(r)], math.sin(r) * d])
    ref = math.acos(np.clip(emb(x) @ emb(y), -1, 1))
    assert float(fib.distance(x, y)) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(1.0, abs=1e-12)


def test_position_field_radial():
    fib = FiberSpace(3, 0.0, "stereo")
    x = np.array([[2.0, 0.0, 0.0]])
    P = fib.position_field(np.zeros(3), x)[0]
    assert np.allclose(P, [2.0, 0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("k,cot", [(1.0, lambda r: r / math.tan(r)), (-1.0, lambda r: r / math.tanh(r))])
def test_position_field_hessian(k, cot):
    # g_F(nabla_w P, w) = r cot_k(r) g_F(w, w) for w orthogonal to the radial direction;
    # P = grad(d^2/2), so this is the Hessian of d^2/2 on w, computed here by jets
    fib = FiberSpace(3, k, "stereo")
    x = np.array([0.3, 0.2, -0.1])
    xs = np.zeros(3)
    xj = J.Jet.variables(x, 2)
    half = 0.5 * fib.distance(xj, xs) ** 2
    Hc = half.hessian_values()
    # covariant Hessian: subtract Christoffel part using the fibre metric jet
    from nullrig.tensor import christoffel
    G = fib.metric(J.Jet.variables(x, 1))
    Gam = christoffel(G).value
    Hcov = Hc - np.einsum("kij,k->ij", Gam, half.gradient_values())
    r = float(fib.distance(x, xs))
    g = fib.metric(x)
    radial = x / np.linalg.norm(x)
    w = np.cross(radial, [0.0, 0.0, 1.0])
    w = w - (w @ g @ radial) / (radial @ g @ radial) * radial
    assert (w @ Hcov @ w) / (w @ g @ w) == pytest.approx(cot(r), rel=1e-9)


@pytest.mark.parametrize("model,K", [("minkowski", 0.0), ("desitter", 1.0), ("ads-portion", -1.0)])
def test_space_form_curvature(model, K):
    ch = build_model(model, 4).ambient_chart()
    p = np.array([0.4, 0.8, 1.1, 0.9])
    for u, v in (([1.0, 0.2, 0, 0], [0, 1.0, 0.3, 0]), ([0, 1.0, 0, 0], [0.1, 0, 0, 1.0])):
        assert sectional(ch, p, np.array(u), np.array(v)) == pytest.approx(K, abs=1e-9)


def test_friedmann_total_conformal_length():
    w = FriedmannWarp()
    assert w.total_Finv() == pytest.approx(2 * math.pi, abs=1e-9)
    assert w.total_Finv_conformal() == pytest.approx(2 * math.pi, abs=1e-9)
    w3 = FriedmannWarp(3.0)
    assert w3.total_Finv() == pytest.approx(2 * math.pi, abs=1e-9)


def test_friedmann_eta_inverts_cosmic_time():
    w = FriedmannWarp(1.5)
    e = np.linspace(0.01, 2 * math.pi - 0.01, 57)
    assert np.allclose(w.eta(w.cosmic_time(e)), e, atol=1e-12)
    assert float(w.eta(float(w.cosmic_time(1.3)))) == pytest.approx(1.3, abs=1e-13)
    with pytest.raises(DomainError):
        w.eta(-0.1)


@pytest.mark.parametrize("name", ["desitter", "ads-portion", "grw-counterexample", "friedmann-closed"])
def test_closed_forms_match_quadrature(name):
    w = warp_from_name(name)
    t0, t1 = (0.3, 1.2) if name != "ads-portion" else (-0.4, 0.9)
    assert w.Finv_int(t0, t1) == pytest.approx(w.Finv_int_quad(t0, t1), abs=1e-11)


@given(st.sampled_from(["desitter", "ads-portion", "friedmann-closed", "custom"]),
       st.floats(0.05, 0.9))
def test_inverse_finv_roundtrip(name, frac):
    if name == "custom":
        w = warp_from_name("custom-polynomial", coeffs=[1.0, 0.3, 0.2])
        t0 = 0.0
        s = frac * 2.0
    else:
        w = warp_from_name(name)
        t0 = 1.0 if name == "friedmann-closed" else 0.2
        s = frac * w.sup_Finv(t0) if math.isfinite(w.sup_Finv(t0)) else frac * 3
    t = w.inverse_Finv(t0, s)
    assert w.Finv_int(t0, t) == pytest.approx(s, abs=1e-10)


@given(st.floats(0.0, 1.5), st.floats(0.01, 1.0))
def test_integrals_increasing(t0, dt):
    w = warp_from_name("custom-trigonometric", a0=2.0, cos=[0.5], sin=[0.3])
    assert w.Finv_int(t0, t0 + dt) > 0
    assert w.F_int(t0, t0 + dt) > 0
    assert w.Finv_int(t0, t0 + dt) == pytest.approx(w.Finv_int_quad(t0, t0 + dt), rel=1e-12)


def test_desitter_reach():
    w = warp_from_name("desitter")
    assert w.inverse_Finv(0.0, 2 * math.atan(math.tanh(0.5))) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(OutsideConeDomainError):
        w.inverse_Finv(0.0, 1.6)


def test_polar_metric_positive(rng):
    for k in (-1.0, 0.0, 1.0):
        fib = FiberSpace(3, k)
        x = np.column_stack([rng.uniform(0.01, min(fib.radius_cap, 5.0) - 0.01, 200),
                             rng.uniform(0.01, math.pi - 0.01, 200), rng.uniform(-3, 3, 200)])
        assert np.all(np.linalg.eigvalsh(fib.metric(x)) > 0)


@pytest.mark.parametrize("model", ["desitter", "friedmann-closed", "static-sphere", "ads-portion",
                                   "grw-counterexample"])
def test_null_ricci_matches_curvature(model, rng):
    space = build_model(model, 4)
    ch = space.ambient_chart()
    w = space.warp
    for _ in range(5):
        t = rng.uniform(0.5, 2.0) if model == "friedmann-closed" else rng.uniform(-0.5, 0.8)
        x = np.array([rng.uniform(0.3, 1.2), rng.uniform(0.5, 2.5), rng.uniform(-2, 2)])
        p = np.concatenate([[t], x])
        f = float(w(t))
        gF = space.fiber.metric(x)
        d = rng.standard_normal(3)
        d = d / math.sqrt(d @ gF @ d) / f ** 2  # f^2 g_F(d, d) = 1/f^2
        v = np.concatenate([[1.0 / f], d])
        b = curvature_at(ch, p)
        assert abs(v @ b.g @ v) <= 1e-12
        assert v @ b.Ric @ v == pytest.approx(float(space.null_ricci(t, d)), rel=1e-7, abs=1e-10)


def test_bad_configs():
    with pytest.raises(ConfigError):
        build_model("minkowski", 2)
    with pytest.raises(ConfigError):
        build_model("nope", 4)
    with pytest.raises(ConfigError):
        build_model("custom-polynomial", 4, coeffs=[1.0])
