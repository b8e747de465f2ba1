import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullrig.errors import ConfigError, IntervalExitError, PreconditionError
from nullrig.grw import build_model
from nullrig.jacobi import (jacobi_cross_check, jacobi_scalar, null_geodesic, run_jacobi)

X0 = np.array([0.3, 0.0, 0.0])
U0 = np.array([0.0, 1.0, 0.0])


def test_static_sphere_conjugate_point_at_pi():
    out = run_jacobi(build_model("static-sphere", 4), 4.0)
    # J'' + J = 0, J(0) = 0, J'(0) = 1 gives J = sin s
    assert out["conjugate_points"] == [pytest.approx(math.pi, abs=1e-8)]
    assert out["full_multiplicity"] == [2]
    assert out["agree"]
    s = np.asarray(out["s"])
    assert np.allclose(out["J"], np.sin(s), atol=1e-9)


@pytest.mark.parametrize("model", ["minkowski", "desitter"])
def test_no_conjugate_points_to_ten(model):
    out = run_jacobi(build_model(model, 4), 10.0)
    assert out["conjugate_points"] == []
    assert out["full_conjugate_points"] == []
    # null Ricci vanishes, so J(s) = s
    s = np.asarray(out["s"])
    assert np.allclose(out["J"], s, atol=1e-9)


def test_minkowski_full_system_is_s_times_identity():
    geo = null_geodesic(build_model("minkowski", 4), 0.0, X0, U0, 5.0)
    full = jacobi_cross_check(geo)
    assert full.conjugate_points == []
    assert np.allclose(full.J, full.s[:, None] * np.ones((1, 2)), atol=1e-9)


def test_desitter_closed_form_geodesic():
    geo = null_geodesic(build_model("desitter", 4), 0.0, X0, U0, 10.0)
    assert np.allclose(geo.t, np.arcsinh(geo.s), atol=1e-12)
    assert np.allclose(geo.b, np.arctan(geo.s), atol=1e-12)
    # gd(arcsinh s) = arctan s
    gd = np.arctan(np.sinh(geo.t))
    assert np.allclose(gd, np.arctan(geo.s), atol=1e-12)


def test_static_sphere_geodesic_is_great_circle():
    sp = build_model("static-sphere", 4)
    geo = null_geodesic(sp, 0.0, X0, U0, 3.0)
    assert np.allclose(geo.t, geo.s, atol=1e-12)
    d = sp.with_chart("stereo").fiber.distance(geo.x, np.broadcast_to(X0, geo.x.shape))
    assert np.allclose(d, geo.s, atol=1e-9)


@pytest.mark.parametrize("model", ["minkowski", "desitter", "static-sphere", "ads-portion"])
def test_trace_invariants(model):
    sp = build_model(model, 4)
    t_star = 0.0 if model != "minkowski" else 1.0
    s_max = 0.9 if model == "ads-portion" else 3.0
    geo = null_geodesic(sp, t_star, X0, U0, s_max)
    assert geo.null_residual() <= 1e-10
    q = geo.charge()
    assert np.ptp(q) <= 1e-10
    assert geo.cone_residual() <= 1e-9
    assert geo.deviation <= 1e-8


def test_ads_geodesic_leaves_interval():
    with pytest.raises(IntervalExitError) as err:
        null_geodesic(build_model("ads-portion", 4), 0.0, X0, U0, 3.0)
    # F = sin, so from t* = 0 the end of the interval is reached at s = 1
    assert err.value.parameter == pytest.approx(1.0, abs=1e-12)


def test_doubling_speed_halves_conjugate_parameter():
    sp = build_model("static-sphere", 4)
    one = run_jacobi(sp, 4.0, speed=1.0)
    two = run_jacobi(sp, 4.0, speed=2.0)
    assert two["conjugate_points"][0] == pytest.approx(one["conjugate_points"][0] / 2, abs=1e-8)
    assert two["agree"]


@settings(max_examples=3)
@given(st.floats(0.0, 2 * math.pi))
def test_conjugate_point_independent_of_direction(phi):
    u = np.array([0.0, math.cos(phi), math.sin(phi)])
    out = run_jacobi(build_model("static-sphere", 4), 3.5, direction=u)
    assert out["conjugate_points"] == [pytest.approx(math.pi, abs=1e-8)]
    assert out["full_multiplicity"] == [2]


def test_friedmann_scalar_and_full_agree():
    out = run_jacobi(build_model("friedmann-closed", 4), 6.0)
    assert out["agree"]
    assert out["agreement"] <= 1e-6
    assert len(out["conjugate_points"]) == 1
    assert out["full_multiplicity"] == [2]


def test_n5_multiplicity_is_three():
    out = run_jacobi(build_model("static-sphere", 5), 3.5)
    assert out["full_multiplicity"] == [3]
    assert out["conjugate_points"] == [pytest.approx(math.pi, abs=1e-8)]


def test_scalar_gate_refuses():
    geo = null_geodesic(build_model("static-sphere", 4), 0.0, X0, U0, 2.0)
    with pytest.raises(PreconditionError):
        jacobi_scalar(geo, gate=-1.0)


def test_trace_export_keys():
    geo = null_geodesic(build_model("static-sphere", 4), 0.0, X0, U0, 2.0)
    sol = jacobi_scalar(geo)
    data = json.loads(sol.to_json(geo))
    assert {"s", "t", "r", "J", "conjugate_points", "multiplicity"} <= set(data)
    assert data["reparam_factor"] == 1.0


@pytest.mark.parametrize("kw", [dict(s_max=-1.0), dict(s_max=1.0, speed=0.0)])
def test_bad_arguments(kw):
    with pytest.raises(ConfigError):
        null_geodesic(build_model("minkowski", 4), 0.0, X0, U0, **kw)
