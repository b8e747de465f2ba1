import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nullrig import verifier
from nullrig.grw import build_model
from nullrig.hypersurface import Rigging
from nullrig.lightcone import make_surface
from nullrig.verifier import CATALOG, residual, run_suite

SMALL = 30


def surf(model, kind, n=4, t0=None):
    return make_surface(build_model(model, n), kind, t0)


def statuses(rep):
    return {c.id: c.status for c in rep.checks}


def test_catalog_shape():
    ids = [c.id for c in CATALOG]
    assert len(ids) >= 31 and len(set(ids)) == len(ids)
    assert all(c.statement.strip() and c.name.strip() for c in CATALOG)


def test_residual_normalisation():
    assert residual(np.array([1.0]), np.array([1.0]))[0] == 0.0
    assert residual(np.array([2.0]), np.array([1.0]))[0] == pytest.approx(0.5)
    # cancellation is judged against the size of the terms
    assert residual(np.array([1e-3]), np.array([0.0]), np.array([1e6]))[0] == pytest.approx(1e-9)


@given(st.floats(1.0, 1e6), st.floats(1.0, 10.0), st.floats(-1.0, 1.0))
def test_residual_scale_invariant_above_floor(a, lhs, d):
    rhs = lhs + d
    r1 = residual(np.array([lhs]), np.array([rhs]))[0]
    r2 = residual(np.array([a * lhs]), np.array([a * rhs]))[0]
    # a*lhs and a*rhs round independently, so allow a few ulps of the unit scale
    assert r2 == pytest.approx(r1, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("model,kind,rig", [
    ("minkowski", "cone", "f_dt"), ("minkowski", "hyperplane", "f_dt"),
    ("desitter", "cone", "grad_t"), ("ads-portion", "cone", "f_dt"),
    ("static-sphere", "cone", "grad_t"), ("grw-counterexample", "counterexample", "f_dt"),
    ("minkowski", "tube", "f_dt"), ("desitter", "table1", "f_dt"),
])
def test_suites_pass(model, kind, rig):
    s = make_surface(build_model(model, 4), kind) if kind != "counterexample" else None
    if s is None:
        from nullrig.lightcone import make_counterexample
        s = make_counterexample(4)
    rep = run_suite(s, Rigging.from_name(rig, s.space), SMALL, seed=3)
    bad = [(c.id, c.max_residual, c.note) for c in rep.checks if c.status not in ("pass", "skipped")]
    assert rep.passed, bad


def test_n3_and_n5():
    for n in (3, 5):
        rep = run_suite(surf("desitter", "cone", n), Rigging.f_dt(), SMALL, seed=1)
        assert rep.passed
    rep3 = run_suite(surf("minkowski", "cone", 3), Rigging.f_dt(), SMALL)
    assert statuses(rep3)["C18"] == "skipped"


def test_applicability_flags():
    hp = surf("minkowski", "hyperplane")
    rep = run_suite(hp, Rigging.f_dt(), SMALL)
    st_ = statuses(rep)
    assert st_["C28"] == "pass" and st_["C12"] == "pass"
    assert rep.by_id("C12").max_residual == 0.0
    ds = surf("desitter", "cone")
    assert statuses(run_suite(ds, Rigging.f_dt(), SMALL))["C17"] == "pass"
    assert statuses(run_suite(ds, Rigging.grad_t(), SMALL))["C17"] == "skipped"


def _rotation_rigging():
    from nullrig import jets as J

    def fld(space, p):
        t = p[..., 0]
        z = t * 0.0
        comps = [z + 1.0, p[..., 2] * -0.3, p[..., 1] * 0.3] + [z] * (space.n - 3)
        return J.stack(comps, axis=-1) if J.is_jet(p) else np.stack(comps, axis=-1)
    return Rigging.custom(fld)


def test_non_closed_rigging_skips_closed_checks():
    rep = run_suite(surf("minkowski", "tube"), _rotation_rigging(), SMALL, seed=2)
    assert not rep.flags["closed"]
    st_ = statuses(rep)
    for cid in ("C24", "C25", "C26", "C27", "C28", "C29", "C30", "C31"):
        assert st_[cid] == "skipped"
    assert rep.passed
    assert all(c.status != "skipped" or c.max_residual is None for c in rep.checks)


def test_fd_cross_mode():
    for model, kind in (("desitter", "cone"), ("minkowski", "tube")):
        rep = run_suite(surf(model, kind), Rigging.f_dt(), 20, seed=5, mode="fd")
        assert rep.passed, [(c.id, c.max_residual) for c in rep.checks if c.status == "fail"]
        assert rep.checks[0].tolerance == 1e-4


def test_reproducible_report():
    s = surf("static-sphere", "cone")
    a = run_suite(s, Rigging.f_dt(), 20, seed=11).to_json()
    b = run_suite(s, Rigging.f_dt(), 20, seed=11).to_json()
    assert a == b
    json.loads(a)


MUTATIONS = {
    "B": lambda g: g.B.c.__imul__(1.001),
    "tau": lambda g: g.tau.c.__iadd__(1e-3),
    "C": lambda g: g.C.c.__imul__(1.001),
    "H": lambda g: g.H.c.__iadd__(1e-3),
    "L": lambda g: g.L.c[:, 0, 1, 1, :].__iadd__(1e-3),
    # the rigged metric of this cone is flat, so the corruption must be additive
    "Riem_t": lambda g: (g.Riem_t.c[:, 0, 1, 0, 1, 0].__iadd__(1e-3),
                         g.Riem_t.c[:, 0, 1, 1, 0, 0].__isub__(1e-3)),
    "Gam": lambda g: g.Gam.c[:, 0, 1, 1, :].__iadd__(1e-3),
    "N": lambda g: g.N_amb.c.__imul__(1.001),
}


@pytest.mark.parametrize("name", sorted(MUTATIONS))
def test_mutations_are_caught(name, monkeypatch):
    real = verifier.RiggedGeometry

    def corrupted(*a, **kw):
        geo = real(*a, **kw)
        MUTATIONS[name](geo)
        return geo

    monkeypatch.setattr(verifier, "RiggedGeometry", corrupted)
    s = surf("desitter", "cone")
    try:
        rep = run_suite(s, Rigging.f_dt(), 20, seed=4)
    except verifier.RiggingError:
        return  # the rigging validation already notices
    assert not rep.passed
