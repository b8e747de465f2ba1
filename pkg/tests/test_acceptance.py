"""Acceptance criteria, one test each.

Every criterion prints a single PASS/FAIL line; the lines are repeated in the
pytest terminal summary. Run this file directly for the lines alone.
"""
import functools
import math
import time

import numpy as np
import pytest

from nullrig.grw import build_model, quad_loose
from nullrig.hypersurface import Rigging, umbilicity_scan
from nullrig.jacobi import run_jacobi
from nullrig.lightcone import (ConeSpec, cone_membership_test, cone_rho, default_cone_spec,
                               make_cone, make_surface, quadric_embedding_check,
                               space_form_tables, xi_flow_warp)
from nullrig.verifier import run_suite

RESULTS = {}

SUITE_CASES = [("minkowski", "cone"), ("minkowski", "table1-hyperplane"), ("desitter", "cone"),
               ("ads-portion", "cone"), ("static-sphere", "cone"), ("friedmann-closed", "cone")]
JET_SAMPLES = 100
FD_SAMPLES = 25
CONE_MODELS = ["minkowski", "desitter", "ads-portion", "static-sphere", "friedmann-closed"]


@functools.lru_cache(maxsize=None)
def _suite(model, kind):
    s = make_surface(build_model(model, 4), kind)
    jet = run_suite(s, Rigging.f_dt(), JET_SAMPLES, seed=0, tol=1e-7)
    fd = run_suite(s, Rigging.f_dt(), FD_SAMPLES, seed=0, mode="fd", tol=1e-4)
    bad = [f"{model}/{kind}/{r.mode}:{c.id}" for r in (jet, fd) for c in r.checks
           if c.status == "fail"]
    n_pass = sum(c.status == "pass" for c in jet.checks)
    return jet.passed and fd.passed, tuple(bad), n_pass


def _umbilic_law(model):
    sp = build_model(model, 4)
    spec = default_cone_spec(sp)
    cone = make_cone(sp, spec)
    x = cone.sample(np.random.default_rng(0), 60)
    rep = umbilicity_scan(cone, Rigging.f_dt(), x)
    t = cone.height(x)
    rho_err = float(np.abs(rep.rho - cone_rho(sp, spec, t)).max())
    return rep.residual, rho_err


def crit1():
    bad, counts = [], []
    for model, kind in SUITE_CASES:
        ok, b, n_pass = _suite(model, kind)
        bad += list(b)
        counts.append(n_pass)
    return not bad, f"jet {JET_SAMPLES} pts at 1e-7, fd {FD_SAMPLES} pts at 1e-4; " \
                    f"checks passed per surface {counts}; failures {bad}"


def crit2():
    expect = [("minkowski", 2.0, 1.0, None), ("desitter", 1.0, 2 / math.sinh(1.0), math.tanh(1.0)),
              ("ads-portion", math.pi / 4, 2 * math.sqrt(2), None)]
    worst = 0.0
    for model, t0, H, radius in expect:
        row = space_form_tables(model, t0, 4)
        worst = max(worst, abs(row.H_engine - H))
        if radius is not None:
            worst = max(worst, abs(row.radius_engine - radius))
    return worst <= 1e-8, f"max deviation from the closed forms {worst:.2e}"


def crit3():
    worst = 0.0
    for model in ("minkowski", "desitter", "ads-portion"):
        g = make_surface(build_model(model, 4), "table1")
        rep = umbilicity_scan(g, Rigging.f_dt(), g.sample(np.random.default_rng(1), 50))
        worst = max(worst, rep.max_B)
    return worst <= 1e-8, f"max|B| over the three graphs {worst:.2e}"


def crit4():
    res = {m: _umbilic_law(m) for m in CONE_MODELS}
    worst_B = max(r[0] for r in res.values())
    worst_rho = max(r[1] for r in res.values())
    return worst_B <= 1e-8 and worst_rho <= 1e-8, \
        f"max|B - rho g| {worst_B:.2e}, rho vs closed form {worst_rho:.2e}"


def crit5():
    st = run_jacobi(build_model("static-sphere", 4), 4.0)
    ok = (len(st["conjugate_points"]) == 1 and abs(st["conjugate_points"][0] - math.pi) <= 1e-8
          and st["full_multiplicity"] == [2])
    none = [run_jacobi(build_model(m, 4), 10.0)["full_conjugate_points"]
            for m in ("minkowski", "desitter")]
    ok = ok and none == [[], []]
    return ok, f"static sphere {st['conjugate_points']} mult {st['full_multiplicity']}; " \
               f"minkowski/desitter to s=10 {none}"


def crit6():
    cases = [("static-sphere", 4.0), ("minkowski", 10.0), ("desitter", 10.0),
             ("ads-portion", 0.9), ("static-sphere", 7.0)]
    worst, flags = 0.0, []
    for model, smax in cases:
        out = run_jacobi(build_model(model, 4), smax)
        flags.append(out["agree"])
        worst = max(worst, out["agreement"])
    return all(flags) and worst <= 1e-6, f"max scalar/full discrepancy {worst:.2e} over {len(cases)} geodesics"


def crit7():
    w = build_model("friedmann-closed", 4).warp
    quad = quad_loose(lambda t: 1.0 / w(t), *w.interval)
    conformal = w.total_Finv_conformal()
    err = max(abs(quad - 2 * math.pi), abs(conformal - 2 * math.pi))
    ok1, bad, _ = _suite("friedmann-closed", "cone")
    B, rho = _umbilic_law("friedmann-closed")
    ok = err <= 1e-9 and ok1 and B <= 1e-8 and rho <= 1e-8
    return ok, f"|int 1/f - 2 pi| {err:.2e}; suite failures {list(bad)}; umbilic {B:.2e}, rho {rho:.2e}"


def crit8():
    mk = build_model("minkowski", 4)
    cone = cone_membership_test(make_surface(mk, "cone"))
    plane = cone_membership_test(make_surface(mk, "table1-hyperplane"))
    cx = make_surface(build_model("grw-counterexample", 4), "counterexample")
    cx_rep = cone_membership_test(cx)
    cx_umb = umbilicity_scan(cx, Rigging.f_dt(), cx.sample(np.random.default_rng(2), 40)).verdict
    ok = cone.is_cone and not plane.is_cone and not cx_rep.is_cone and cx_umb == "umbilic"
    return ok, f"cone {cone.is_cone}, hyperplane {plane.is_cone}, " \
               f"counterexample cone {cx_rep.is_cone} / {cx_umb}"


def crit9():
    reps = [quadric_embedding_check("phi", 0.7, 4, 50), quadric_embedding_check("psi", 0.7, 4, 50)]
    worst = max(max(r.metric_residual, r.quadric_residual, r.cone_residual) for r in reps)
    return worst <= 1e-8, f"worst pullback/quadric/cone residual {worst:.2e}"


def crit10():
    t0 = 2.0
    cone = make_cone(build_model("minkowski", 4), ConeSpec(0.0), t0)
    r = np.linspace(0.1, 1.8, 8)
    flow = xi_flow_warp(cone, Rigging.f_dt(), np.array([t0, 1.0, 0.5]), 1.8, r_eval=r)
    lam = (t0 - r) / t0
    err = max(np.abs(flow.lambda_H - lam).max(), np.abs(flow.lambda_leaf - lam).max())
    return err <= 1e-7, f"max |lambda - (t0 - r)/t0| {err:.2e}"


CRITERIA = [
    (1, "identity suite on six surfaces", crit1),
    (2, "cone table closed forms", crit2),
    (3, "totally geodesic graphs", crit3),
    (4, "umbilic cone law", crit4),
    (5, "conjugate points", crit5),
    (6, "scalar vs full Jacobi", crit6),
    (7, "Friedmann closed model", crit7),
    (8, "cone membership discrimination", crit8),
    (9, "quadric embeddings", crit9),
    (10, "twisted warp along the xi-flow", crit10),
]


def _run(num, title, fn):
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure of the criterion, reported as such
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    line = f"{'PASS' if ok else 'FAIL'} criterion {num:2d} ({title}): {detail} " \
           f"[{time.perf_counter() - start:.1f}s]"
    RESULTS[num] = line
    print(line)
    return ok, line


@pytest.mark.parametrize("num,title,fn", CRITERIA, ids=[f"criterion{c[0]}" for c in CRITERIA])
def test_criterion(num, title, fn):
    ok, line = _run(num, title, fn)
    assert ok, line


if __name__ == "__main__":
    for c in CRITERIA:
        _run(*c)
