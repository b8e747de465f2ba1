import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nullrig import _pykernels, jets as J, kernels
from nullrig.jets import Jet, JetSpace

finite = st.floats(-1.5, 1.5)


def test_univariate_derivatives():
    # exp(sin x) at 0.3: derivatives from the chain rule by hand
    x0 = 0.3
    c = J.series_coeffs(lambda u: J.exp(J.sin(u)), np.array(x0), 3)
    e = math.exp(math.sin(x0))
    d1 = e * math.cos(x0)
    d2 = e * (math.cos(x0) ** 2 - math.sin(x0))
    assert c[0] == pytest.approx(e, rel=1e-15)
    assert c[1] == pytest.approx(d1, rel=1e-14)
    assert c[2] == pytest.approx(d2 / 2, rel=1e-13)


def test_gradient_and_hessian():
    x = Jet.variables(np.array([0.4, -0.7]), 2)
    f = x[0] ** 2 * x[1] + J.cos(x[0] * x[1])
    a, b = 0.4, -0.7
    grad = [2 * a * b - b * math.sin(a * b), a * a - a * math.sin(a * b)]
    hxx = 2 * b - b * b * math.cos(a * b)
    hxy = 2 * a - math.sin(a * b) - a * b * math.cos(a * b)
    hyy = -a * a * math.cos(a * b)
    assert np.allclose(f.gradient_values(), grad, rtol=1e-14, atol=1e-15)
    assert np.allclose(f.hessian_values(), [[hxx, hxy], [hxy, hyy]], rtol=1e-13, atol=1e-15)


def test_inverse_functions_roundtrip():
    x = Jet.variables(np.array([0.3]), 4)[0]
    for fwd, back in ((J.tan, J.arctan), (J.tanh, J.arctanh), (J.sin, J.arcsin),
                      (J.sinh, J.arcsinh), (J.exp, J.log)):
        y = back(fwd(x))
        assert np.allclose(y.c, x.c, atol=1e-13)


@given(finite, finite, st.integers(1, 5))
def test_product_rule(a, b, order):
    x = Jet.variables(np.array([a]), order)[0]
    f = J.sin(x) * J.exp(x * b)
    g = J.exp(x * b) * J.sin(x)
    assert np.allclose(f.c, g.c, rtol=1e-13, atol=1e-13)
    # d/dx of the product from the jet versus the product rule
    d = f.diff(0).c[0]
    ref = math.cos(a) * math.exp(a * b) + b * math.sin(a) * math.exp(a * b)
    assert d == pytest.approx(ref, rel=1e-12, abs=1e-13)


@given(st.floats(0.2, 2.0), st.integers(1, 6))
def test_invert_series(x0, k):
    a = J.series_coeffs(J.sinh, np.array(x0), k)
    b = J.invert_series(a)
    # compose: sinh(x0 + sum b_j y^j) - sinh(x0) = y + O(y^{k+1})
    sp = JetSpace.get(1, k)
    y = Jet(np.zeros(sp.M), sp)
    y.c[1] = 1.0
    x = Jet(b, sp) + x0
    out = (J.sinh(x) - math.sinh(x0)).c
    ref = np.zeros(sp.M)
    ref[1] = 1.0
    assert np.allclose(out, ref, atol=1e-10)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 40), st.integers(0, 2 ** 31))
def test_compiled_kernels_match_fallback(nvar, order, rows, seed):
    if kernels.BACKEND != "cython":
        pytest.skip("compiled kernels not built")
    from nullrig import _ckernels

    tab = JetSpace.get(nvar, order).table
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((rows, tab.m))
    b = rng.standard_normal((rows, tab.m))
    ref = _pykernels.taylor_mul(a, b, tab.ia, tab.ib, tab.starts)
    got = _ckernels.taylor_mul(a, b, tab.ia, tab.ib, tab.ic, tab.m)
    assert np.allclose(ref, got, rtol=1e-13, atol=1e-13)
    d = b.copy()
    d[:, 0] = 0.0
    c = rng.standard_normal((rows, order + 1))
    ref = _pykernels.series_eval(d, c, tab.ia, tab.ib, tab.starts)
    got = _ckernels.series_eval(d, c, tab.ia, tab.ib, tab.ic, tab.m)
    assert np.allclose(ref, got, rtol=1e-12, atol=1e-12)


def test_fit_taylor_recovers_polynomial():
    def fn(p):
        return 1 + p[..., 0] * 2 - p[..., 1] ** 2 + p[..., 0] * p[..., 1] * 0.5
    base = np.array([[0.3, -0.2]])
    fit = J.fit_taylor(fn, base, 2, 1e-2)
    exact = fn(Jet.variables(base, 2))
    assert np.allclose(fit.c, exact.c, atol=1e-9)
