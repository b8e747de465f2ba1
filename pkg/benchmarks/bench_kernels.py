"""Compiled vs numpy Taylor kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Times the two kernels on jet shapes the engine actually uses (4 chart
variables, orders 2 to 5) and, in a subprocess per backend, one full
rigged-geometry build on a Minkowski cone.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from nullrig import _pykernels
from nullrig.jets import JetSpace

try:
    from nullrig import _ckernels
except ImportError:
    _ckernels = None

GEOMETRY = """
import time, numpy as np
from nullrig import kernels
from nullrig.grw import build_model
from nullrig.hypersurface import RiggedGeometry, Rigging
from nullrig.lightcone import make_surface
cone = make_surface(build_model("minkowski", 5), "cone", 2.0)
x = cone.sample(np.random.default_rng(0), 100)
RiggedGeometry(cone, Rigging.f_dt(), x)
best = 1e9
for _ in range(5):
    t = time.perf_counter()
    RiggedGeometry(cone, Rigging.f_dt(), x)
    best = min(best, time.perf_counter() - t)
print(kernels.BACKEND, best)
"""


def bench_kernels(rows, repeat):
    rng = np.random.default_rng(0)
    out = []
    for order in (2, 3, 4, 5):
        tab = JetSpace.get(4, order).table
        m = tab.m
        a = rng.standard_normal((rows, m))
        b = rng.standard_normal((rows, m))
        d = b.copy()
        d[:, 0] = 0.0
        c = rng.standard_normal((rows, order + 1))
        py_mul = min(timeit.repeat(lambda: _pykernels.taylor_mul(a, b, tab.ia, tab.ib, tab.starts),
                                   number=1, repeat=repeat))
        py_ser = min(timeit.repeat(lambda: _pykernels.series_eval(d, c, tab.ia, tab.ib, tab.starts),
                                   number=1, repeat=repeat))
        row = dict(order=order, monomials=m, py_mul=py_mul, py_series=py_ser)
        if _ckernels is not None:
            ref = _pykernels.taylor_mul(a, b, tab.ia, tab.ib, tab.starts)
            got = _ckernels.taylor_mul(a, b, tab.ia, tab.ib, tab.ic, m)
            assert np.allclose(ref, got, rtol=1e-12, atol=1e-12)
            row["c_mul"] = min(timeit.repeat(
                lambda: _ckernels.taylor_mul(a, b, tab.ia, tab.ib, tab.ic, m), number=1,
                repeat=repeat))
            row["c_series"] = min(timeit.repeat(
                lambda: _ckernels.series_eval(d, c, tab.ia, tab.ib, tab.ic, m), number=1,
                repeat=repeat))
        out.append(row)
    return out


def bench_geometry():
    res = {}
    for flag in ("0", "1"):
        env = dict(os.environ, NULLRIG_PURE_PYTHON=flag)
        txt = subprocess.run([sys.executable, "-c", GEOMETRY], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        res[txt[0]] = float(txt[1])
    return res


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; timing the numpy fallback only")
    print(f"{'order':>5} {'M':>4} {'py mul':>10} {'c mul':>10} {'x':>6} "
          f"{'py series':>10} {'c series':>10} {'x':>6}")
    for r in bench_kernels(args.rows, args.repeat):
        cm, cs = r.get("c_mul", float("nan")), r.get("c_series", float("nan"))
        print(f"{r['order']:>5} {r['monomials']:>4} {r['py_mul'] * 1e3:>8.3f}ms {cm * 1e3:>8.3f}ms "
              f"{r['py_mul'] / cm:>6.1f} {r['py_series'] * 1e3:>8.3f}ms {cs * 1e3:>8.3f}ms "
              f"{r['py_series'] / cs:>6.1f}")
    geo = bench_geometry()
    print("rigged geometry, 100 cone points, n=5:",
          ", ".join(f"{k} {v * 1e3:.1f}ms" for k, v in sorted(geo.items())))


if __name__ == "__main__":
    main()
