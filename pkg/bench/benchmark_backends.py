#!/usr/bin/env python3
"""Time the compiled kernels against the numpy fallback.

Run from the repository root:

    python3 bench/benchmark_backends.py [--sizes 96 192]

Reports per-step times for the flow right-hand side, RK4 stepping, one
Chebyshev relaxation step and the scalar heat update, plus the implied
wall time per unit of flow time at the CFL-bounded step.
"""

import argparse
import time

import numpy as np

from llflow import _kernels_py as kpy
from llflow import backend, fields as F

try:
    from llflow import _kernels as kc
except ImportError:
    kc = None


def timeit(fn, repeat):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_grid(n):
    g = F.Grid((-4, 4), (-3, 3), n, n)
    X1, X2 = g.mesh()
    u1 = X1 + 0.05 * np.sin(X1) * np.cos(X2)
    u2 = X2 + 0.05 * np.cos(X1) * np.sin(X2)
    out1, out2 = np.zeros_like(u1), np.zeros_like(u1)
    lam = backend.spectral_radius(g, np.sqrt(2.0))
    dt = 0.85 * 2.5 / lam
    s = 40
    mu1t, mu, nu, mut, gt = backend.rkc2_coefficients(s)
    dt_rkc = 0.9 * backend.rkc_beta(s) / backend.spectral_radius(g, 1.0)
    f = np.exp(-(X1 ** 2 + X2 ** 2))

    rows = []
    mods = [("python", kpy)] + ([("compiled", kc)] if kc else [])
    for name, mod in mods:
        r = 20 if (name == "compiled" or n <= 96) else 3
        t_rhs = timeit(lambda: mod.ll_rhs(u1, u2, g.ex2, g.h1, g.h2,
                                          1.0, 1.0, out1, out2), r * 5)
        a1, a2 = u1.copy(), u2.copy()
        t_rk4 = timeit(lambda: mod.rk4_map_steps(a1, a2, g.ex2, g.h1, g.h2,
                                                 1.0, 1.0, dt, 1), r * 5)
        b1, b2 = u1.copy(), u2.copy()
        t_rkc = timeit(lambda: mod.rkc2_map_step(b1, b2, g.ex2, g.h1, g.h2,
                                                 1.0, dt_rkc, mu1t, mu, nu,
                                                 mut, gt), r)
        fc = f.copy()
        t_eul = timeit(lambda: mod.euler_scalar_steps(fc, g.ex2, g.h1,
                                                      g.h2, dt, 10), r)
        rows.append((name, t_rhs, t_rk4, t_rkc, t_eul / 10.0))

    print(f"\ngrid {n} x {n}   (CFL dt = {dt:.3e}, "
          f"{s}-stage Chebyshev dt = {dt_rkc:.3e})")
    print(f"{'backend':10s} {'rhs':>10s} {'rk4 step':>10s} "
          f"{'rkc step':>10s} {'euler':>10s} {'s/unit t (rk4)':>15s}")
    for name, t_rhs, t_rk4, t_rkc, t_eul in rows:
        print(f"{name:10s} {t_rhs * 1e3:9.3f}m {t_rk4 * 1e3:9.3f}m "
              f"{t_rkc * 1e3:9.3f}m {t_eul * 1e3:9.3f}m "
              f"{t_rk4 / dt:14.1f}s")
    if len(rows) == 2:
        speed = rows[0][2] / rows[1][2]
        print(f"rk4 speedup (compiled over python): {speed:.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[96, 192])
    args = ap.parse_args()
    print("backend selected at import:", backend.backend_name())
    for n in args.sizes:
        bench_grid(n)


if __name__ == "__main__":
    main()
