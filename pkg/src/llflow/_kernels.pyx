# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stencil kernels for the map flows and the scalar heat equation.

Same call signatures as ``llflow._kernels_py``; see that module for the
semantics.  Fields are C-contiguous float64 (n1, n2) arrays, the ring is
Dirichlet data and is never modified by the evolution loops.
"""

import numpy as np

from libc.math cimport exp, sqrt, isfinite

COMPILED = True


cdef void _rhs_interior(double[:, ::1] u1, double[:, ::1] u2,
                        double[::1] ex2, double c1, double c2,
                        double q1, double q2, double alpha, double beta,
                        double[:, ::1] o1, double[:, ::1] o2) noexcept nogil:
    cdef Py_ssize_t n1 = u1.shape[0], n2 = u1.shape[1], i, j
    cdef double e, a, b, d1u1, d2u1, d1u2, d2u2, lap1, lap2, E, s
    cdef double tau1, tau2
    for i in range(1, n1 - 1):
        for j in range(1, n2 - 1):
            e = ex2[j]
            a = u1[i, j]
            b = u2[i, j]
            d1u1 = (u1[i + 1, j] - u1[i - 1, j]) * c1
            d2u1 = (u1[i, j + 1] - u1[i, j - 1]) * c2
            d1u2 = (u2[i + 1, j] - u2[i - 1, j]) * c1
            d2u2 = (u2[i, j + 1] - u2[i, j - 1]) * c2
            lap1 = (e * (u1[i + 1, j] - 2.0 * a + u1[i - 1, j]) * q1
                    + (u1[i, j + 1] - 2.0 * a + u1[i, j - 1]) * q2 - d2u1)
            lap2 = (e * (u2[i + 1, j] - 2.0 * b + u2[i - 1, j]) * q1
                    + (u2[i, j + 1] - 2.0 * b + u2[i, j - 1]) * q2 - d2u2)
            E = exp(-2.0 * b)
            tau1 = lap1 - 2.0 * (e * d1u1 * d1u2 + d2u1 * d2u2)
            tau2 = lap2 + E * (e * d1u1 * d1u1 + d2u1 * d2u1)
            if beta == 0.0:
                o1[i, j] = alpha * tau1
                o2[i, j] = alpha * tau2
            else:
                s = sqrt(E)
                o1[i, j] = alpha * tau1 + beta * tau2 / s
                o2[i, j] = alpha * tau2 - beta * tau1 * s


cdef void _zero_ring(double[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t n1 = a.shape[0], n2 = a.shape[1], i, j
    for j in range(n2):
        a[0, j] = 0.0
        a[n1 - 1, j] = 0.0
    for i in range(n1):
        a[i, 0] = 0.0
        a[i, n2 - 1] = 0.0


def ll_rhs(double[:, ::1] u1, double[:, ::1] u2, double[::1] ex2,
           double h1, double h2, double alpha, double beta,
           double[:, ::1] out1, double[:, ::1] out2):
    cdef double c1 = 1.0 / (2.0 * h1), c2 = 1.0 / (2.0 * h2)
    cdef double q1 = 1.0 / (h1 * h1), q2 = 1.0 / (h2 * h2)
    with nogil:
        _zero_ring(out1)
        _zero_ring(out2)
        _rhs_interior(u1, u2, ex2, c1, c2, q1, q2, alpha, beta, out1, out2)


def rk4_map_steps(double[:, ::1] u1, double[:, ::1] u2, double[::1] ex2,
                  double h1, double h2, double alpha, double beta,
                  double dt, int nsteps):
    cdef Py_ssize_t n1 = u1.shape[0], n2 = u1.shape[1], i, j
    cdef double c1 = 1.0 / (2.0 * h1), c2 = 1.0 / (2.0 * h2)
    cdef double q1 = 1.0 / (h1 * h1), q2 = 1.0 / (h2 * h2)
    cdef double hdt = 0.5 * dt, sdt = dt / 6.0, acc
    cdef int n, done = nsteps
    w = [np.zeros((n1, n2)) for _ in range(10)]
    cdef double[:, ::1] k1a = w[0], k1b = w[1], k2a = w[2], k2b = w[3]
    cdef double[:, ::1] k3a = w[4], k3b = w[5], k4a = w[6], k4b = w[7]
    ya_np = np.array(u1, copy=True)
    yb_np = np.array(u2, copy=True)
    cdef double[:, ::1] ya = ya_np, yb = yb_np
    with nogil:
        for n in range(nsteps):
            _rhs_interior(u1, u2, ex2, c1, c2, q1, q2, alpha, beta, k1a, k1b)
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    ya[i, j] = u1[i, j] + hdt * k1a[i, j]
                    yb[i, j] = u2[i, j] + hdt * k1b[i, j]
            _rhs_interior(ya, yb, ex2, c1, c2, q1, q2, alpha, beta, k2a, k2b)
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    ya[i, j] = u1[i, j] + hdt * k2a[i, j]
                    yb[i, j] = u2[i, j] + hdt * k2b[i, j]
            _rhs_interior(ya, yb, ex2, c1, c2, q1, q2, alpha, beta, k3a, k3b)
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    ya[i, j] = u1[i, j] + dt * k3a[i, j]
                    yb[i, j] = u2[i, j] + dt * k3b[i, j]
            _rhs_interior(ya, yb, ex2, c1, c2, q1, q2, alpha, beta, k4a, k4b)
            acc = 0.0
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    u1[i, j] += sdt * (k1a[i, j] + 2.0 * k2a[i, j]
                                       + 2.0 * k3a[i, j] + k4a[i, j])
                    u2[i, j] += sdt * (k1b[i, j] + 2.0 * k2b[i, j]
                                       + 2.0 * k3b[i, j] + k4b[i, j])
                    acc += u1[i, j] + u2[i, j]
            if not isfinite(acc):
                done = n + 1
                break
    return done


cdef void _wave_rhs(double[:, ::1] u1, double[:, ::1] u2,
                    double[:, ::1] v1, double[:, ::1] v2,
                    double[::1] ex2, double c1, double c2,
                    double q1, double q2, double alpha, double beta,
                    double delta,
                    double[:, ::1] ou1, double[:, ::1] ou2,
                    double[:, ::1] ov1, double[:, ::1] ov2) noexcept nogil:
    cdef Py_ssize_t n1 = u1.shape[0], n2 = u1.shape[1], i, j
    cdef double e, a, b, d1u1, d2u1, d1u2, d2u2, lap1, lap2, E, s
    cdef double tau1, tau2, w1, w2
    cdef double D = alpha * alpha + beta * beta
    cdef double cj = alpha * beta / D, cd = alpha * alpha / D
    cdef double inv = 1.0 / delta
    for i in range(1, n1 - 1):
        for j in range(1, n2 - 1):
            e = ex2[j]
            a = u1[i, j]
            b = u2[i, j]
            d1u1 = (u1[i + 1, j] - u1[i - 1, j]) * c1
            d2u1 = (u1[i, j + 1] - u1[i, j - 1]) * c2
            d1u2 = (u2[i + 1, j] - u2[i - 1, j]) * c1
            d2u2 = (u2[i, j + 1] - u2[i, j - 1]) * c2
            lap1 = (e * (u1[i + 1, j] - 2.0 * a + u1[i - 1, j]) * q1
                    + (u1[i, j + 1] - 2.0 * a + u1[i, j - 1]) * q2 - d2u1)
            lap2 = (e * (u2[i + 1, j] - 2.0 * b + u2[i - 1, j]) * q1
                    + (u2[i, j + 1] - 2.0 * b + u2[i, j - 1]) * q2 - d2u2)
            E = exp(-2.0 * b)
            s = sqrt(E)
            tau1 = lap1 - 2.0 * (e * d1u1 * d1u2 + d2u1 * d2u2)
            tau2 = lap2 + E * (e * d1u1 * d1u1 + d2u1 * d2u1)
            w1 = v1[i, j]
            w2 = v2[i, j]
            ou1[i, j] = w1
            ou2[i, j] = w2
            ov1[i, j] = 2.0 * w1 * w2 + inv * (alpha * tau1 + cj * w2 / s
                                               - cd * w1)
            ov2[i, j] = -E * w1 * w1 + inv * (alpha * tau2 - cj * w1 * s
                                              - cd * w2)


def wave_rhs(double[:, ::1] u1, double[:, ::1] u2,
             double[:, ::1] v1, double[:, ::1] v2, double[::1] ex2,
             double h1, double h2, double alpha, double beta, double delta,
             double[:, ::1] ou1, double[:, ::1] ou2,
             double[:, ::1] ov1, double[:, ::1] ov2):
    cdef double c1 = 1.0 / (2.0 * h1), c2 = 1.0 / (2.0 * h2)
    cdef double q1 = 1.0 / (h1 * h1), q2 = 1.0 / (h2 * h2)
    with nogil:
        _zero_ring(ou1)
        _zero_ring(ou2)
        _zero_ring(ov1)
        _zero_ring(ov2)
        _wave_rhs(u1, u2, v1, v2, ex2, c1, c2, q1, q2, alpha, beta, delta,
                  ou1, ou2, ov1, ov2)


def rk4_wave_steps(double[:, ::1] u1, double[:, ::1] u2,
                   double[:, ::1] v1, double[:, ::1] v2, double[::1] ex2,
                   double h1, double h2, double alpha, double beta,
                   double delta, double dt, int nsteps):
    cdef Py_ssize_t n1 = u1.shape[0], n2 = u1.shape[1], i, j
    cdef double c1 = 1.0 / (2.0 * h1), c2 = 1.0 / (2.0 * h2)
    cdef double q1 = 1.0 / (h1 * h1), q2 = 1.0 / (h2 * h2)
    cdef double hdt = 0.5 * dt, sdt = dt / 6.0, acc
    cdef int n, done = nsteps
    ks = [np.zeros((n1, n2)) for _ in range(16)]
    cdef double[:, ::1] ka0 = ks[0], ka1 = ks[1], ka2 = ks[2], ka3 = ks[3]
    cdef double[:, ::1] kb0 = ks[4], kb1 = ks[5], kb2 = ks[6], kb3 = ks[7]
    cdef double[:, ::1] kc0 = ks[8], kc1 = ks[9], kc2 = ks[10], kc3 = ks[11]
    cdef double[:, ::1] kd0 = ks[12], kd1 = ks[13], kd2 = ks[14], kd3 = ks[15]
    y = [np.array(a, copy=True) for a in (u1, u2, v1, v2)]
    cdef double[:, ::1] y0 = y[0], y1 = y[1], y2 = y[2], y3 = y[3]
    with nogil:
        for n in range(nsteps):
            _wave_rhs(u1, u2, v1, v2, ex2, c1, c2, q1, q2, alpha, beta,
                      delta, ka0, ka1, ka2, ka3)
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    y0[i, j] = u1[i, j] + hdt * ka0[i, j]
                    y1[i, j] = u2[i, j] + hdt * ka1[i, j]
                    y2[i, j] = v1[i, j] + hdt * ka2[i, j]
                    y3[i, j] = v2[i, j] + hdt * ka3[i, j]
            _wave_rhs(y0, y1, y2, y3, ex2, c1, c2, q1, q2, alpha, beta,
                      delta, kb0, kb1, kb2, kb3)
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    y0[i, j] = u1[i, j] + hdt * kb0[i, j]
                    y1[i, j] = u2[i, j] + hdt * kb1[i, j]
                    y2[i, j] = v1[i, j] + hdt * kb2[i, j]
                    y3[i, j] = v2[i, j] + hdt * kb3[i, j]
            _wave_rhs(y0, y1, y2, y3, ex2, c1, c2, q1, q2, alpha, beta,
                      delta, kc0, kc1, kc2, kc3)
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    y0[i, j] = u1[i, j] + dt * kc0[i, j]
                    y1[i, j] = u2[i, j] + dt * kc1[i, j]
                    y2[i, j] = v1[i, j] + dt * kc2[i, j]
                    y3[i, j] = v2[i, j] + dt * kc3[i, j]
            _wave_rhs(y0, y1, y2, y3, ex2, c1, c2, q1, q2, alpha, beta,
                      delta, kd0, kd1, kd2, kd3)
            acc = 0.0
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    u1[i, j] += sdt * (ka0[i, j] + 2.0 * kb0[i, j]
                                       + 2.0 * kc0[i, j] + kd0[i, j])
                    u2[i, j] += sdt * (ka1[i, j] + 2.0 * kb1[i, j]
                                       + 2.0 * kc1[i, j] + kd1[i, j])
                    v1[i, j] += sdt * (ka2[i, j] + 2.0 * kb2[i, j]
                                       + 2.0 * kc2[i, j] + kd2[i, j])
                    v2[i, j] += sdt * (ka3[i, j] + 2.0 * kb3[i, j]
                                       + 2.0 * kc3[i, j] + kd3[i, j])
                    acc += u1[i, j] + v1[i, j] + u2[i, j] + v2[i, j]
            if not isfinite(acc):
                done = n + 1
                break
    return done


def rkc2_map_step(double[:, ::1] u1, double[:, ::1] u2, double[::1] ex2,
                  double h1, double h2, double alpha, double dt,
                  double mu1t, double[::1] mu, double[::1] nu,
                  double[::1] mut, double[::1] gt):
    cdef Py_ssize_t n1 = u1.shape[0], n2 = u1.shape[1], i, j
    cdef double c1 = 1.0 / (2.0 * h1), c2 = 1.0 / (2.0 * h2)
    cdef double q1 = 1.0 / (h1 * h1), q2 = 1.0 / (h2 * h2)
    cdef int s = mu.shape[0] - 1, jj
    cdef double c0, acc
    bufs = [np.array(u1, copy=True) for _ in range(3)]
    bufs += [np.array(u2, copy=True) for _ in range(3)]
    ks = [np.zeros((n1, n2)) for _ in range(4)]
    cdef double[:, ::1] ym2a = bufs[0], ym1a = bufs[1], ycura = bufs[2]
    cdef double[:, ::1] ym2b = bufs[3], ym1b = bufs[4], ycurb = bufs[5]
    cdef double[:, ::1] f0a = ks[0], f0b = ks[1], fja = ks[2], fjb = ks[3]
    with nogil:
        _rhs_interior(u1, u2, ex2, c1, c2, q1, q2, alpha, 0.0, f0a, f0b)
        for i in range(1, n1 - 1):
            for j in range(1, n2 - 1):
                ym1a[i, j] = u1[i, j] + mu1t * dt * f0a[i, j]
                ym1b[i, j] = u2[i, j] + mu1t * dt * f0b[i, j]
    for jj in range(2, s + 1):
        c0 = 1.0 - mu[jj] - nu[jj]
        with nogil:
            _rhs_interior(ym1a, ym1b, ex2, c1, c2, q1, q2, alpha, 0.0,
                          fja, fjb)
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    ycura[i, j] = (c0 * u1[i, j] + mu[jj] * ym1a[i, j]
                                   + nu[jj] * ym2a[i, j]
                                   + mut[jj] * dt * fja[i, j]
                                   + gt[jj] * dt * f0a[i, j])
                    ycurb[i, j] = (c0 * u2[i, j] + mu[jj] * ym1b[i, j]
                                   + nu[jj] * ym2b[i, j]
                                   + mut[jj] * dt * fjb[i, j]
                                   + gt[jj] * dt * f0b[i, j])
        ym2a, ym1a, ycura = ym1a, ycura, ym2a
        ym2b, ym1b, ycurb = ym1b, ycurb, ym2b
    acc = 0.0
    with nogil:
        for i in range(1, n1 - 1):
            for j in range(1, n2 - 1):
                u1[i, j] = ym1a[i, j]
                u2[i, j] = ym1b[i, j]
                acc += u1[i, j] + u2[i, j]
    if not isfinite(acc):
        return 0
    return 1


cdef void _scalar_rhs(double[:, ::1] f, double[::1] ex2, double c2,
                      double q1, double q2,
                      double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1], i, j
    cdef double a
    for i in range(1, n1 - 1):
        for j in range(1, n2 - 1):
            a = f[i, j]
            out[i, j] = (ex2[j] * (f[i + 1, j] - 2.0 * a + f[i - 1, j]) * q1
                         + (f[i, j + 1] - 2.0 * a + f[i, j - 1]) * q2
                         - (f[i, j + 1] - f[i, j - 1]) * c2)


def scalar_rhs(double[:, ::1] f, double[::1] ex2, double h1, double h2,
               double[:, ::1] out):
    cdef double c2 = 1.0 / (2.0 * h2)
    cdef double q1 = 1.0 / (h1 * h1), q2 = 1.0 / (h2 * h2)
    with nogil:
        _zero_ring(out)
        _scalar_rhs(f, ex2, c2, q1, q2, out)


def rkc2_scalar_step(double[:, ::1] f, double[::1] ex2, double h1,
                     double h2, double dt, double mu1t, double[::1] mu,
                     double[::1] nu, double[::1] mut, double[::1] gt):
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1], i, j
    cdef double c2 = 1.0 / (2.0 * h2)
    cdef double q1 = 1.0 / (h1 * h1), q2 = 1.0 / (h2 * h2)
    cdef int s = mu.shape[0] - 1, jj
    cdef double c0, acc
    bufs = [np.array(f, copy=True) for _ in range(3)]
    ks = [np.zeros((n1, n2)) for _ in range(2)]
    cdef double[:, ::1] ym2 = bufs[0], ym1 = bufs[1], ycur = bufs[2]
    cdef double[:, ::1] f0 = ks[0], fj = ks[1]
    with nogil:
        _scalar_rhs(f, ex2, c2, q1, q2, f0)
        for i in range(1, n1 - 1):
            for j in range(1, n2 - 1):
                ym1[i, j] = f[i, j] + mu1t * dt * f0[i, j]
    for jj in range(2, s + 1):
        c0 = 1.0 - mu[jj] - nu[jj]
        with nogil:
            _scalar_rhs(ym1, ex2, c2, q1, q2, fj)
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    ycur[i, j] = (c0 * f[i, j] + mu[jj] * ym1[i, j]
                                  + nu[jj] * ym2[i, j]
                                  + mut[jj] * dt * fj[i, j]
                                  + gt[jj] * dt * f0[i, j])
        ym2, ym1, ycur = ym1, ycur, ym2
    acc = 0.0
    with nogil:
        for i in range(1, n1 - 1):
            for j in range(1, n2 - 1):
                f[i, j] = ym1[i, j]
                acc += f[i, j]
    if not isfinite(acc):
        return 0
    return 1


def euler_scalar_steps(double[:, ::1] f, double[::1] ex2, double h1,
                       double h2, double dt, int nsteps):
    cdef Py_ssize_t n1 = f.shape[0], n2 = f.shape[1], i, j
    cdef double c2 = 1.0 / (2.0 * h2)
    cdef double q1 = 1.0 / (h1 * h1), q2 = 1.0 / (h2 * h2)
    cdef double acc
    cdef int n, done = nsteps
    rhs_np = np.zeros((n1, n2))
    cdef double[:, ::1] rhs = rhs_np
    with nogil:
        for n in range(nsteps):
            _scalar_rhs(f, ex2, c2, q1, q2, rhs)
            acc = 0.0
            for i in range(1, n1 - 1):
                for j in range(1, n2 - 1):
                    f[i, j] += dt * rhs[i, j]
                    acc += f[i, j]
            if not isfinite(acc):
                done = n + 1
                break
    return done
