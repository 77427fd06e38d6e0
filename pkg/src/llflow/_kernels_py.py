"""Pure-numpy implementations of the hot kernels.

This module mirrors the compiled extension ``llflow._kernels`` function
for function; the backend selector picks whichever is available.  All
stencils act on (n1, n2) float64 arrays, keep the boundary ring fixed,
and write zeros into right-hand-side rings.

Evolution loops return the number of completed steps; a value smaller
than the requested count signals that a non-finite number appeared.
"""

import numpy as np

COMPILED = False


def _interior_rhs(u1, u2, ex2, h1, h2, alpha, beta, out1, out2):
    """Landau-Lifshitz right-hand side alpha*tau - beta*J(tau), interior."""
    c1 = 1.0 / (2.0 * h1)
    c2 = 1.0 / (2.0 * h2)
    q1 = 1.0 / (h1 * h1)
    q2 = 1.0 / (h2 * h2)
    e = ex2[None, 1:-1]

    a = u1[1:-1, 1:-1]
    d1u1 = (u1[2:, 1:-1] - u1[:-2, 1:-1]) * c1
    d2u1 = (u1[1:-1, 2:] - u1[1:-1, :-2]) * c2
    lap1 = (e * (u1[2:, 1:-1] - 2.0 * a + u1[:-2, 1:-1]) * q1
            + (u1[1:-1, 2:] - 2.0 * a + u1[1:-1, :-2]) * q2 - d2u1)

    b = u2[1:-1, 1:-1]
    d1u2 = (u2[2:, 1:-1] - u2[:-2, 1:-1]) * c1
    d2u2 = (u2[1:-1, 2:] - u2[1:-1, :-2]) * c2
    lap2 = (e * (u2[2:, 1:-1] - 2.0 * b + u2[:-2, 1:-1]) * q1
            + (u2[1:-1, 2:] - 2.0 * b + u2[1:-1, :-2]) * q2 - d2u2)

    E = np.exp(-2.0 * b)
    tau1 = lap1 - 2.0 * (e * d1u1 * d1u2 + d2u1 * d2u2)
    tau2 = lap2 + E * (e * d1u1 * d1u1 + d2u1 * d2u1)

    out1.fill(0.0)
    out2.fill(0.0)
    if beta == 0.0:
        out1[1:-1, 1:-1] = alpha * tau1
        out2[1:-1, 1:-1] = alpha * tau2
    else:
        s = np.sqrt(E)  # exp(-u2); exp(u2) = 1/s
        out1[1:-1, 1:-1] = alpha * tau1 + beta * tau2 / s
        out2[1:-1, 1:-1] = alpha * tau2 - beta * tau1 * s
    return out1, out2


def ll_rhs(u1, u2, ex2, h1, h2, alpha, beta, out1, out2):
    _interior_rhs(u1, u2, ex2, h1, h2, alpha, beta, out1, out2)


def wave_rhs(u1, u2, v1, v2, ex2, h1, h2, alpha, beta, delta,
             ou1, ou2, ov1, ov2):
    """First-order form of the damped wave approximation."""
    t1 = np.zeros_like(u1)
    t2 = np.zeros_like(u2)
    _interior_rhs(u1, u2, ex2, h1, h2, 1.0, 0.0, t1, t2)
    D = alpha * alpha + beta * beta
    E = np.exp(-2.0 * u2)
    s = np.sqrt(E)
    inv = 1.0 / delta
    ou1[...] = v1
    ou2[...] = v2
    ov1[...] = 2.0 * v1 * v2 + inv * (alpha * t1
                                      + (alpha * beta / D) * v2 / s
                                      - (alpha * alpha / D) * v1)
    ov2[...] = -E * v1 * v1 + inv * (alpha * t2
                                     - (alpha * beta / D) * v1 * s
                                     - (alpha * alpha / D) * v2)
    for a in (ou1, ou2, ov1, ov2):
        a[0, :] = a[-1, :] = 0.0
        a[:, 0] = a[:, -1] = 0.0


def scalar_rhs(f, ex2, h1, h2, out):
    """Laplace-Beltrami of a scalar, zero on the ring."""
    q1 = 1.0 / (h1 * h1)
    q2 = 1.0 / (h2 * h2)
    c2 = 1.0 / (2.0 * h2)
    a = f[1:-1, 1:-1]
    out.fill(0.0)
    out[1:-1, 1:-1] = (ex2[None, 1:-1] * (f[2:, 1:-1] - 2.0 * a + f[:-2, 1:-1]) * q1
                       + (f[1:-1, 2:] - 2.0 * a + f[1:-1, :-2]) * q2
                       - (f[1:-1, 2:] - f[1:-1, :-2]) * c2)


def rk4_map_steps(u1, u2, ex2, h1, h2, alpha, beta, dt, nsteps):
    """Advance the map flow nsteps RK4 steps in place."""
    k1a, k1b = np.empty_like(u1), np.empty_like(u1)
    k2a, k2b = np.empty_like(u1), np.empty_like(u1)
    k3a, k3b = np.empty_like(u1), np.empty_like(u1)
    k4a, k4b = np.empty_like(u1), np.empty_like(u1)
    ya, yb = np.empty_like(u1), np.empty_like(u1)
    for n in range(nsteps):
        ll_rhs(u1, u2, ex2, h1, h2, alpha, beta, k1a, k1b)
        np.multiply(k1a, 0.5 * dt, out=ya); ya += u1
        np.multiply(k1b, 0.5 * dt, out=yb); yb += u2
        ll_rhs(ya, yb, ex2, h1, h2, alpha, beta, k2a, k2b)
        np.multiply(k2a, 0.5 * dt, out=ya); ya += u1
        np.multiply(k2b, 0.5 * dt, out=yb); yb += u2
        ll_rhs(ya, yb, ex2, h1, h2, alpha, beta, k3a, k3b)
        np.multiply(k3a, dt, out=ya); ya += u1
        np.multiply(k3b, dt, out=yb); yb += u2
        ll_rhs(ya, yb, ex2, h1, h2, alpha, beta, k4a, k4b)
        u1 += (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        u2 += (dt / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        if not (np.isfinite(u1.sum()) and np.isfinite(u2.sum())):
            return n + 1
    return nsteps


def rk4_wave_steps(u1, u2, v1, v2, ex2, h1, h2, alpha, beta, delta,
                   dt, nsteps):
    """Advance the wave scheme nsteps RK4 steps in place."""
    shape = u1.shape
    k = [np.empty(shape) for _ in range(16)]
    y = [np.empty(shape) for _ in range(4)]
    state = [u1, u2, v1, v2]
    for n in range(nsteps):
        wave_rhs(u1, u2, v1, v2, ex2, h1, h2, alpha, beta, delta, *k[0:4])
        for m in range(4):
            np.multiply(k[m], 0.5 * dt, out=y[m]); y[m] += state[m]
        wave_rhs(*y, ex2, h1, h2, alpha, beta, delta, *k[4:8])
        for m in range(4):
            np.multiply(k[4 + m], 0.5 * dt, out=y[m]); y[m] += state[m]
        wave_rhs(*y, ex2, h1, h2, alpha, beta, delta, *k[8:12])
        for m in range(4):
            np.multiply(k[8 + m], dt, out=y[m]); y[m] += state[m]
        wave_rhs(*y, ex2, h1, h2, alpha, beta, delta, *k[12:16])
        for m in range(4):
            state[m] += (dt / 6.0) * (k[m] + 2.0 * k[4 + m]
                                      + 2.0 * k[8 + m] + k[12 + m])
        if not all(np.isfinite(a.sum()) for a in state):
            return n + 1
    return nsteps


def rkc2_map_step(u1, u2, ex2, h1, h2, alpha, dt, mu1t, mu, nu, mut, gt):
    """One Runge-Kutta-Chebyshev step of the heat flow (beta = 0).

    Coefficient arrays are indexed by stage j = 2..s; mu1t seeds the
    first internal stage.  Returns 1 on success, 0 on non-finite values.
    """
    s = mu.shape[0] - 2 + 2  # arrays sized s+1, stages 2..s used
    f0a, f0b = np.empty_like(u1), np.empty_like(u1)
    fja, fjb = np.empty_like(u1), np.empty_like(u1)
    ll_rhs(u1, u2, ex2, h1, h2, alpha, 0.0, f0a, f0b)
    yjm2a, yjm2b = u1.copy(), u2.copy()
    yjm1a = u1 + mu1t * dt * f0a
    yjm1b = u2 + mu1t * dt * f0b
    for j in range(2, mu.shape[0]):
        ll_rhs(yjm1a, yjm1b, ex2, h1, h2, alpha, 0.0, fja, fjb)
        c0 = 1.0 - mu[j] - nu[j]
        ya = (c0 * u1 + mu[j] * yjm1a + nu[j] * yjm2a
              + mut[j] * dt * fja + gt[j] * dt * f0a)
        yb = (c0 * u2 + mu[j] * yjm1b + nu[j] * yjm2b
              + mut[j] * dt * fjb + gt[j] * dt * f0b)
        yjm2a, yjm2b = yjm1a, yjm1b
        yjm1a, yjm1b = ya, yb
    u1[...] = yjm1a
    u2[...] = yjm1b
    if not (np.isfinite(u1.sum()) and np.isfinite(u2.sum())):
        return 0
    return 1


def rkc2_scalar_step(f, ex2, h1, h2, dt, mu1t, mu, nu, mut, gt):
    """One Runge-Kutta-Chebyshev step of the scalar heat equation."""
    f0 = np.empty_like(f)
    fj = np.empty_like(f)
    scalar_rhs(f, ex2, h1, h2, f0)
    yjm2 = f.copy()
    yjm1 = f + mu1t * dt * f0
    for j in range(2, mu.shape[0]):
        scalar_rhs(yjm1, ex2, h1, h2, fj)
        y = ((1.0 - mu[j] - nu[j]) * f + mu[j] * yjm1 + nu[j] * yjm2
             + mut[j] * dt * fj + gt[j] * dt * f0)
        yjm2 = yjm1
        yjm1 = y
    f[...] = yjm1
    return 1 if np.isfinite(f.sum()) else 0


def euler_scalar_steps(f, ex2, h1, h2, dt, nsteps):
    """Forward-Euler steps of the scalar heat equation (monotone at CFL)."""
    rhs = np.empty_like(f)
    for n in range(nsteps):
        scalar_rhs(f, ex2, h1, h2, rhs)
        f += dt * rhs
        if not np.isfinite(f.sum()):
            return n + 1
    return nsteps
