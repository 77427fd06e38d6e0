"""Kernel backend selection and stabilized-stepping coefficients.

The compiled extension is used when importable; setting the environment
variable ``LLFLOW_PURE_PYTHON=1`` forces the numpy fallback.  Both
backends expose identical functions and bit-identical stencils, so
results differ only by floating-point summation order inside numpy
reductions (the kernels themselves use fixed evaluation order).
"""

import os

import numpy as np

if os.environ.get("LLFLOW_PURE_PYTHON", "") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        from . import _kernels_py as kernels

COMPILED = bool(getattr(kernels, "COMPILED", False))


def backend_name():
    return "compiled" if COMPILED else "python"


def spectral_radius(grid, speed=1.0):
    """Upper bound on the spectral radius of the linearized stencil.

    Centered second differences give at most 4*coef/h^2 per direction;
    the first-derivative term adds 1/h2.  ``speed`` multiplies the whole
    bound (|alpha - i*beta| for the map flows).
    """
    return speed * (4.0 * (grid.ex2.max() / grid.h1 ** 2 + 1.0 / grid.h2 ** 2)
                    + 1.0 / grid.h2)


# Damping parameter for the Chebyshev stages.  Heavy damping costs a
# factor ~1.9 in stability interval but pushes the amplification factor
# of marginal (grid-scale) modes from ~0.95 down to ~0.25 per step, so
# rough components of the initial data cannot linger; without it the
# relaxed maps carry node-scale residue that pollutes every second
# difference taken on them.
RKC_DAMPING = 10.0


def rkc2_coefficients(s, eps=RKC_DAMPING):
    """Damped second-order Chebyshev stage coefficients for s stages.

    Returns (mu1_tilde, mu, nu, mu_tilde, gamma_tilde) with the per-stage
    arrays indexed 0..s (entries below 2 unused).
    """
    if s < 2:
        raise ValueError("need at least two stages")
    w0 = 1.0 + eps / s ** 2
    # Chebyshev values and first/second derivatives at w0 by recurrence.
    T = np.empty(s + 1)
    dT = np.empty(s + 1)
    d2T = np.empty(s + 1)
    T[0], dT[0], d2T[0] = 1.0, 0.0, 0.0
    T[1], dT[1], d2T[1] = w0, 1.0, 0.0
    for j in range(2, s + 1):
        T[j] = 2.0 * w0 * T[j - 1] - T[j - 2]
        dT[j] = 2.0 * T[j - 1] + 2.0 * w0 * dT[j - 1] - dT[j - 2]
        d2T[j] = 4.0 * dT[j - 1] + 2.0 * w0 * d2T[j - 1] - d2T[j - 2]
    w1 = dT[s] / d2T[s]
    b = np.empty(s + 1)
    b[2:] = d2T[2:] / dT[2:] ** 2
    b[0] = b[1] = b[2]
    a = 1.0 - b * T
    mu1t = b[1] * w1
    mu = np.zeros(s + 1)
    nu = np.zeros(s + 1)
    mut = np.zeros(s + 1)
    gt = np.zeros(s + 1)
    for j in range(2, s + 1):
        mu[j] = 2.0 * b[j] * w0 / b[j - 1]
        nu[j] = -b[j] / b[j - 2]
        mut[j] = 2.0 * b[j] * w1 / b[j - 1]
        gt[j] = -a[j - 1] * mut[j]
    return mu1t, mu, nu, mut, gt


def rkc_beta(s, eps=RKC_DAMPING):
    """Exact real-axis stability interval length of the damped scheme.

    The stability polynomial is a_s + b_s T_s(w0 - w1 x); it leaves
    [-1, 1] at x = (1 + w0) / w1.
    """
    w0 = 1.0 + eps / s ** 2
    T = np.empty(s + 1)
    dT = np.empty(s + 1)
    d2T = np.empty(s + 1)
    T[0], dT[0], d2T[0] = 1.0, 0.0, 0.0
    T[1], dT[1], d2T[1] = w0, 1.0, 0.0
    for j in range(2, s + 1):
        T[j] = 2.0 * w0 * T[j - 1] - T[j - 2]
        dT[j] = 2.0 * T[j - 1] + 2.0 * w0 * dT[j - 1] - dT[j - 2]
        d2T[j] = 4.0 * dT[j - 1] + 2.0 * w0 * d2T[j - 1] - d2T[j - 2]
    return (1.0 + w0) * d2T[s] / dT[s]


# safety margin against the exact stability bound
RKC_SAFETY = 0.9
# beta(s) / s^2 approaches this constant for the default damping
_BETA_PER_SQ = rkc_beta(50) / 50 ** 2


def rkc_stage_count(dt, lam):
    """Smallest stage count whose stability interval covers dt * lam."""
    s = max(2, int(np.ceil(np.sqrt(dt * lam / (RKC_SAFETY * _BETA_PER_SQ)))))
    while dt * lam > RKC_SAFETY * rkc_beta(s):
        s += 1
    return s


def rkc_heat_interval(u1, u2, ex2, h1, h2, alpha, interval, lam,
                      max_stages=150):
    """Advance the heat flow over an s-interval with Chebyshev steps.

    The interval is split so no step needs more than max_stages stages.
    Returns True on success, False when a non-finite value appeared.
    """
    dt_cap = RKC_SAFETY * rkc_beta(max_stages) / lam
    nsub = max(1, int(np.ceil(interval / dt_cap)))
    dt = interval / nsub
    s = rkc_stage_count(dt, lam)
    mu1t, mu, nu, mut, gt = rkc2_coefficients(s)
    for _ in range(nsub):
        if not kernels.rkc2_map_step(u1, u2, ex2, h1, h2, alpha, dt,
                                     mu1t, mu, nu, mut, gt):
            return False
    return True


def rkc_scalar_interval(f, ex2, h1, h2, interval, lam, max_stages=150):
    """Advance the scalar heat equation over an interval (see above)."""
    dt_cap = RKC_SAFETY * rkc_beta(max_stages) / lam
    nsub = max(1, int(np.ceil(interval / dt_cap)))
    dt = interval / nsub
    s = rkc_stage_count(dt, lam)
    mu1t, mu, nu, mut, gt = rkc2_coefficients(s)
    for _ in range(nsub):
        if not kernels.rkc2_scalar_step(f, ex2, h1, h2, dt,
                                        mu1t, mu, nu, mut, gt):
            return False
    return True
