"""Heat-kernel envelope on the hyperbolic plane and semigroup diagnostics.

The envelope is the classical pointwise bound shape for the hyperbolic
heat kernel; it is known only up to absolute constants, so every check
built on it is a one-sided boundedness check.  The semigroup itself is
computed by evolving the discrete heat equation on the truncated
rectangle.  Dirichlet truncation can only speed up decay relative to the
full plane, so upper-bound diagnostics stay valid.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend, fields
from .backend import kernels as _k
from .flows import FlowDivergedError

__all__ = [
    "kernel_envelope",
    "apply_heat_semigroup",
    "smoothing_diagnostics",
    "SmoothingTable",
]


def kernel_envelope(t, rho):
    """Envelope t^-1 e^{-t/4} e^{-rho^2/4t} e^{-rho/2} (1+rho+t)^{-1/2} (1+rho).

    Valid for t > 0, rho >= 0; raises ValueError outside that domain.
    Not monotone near rho = 0 (the algebraic factor initially wins); it
    is strictly decreasing in rho for rho >= 1 at every t.
    """
    t = np.asarray(t, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(t <= 0):
        raise ValueError("heat time t must be positive")
    if np.any(rho < 0):
        raise ValueError("distance rho must be nonnegative")
    return (np.exp(-0.25 * t - rho * rho / (4.0 * t) - 0.5 * rho) / t
            / np.sqrt(1.0 + rho + t) * (1.0 + rho))


def envelope_log_drho(t, rho):
    """d/drho of log kernel_envelope; the monotonicity oracle."""
    t = np.asarray(t, dtype=float)
    rho = np.asarray(rho, dtype=float)
    return (-rho / (2.0 * t) - 0.5 - 0.5 / (1.0 + rho + t)
            + 1.0 / (1.0 + rho))


def euler_dt(grid):
    """Largest provably monotone forward-Euler step for the scalar flow."""
    return 1.0 / (2.0 * (grid.ex2.max() / grid.h1 ** 2 + 1.0 / grid.h2 ** 2)
                  + 1.0 / (2.0 * grid.h2))


def apply_heat_semigroup(grid, f, s, method="auto"):
    """Evolve the scalar heat equation for time s > 0.

    The ring is held at its initial values (homogeneous data for the
    compactly supported fields the diagnostics use), so the operator is
    linear in f.  method 'euler' is the monotone scheme: it preserves
    positivity and contracts the weighted L1 norm step by step.  'rkc'
    is the stabilized Chebyshev integrator, second order and far cheaper
    on fine grids.  'auto' uses 'euler' when it needs at most 20000
    steps and 'rkc' otherwise.
    """
    if s <= 0:
        raise ValueError("semigroup time must be positive")
    f = np.array(f, dtype=float)
    if not np.isfinite(f).all():
        raise ValueError("field must be finite")
    if method == "auto":
        method = "euler" if s / euler_dt(grid) <= 20000 else "rkc"
    if method == "euler":
        dt0 = euler_dt(grid)
        nsteps = max(1, math.ceil(s / dt0))
        done = _k.euler_scalar_steps(f, grid.ex2, grid.h1, grid.h2,
                                     s / nsteps, nsteps)
        if done != nsteps:
            raise _diverged()
    elif method == "rkc":
        # steps grow with the elapsed time: the solution smooths like
        # the heat kernel, so a fixed fraction of the elapsed time keeps
        # the second-order error uniformly small
        lam = backend.spectral_radius(grid, 1.0)
        done = 0.0
        first = min(s, max(s / 400.0, 4.0 * euler_dt(grid)))
        interval = first
        while done < s:
            interval = min(interval, s - done)
            if not backend.rkc_scalar_interval(f, grid.ex2, grid.h1,
                                               grid.h2, interval, lam):
                raise _diverged()
            done += interval
            interval = max(interval, 0.1 * done)
    else:
        raise ValueError(f"unknown method {method!r}")
    return f


def _diverged():
    return FlowDivergedError("scalar heat evolution produced non-finite "
                             "values (CFL violation)")


@dataclass
class SmoothingTable:
    """Decay-ratio table plus the squared-sup time integral."""

    s: np.ndarray
    sup_norm: np.ndarray
    l1_norm: np.ndarray
    envelope: np.ndarray      # e^{-s/4} / s * ||f||_1
    ratio: np.ndarray         # sup_norm / envelope
    sup0: float               # sup of the initial field (s -> 0 sanity row)
    integral_grid: np.ndarray  # times of the partial-integral quadrature
    integral_values: np.ndarray  # cumulative int_0^s ||e^{tL}f||_inf^2 dt

    def rows(self):
        for k in range(len(self.s)):
            yield (self.s[k], self.sup_norm[k], self.l1_norm[k],
                   self.envelope[k], self.ratio[k])


def smoothing_diagnostics(grid, f, s_samples, method="auto", n_dense=80):
    """Sup/L1 decay ratios at the given times and the partial integral.

    The field should be compactly supported inside the rectangle.  The
    cumulative integral of the squared sup norm is computed on a dense
    geometric time grid reaching max(s_samples) (trapezoid rule, the
    integrand at 0 taken as sup(f)^2).
    """
    f0 = np.array(f, dtype=float)
    l1_0 = fields.lp_norm(grid, f0, 1)
    sup0 = float(np.abs(f0).max())
    s_samples = np.sort(np.asarray(s_samples, dtype=float))
    s_max = s_samples[-1]
    dense = np.geomspace(s_max / 400.0, s_max, n_dense)
    sample_at = np.unique(np.concatenate([dense, s_samples]))

    sup = np.empty(len(sample_at))
    l1 = np.empty(len(sample_at))
    cur = f0.copy()
    prev_s = 0.0
    for k, sk in enumerate(sample_at):
        cur = apply_heat_semigroup(grid, cur, sk - prev_s, method=method) \
            if sk > prev_s else cur
        prev_s = sk
        sup[k] = np.abs(cur).max()
        l1[k] = fields.lp_norm(grid, np.abs(cur), 1)

    idx = np.searchsorted(sample_at, s_samples)
    env = np.exp(-0.25 * s_samples) / s_samples * l1_0
    t_int = np.concatenate([[0.0], sample_at])
    y_int = np.concatenate([[sup0 ** 2], sup ** 2])
    cum = np.concatenate([[0.0], np.cumsum(np.diff(t_int)
                                           * 0.5 * (y_int[1:] + y_int[:-1]))])
    return SmoothingTable(s=s_samples, sup_norm=sup[idx], l1_norm=l1[idx],
                          envelope=env, ratio=sup[idx] / env, sup0=sup0,
                          integral_grid=t_int, integral_values=cum)
