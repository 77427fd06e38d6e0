"""Time integration of the map flows and their energy monitors.

Three evolutions share one stencil core: the damped/precessional flow
u_t = alpha*tau(u) - beta*J(u)tau(u), its heat-flow reduction beta = 0,
and the delta-family of damped wave equations approximating the first.

The t-integrator is classical RK4 at a CFL-bounded step.  For purely
dissipative runs (beta = 0) a stabilized Chebyshev integrator is also
available and is the default in ``evolve``; it takes far fewer right-hand
sides per unit time at second-order accuracy, which is what makes
auxiliary-time relaxations affordable on fine grids.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend, fields
from .backend import kernels
from .fields import MapField, TangentField

__all__ = [
    "FlowParams",
    "FlowState",
    "EnergyReport",
    "FlowDivergedError",
    "ll_rhs",
    "heat_rhs",
    "wave_rhs",
    "cfl_dt",
    "step",
    "evolve",
    "Trajectory",
    "energy_report",
    "bochner_monitor",
]


class FlowDivergedError(RuntimeError):
    """A non-finite value appeared during time stepping."""


@dataclass
class FlowParams:
    alpha: float = 1.0
    beta: float = 0.0
    delta: float = 0.0
    cfl: float = 0.85
    dt_rule: str = "sharp"  # or "quadratic"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl factor must lie in (0, 1]")
        if self.dt_rule not in ("sharp", "quadratic"):
            raise ValueError("dt_rule must be 'sharp' or 'quadratic'")

    @property
    def speed(self):
        """|alpha - i beta|, the modulus of the complex flow constant."""
        return math.hypot(self.alpha, self.beta)


@dataclass
class FlowState:
    u: MapField
    v: TangentField = None  # time derivative, wave scheme only
    t: float = 0.0

    def copy(self):
        return FlowState(self.u.copy(),
                         None if self.v is None else self.v.copy(), self.t)


@dataclass
class EnergyReport:
    t: float
    E1: float
    E2: float
    E3: float
    tau_l2: float
    dissipation_residual: float


def ll_rhs(u, params):
    """alpha*tau(u) - beta*J(tau(u)), zero on the boundary ring."""
    g = u.grid
    o1 = np.zeros_like(u.u1)
    o2 = np.zeros_like(u.u2)
    kernels.ll_rhs(u.u1, u.u2, g.ex2, g.h1, g.h2,
                   params.alpha, params.beta, o1, o2)
    return TangentField(g, o1, o2)


def heat_rhs(u):
    """Tension field as a flow right-hand side (alpha=1, beta=0)."""
    return ll_rhs(u, FlowParams(alpha=1.0, beta=0.0))


def wave_rhs(state, params):
    """First-order form (du/dt, dv/dt) of the damped wave scheme."""
    if params.delta <= 0:
        raise ValueError("wave scheme needs delta > 0")
    u, v = state.u, state.v
    g = u.grid
    outs = [np.zeros_like(u.u1) for _ in range(4)]
    kernels.wave_rhs(u.u1, u.u2, v.X1, v.X2, g.ex2, g.h1, g.h2,
                     params.alpha, params.beta, params.delta, *outs)
    return (TangentField(g, outs[0], outs[1]),
            TangentField(g, outs[2], outs[3]))


def cfl_dt(grid, params, scheme="map"):
    """Admissible time step for the requested scheme.

    'map' uses either the sharp RK4 stability bound 2.5/rho (default) or
    the quadratic rule min(h)^2 / (2 |z| max e^{2 x2}).  'wave' bounds
    both the fastest characteristic and the damping rate.
    """
    c = params.cfl
    if scheme == "map":
        speed = params.speed
        if speed == 0.0:
            raise ValueError("alpha = beta = 0 does not evolve")
        if params.dt_rule == "quadratic":
            return c * min(grid.h1, grid.h2) ** 2 / (2.0 * speed
                                                     * grid.ex2.max())
        return c * 2.5 / backend.spectral_radius(grid, speed)
    if scheme == "wave":
        a, d = params.alpha, params.delta
        D = a * a + params.beta ** 2
        lam0 = 4.0 * (grid.ex2.max() / grid.h1 ** 2 + 1.0 / grid.h2 ** 2)
        dt_osc = 2.0 / math.sqrt(a * lam0 / d)
        dt_damp = 2.0 * d * D / (a * a) if a > 0 else math.inf
        return c * min(dt_osc, dt_damp)
    raise ValueError(f"unknown scheme {scheme!r}")


def _check_finite(state, t0, t1):
    if not state.u.is_finite():
        raise FlowDivergedError(
            f"non-finite map values in t-window [{t0:.6g}, {t1:.6g}]; "
            "the step likely violated the CFL bound")
    if state.v is not None and not (np.isfinite(state.v.X1).all()
                                    and np.isfinite(state.v.X2).all()):
        raise FlowDivergedError(
            f"non-finite velocity values in t-window [{t0:.6g}, {t1:.6g}]")


def step(state, params, dt):
    """One RK4 step; returns a new state (boundary ring untouched)."""
    g = state.u.grid
    new = state.copy()
    if state.v is None:
        kernels.rk4_map_steps(new.u.u1, new.u.u2, g.ex2, g.h1, g.h2,
                              params.alpha, params.beta, dt, 1)
    else:
        kernels.rk4_wave_steps(new.u.u1, new.u.u2, new.v.X1,
                               new.v.X2, g.ex2, g.h1, g.h2,
                               params.alpha, params.beta,
                               params.delta, dt, 1)
    new.t = state.t + dt
    _check_finite(new, state.t, new.t)
    return new


@dataclass
class Trajectory:
    params: FlowParams
    times: list = field(default_factory=list)
    maps: list = field(default_factory=list)
    velocities: list = field(default_factory=list)

    def append(self, state):
        self.times.append(state.t)
        self.maps.append(state.u.copy())
        if state.v is not None:
            self.velocities.append(state.v.copy())

    def state(self, k):
        v = self.velocities[k] if self.velocities else None
        return FlowState(self.maps[k], v, self.times[k])


def evolve(state, params, T, n_checkpoints=20, method="auto",
           on_checkpoint=None):
    """Integrate to time state.t + T, recording evenly spaced checkpoints.

    method 'rk4' forces RK4 everywhere; 'rkc' is the Chebyshev
    integrator (dissipative runs only, beta = 0, map states); 'auto'
    picks 'rkc' when admissible and 'rk4' otherwise.  Checkpoints land
    exactly on multiples of T / n_checkpoints; within a checkpoint
    interval the step is the CFL bound rounded down to divide evenly.
    Raises FlowDivergedError on non-finite values.
    """
    if method == "auto":
        method = ("rkc" if state.v is None and params.beta == 0.0
                  and params.alpha > 0.0 else "rk4")
    g = state.u.grid
    cur = state.copy()
    traj = Trajectory(params=params)
    traj.append(cur)
    if on_checkpoint is not None:
        on_checkpoint(cur, traj)
    interval = T / n_checkpoints
    lam = backend.spectral_radius(g, params.alpha) if method == "rkc" else 0.0
    for k in range(n_checkpoints):
        t0 = cur.t
        if method == "rkc":
            ok = backend.rkc_heat_interval(cur.u.u1, cur.u.u2, g.ex2,
                                           g.h1, g.h2, params.alpha,
                                           interval, lam)
            if not ok:
                cur.t = t0 + interval
                _check_finite(cur, t0, cur.t)
        elif state.v is None:
            dt0 = cfl_dt(g, params, "map")
            nsteps = max(1, math.ceil(interval / dt0))
            done = kernels.rk4_map_steps(cur.u.u1, cur.u.u2, g.ex2, g.h1,
                                         g.h2, params.alpha, params.beta,
                                         interval / nsteps, nsteps)
            if done != nsteps:
                cur.t = t0 + done * interval / nsteps
                _check_finite(cur, t0, cur.t)
        else:
            dt0 = cfl_dt(g, params, "wave")
            nsteps = max(1, math.ceil(interval / dt0))
            done = kernels.rk4_wave_steps(cur.u.u1, cur.u.u2, cur.v.X1,
                                          cur.v.X2, g.ex2, g.h1, g.h2,
                                          params.alpha, params.beta,
                                          params.delta,
                                          interval / nsteps, nsteps)
            if done != nsteps:
                cur.t = t0 + done * interval / nsteps
                _check_finite(cur, t0, cur.t)
        cur.t = state.t + (k + 1) * interval
        _check_finite(cur, t0, cur.t)
        traj.append(cur)
        if on_checkpoint is not None:
            on_checkpoint(cur, traj)
    return traj


def time_derivative(state, params):
    """The flow's time derivative at a state.

    For map states this is the analytic right-hand side, which avoids
    checkpoint-stride artifacts; for wave states it is the stored
    velocity.
    """
    if state.v is not None:
        return state.v
    return ll_rhs(state.u, params)


def energy_report(state, prev=None, params=None):
    """Energies, tension norm and the dissipation-identity residual.

    E1 is the Dirichlet energy, E2 and E3 the squared L2 norms (halved)
    of the time derivative and its covariant gradient.  The residual
    |dE1/dt + alpha ||tau||^2| is formed against the previous report
    with the trapezoid average of ||tau||^2 over the two checkpoints;
    it is 0.0 when prev is None.
    """
    params = params or FlowParams()
    u = state.u
    g = u.grid
    E1 = fields.lp_norm(g, fields.energy_density(u), 1)
    tau = fields.tension_field(u)
    tau_l2 = fields.tangent_lp_norm(u, tau, 2)
    ut = time_derivative(state, params)
    E2 = 0.5 * fields.tangent_lp_norm(u, ut, 2) ** 2
    E3 = 0.5 * fields.lp_norm(g, fields.gradient_sq_density(u, ut), 1)
    resid = 0.0
    if prev is not None:
        dt = state.t - prev.t
        mean_tau_sq = 0.5 * (tau_l2 ** 2 + prev.tau_l2 ** 2)
        resid = abs((E1 - prev.E1) / dt + params.alpha * mean_tau_sq)
    return EnergyReport(t=state.t, E1=E1, E2=E2, E3=E3, tau_l2=tau_l2,
                        dissipation_residual=resid)


def dissipation_step_residual(state, params, dt=None):
    """Relative defect of dE1/dt = -alpha ||tau||^2 across one RK4 step.

    Differencing E1 over a single integrator step keeps the trapezoid
    average of ||tau||^2 accurate even inside fast transients, which a
    checkpoint-stride difference cannot resolve.  Returns
    |dE1/dt + alpha mean||tau||^2| / (alpha mean||tau||^2).
    """
    dt = dt or 0.5 * cfl_dt(state.u.grid, params, "map")
    r0 = energy_report(state, None, params)
    nxt = step(state, params, dt)
    r1 = energy_report(nxt, r0, params)
    mean_sq = 0.5 * (r0.tau_l2 ** 2 + r1.tau_l2 ** 2)
    if params.alpha * mean_sq <= 1e-300:
        return 0.0
    return r1.dissipation_residual / (params.alpha * mean_sq)


@dataclass
class BochnerReport:
    s_values: np.ndarray
    sup_history: np.ndarray          # sup_x |d_s u| per checkpoint
    max_sup_increase: float          # worst consecutive increase
    sq_excess: float                 # max positive LHS for |d_s u|^2
    abs_excess: float                # max positive LHS for |d_s u|
    empirical_K: float               # smallest K making the |du|^2 bound hold
    decay_rate: float                # log-linear slope over the last decade


def _fd_time(vals, times, k):
    return (vals[k + 1] - vals[k - 1]) / (times[k + 1] - times[k - 1])


def bochner_monitor(times, maps, mask_rel=1e-6, trim=2, burn_in=0.3):
    """Parabolic-inequality monitors along a heat-flow trajectory.

    Checks, at interior checkpoints and nodes, the discretized forms of

        (d_s - Lap)|d_s u|^2 + 2|grad d_s u|^2 <= 0
        (d_s - Lap)|d_s u|                     <= 0
        (d_s - Lap)|du|^2    + 2|nabla du|^2   <= K e(u)

    reporting the maximal positive excess of the first two and the
    smallest empirical K for the third.  Nodes where |d_s u| is below
    mask_rel times its global max are skipped in the |d_s u| check
    (the absolute value has kinks on its zero set).  The pointwise
    checks start at time burn_in: across the initial fast transient a
    checkpoint-stride time difference cannot resolve d_s, so the first
    slices would only report their own stride error.  The sup-norm
    history always covers the whole trajectory.
    """
    g = maps[0].grid
    times = np.asarray(times, dtype=float)
    K = len(maps)
    rhs = [heat_rhs(u) for u in maps]
    speed = [fields.tangent_norm_field(maps[k], rhs[k]) for k in range(K)]
    sup = np.array([s.max() for s in speed])
    inc = np.diff(sup)
    interior = g.interior_mask(trim)
    sq_excess = -np.inf
    abs_excess = -np.inf
    emp_K = 0.0
    for k in range(1, K - 1):
        if times[k] < burn_in:
            continue
        u = maps[k]
        f2 = speed[k] ** 2
        lhs2 = (_fd_time([speed[j] ** 2 for j in (k - 1, k, k + 1)],
                         times[[k - 1, k, k + 1]], 1)
                - fields.laplace_beltrami(g, f2)
                + 2.0 * fields.gradient_sq_density(u, rhs[k]))
        sq_excess = max(sq_excess, float(lhs2[interior].max()))
        f1 = speed[k]
        lhs1 = (_fd_time([speed[j] for j in (k - 1, k, k + 1)],
                         times[[k - 1, k, k + 1]], 1)
                - fields.laplace_beltrami(g, f1))
        keep = interior & (f1 > mask_rel * max(sup.max(), 1e-300))
        if keep.any():
            abs_excess = max(abs_excess, float(lhs1[keep].max()))
        e = [fields.energy_density(m) for m in (maps[k - 1], u, maps[k + 1])]
        sff = fields.second_fundamental_form(u)
        hii = (g.ex2[None, :], np.ones((1, g.n2)))
        nd2 = np.zeros((g.n1, g.n2))
        E = np.exp(-2.0 * u.u2)
        for i in (1, 2):
            for j in (1, 2):
                N = sff[(i, j)]
                nd2 += hii[i - 1] * hii[j - 1] * (E * N.X1 ** 2 + N.X2 ** 2)
        lhsK = (_fd_time([2.0 * ek for ek in e], times[[k - 1, k, k + 1]], 1)
                - fields.laplace_beltrami(g, 2.0 * e[1]) + 2.0 * nd2)
        dens = e[1]
        keepK = interior & (dens > mask_rel * max(dens.max(), 1e-300))
        if keepK.any():
            emp_K = max(emp_K, float((lhsK[keepK] / dens[keepK]).max()))
    # decay rate over the trailing decade of the sup history
    tail = sup <= 10.0 * max(sup[-1], 1e-300)
    rate = 0.0
    if tail.sum() >= 3 and sup[-1] > 0:
        sel = np.where(tail)[0]
        coef = np.polyfit(times[sel], np.log(sup[sel]), 1)
        rate = float(coef[0])
    return BochnerReport(s_values=times, sup_history=sup,
                         max_sup_increase=float(inc.max()) if len(inc) else 0.0,
                         sq_excess=sq_excess, abs_excess=abs_excess,
                         empirical_K=emp_K, decay_rate=rate)
