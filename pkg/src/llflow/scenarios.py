"""Scenario runners: reproducible experiments with CSV/JSON artifacts.

Each runner writes into the configured output directory:

  energy.csv     t, E1, E2, E3, tau_l2, dissipation_residual
  gauge.csv      s_or_t, torsion, commutator, w_norm, heat_tension, At_limit
  summary.json   metrics plus named pass/fail properties
  *.grid         field snapshots in the textual grid-dump format

Runs are deterministic for a fixed config and seed: no timestamps, fixed
summation orders, 17-significant-digit text output.
"""

import json
import math
import os

import numpy as np

from . import fields as F
from . import flows, gauge, geometry, gridio, harmonic
from . import kernels as heatkernels

ENERGY_COLUMNS = ("t", "E1", "E2", "E3", "tau_l2", "dissipation_residual")
GAUGE_COLUMNS = ("s_or_t", "torsion", "commutator", "w_norm",
                 "heat_tension", "At_limit")
KERNEL_COLUMNS = ("s", "sup_norm", "l1_norm", "envelope", "ratio")


def _prop(value, passed, threshold=None):
    out = {"value": value, "pass": bool(passed)}
    if threshold is not None:
        out["threshold"] = threshold
    return out


def _initial_data(cfg):
    grid = cfg.grid()
    Q = harmonic.to_chart(cfg.map_spec(), grid)
    pert = cfg.perturbation()
    if pert:
        u0 = harmonic.perturb(Q, tuple(pert["center"]), pert["radius"],
                              pert["amplitude"])
    else:
        u0 = Q.copy()
    return grid, Q, u0


def _energy_csv(path, traj, params):
    reports = []
    prev = None
    with gridio.CsvWriter(path, ENERGY_COLUMNS) as w:
        for k in range(len(traj.times)):
            rep = flows.energy_report(traj.state(k), prev, params)
            w.write_row((rep.t, rep.E1, rep.E2, rep.E3, rep.tau_l2,
                         rep.dissipation_residual))
            reports.append(rep)
            prev = rep
    return reports


def _snapshots(cfg, outdir, traj, prefix="u"):
    stride = cfg.snapshot_stride
    idx = {0, len(traj.maps) - 1}
    if stride > 0:
        idx.update(range(0, len(traj.maps), stride))
    for k in sorted(idx):
        gridio.save_map(os.path.join(outdir, f"{prefix}_{k:04d}.grid"),
                        traj.maps[k])


def _write_summary(outdir, scenario, cfg, metrics, properties):
    summary = {
        "scenario": scenario,
        "seed": cfg.seed,
        "config": cfg.raw,
        "metrics": metrics,
        "properties": properties,
        "all_pass": all(p["pass"] for p in properties.values()),
    }
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _heat_drift(grid, Q, T=1.0):
    """Discretization floor: how far the heat flow moves a harmonic map."""
    traj = flows.evolve(flows.FlowState(Q.copy(), None, 0.0),
                        flows.FlowParams(alpha=1.0, beta=0.0), T,
                        n_checkpoints=4)
    return F.sup_distance(traj.maps[-1], Q)


def run_stationary(cfg, outdir):
    grid, Q, u0 = _initial_data(cfg)
    params = flows.FlowParams(alpha=1.0, beta=0.0)
    tm = cfg.time()
    traj = flows.evolve(flows.FlowState(u0, None, 0.0), params, tm["T"],
                        n_checkpoints=tm["checkpoints"])
    reports = _energy_csv(os.path.join(outdir, "energy.csv"), traj, params)
    _snapshots(cfg, outdir, traj)
    drift = F.sup_distance(traj.maps[-1], Q)
    tau0 = F.tangent_lp_norm(Q, F.tension_field(Q), 2)

    # seeded spot check that the two hyperbolic models agree metrically
    rng = np.random.default_rng(cfg.seed)
    pts = rng.uniform(-0.8, 0.8, size=(8, 2))
    worst = 0.0
    for (a, b), (c, d) in zip(pts[::2], pts[1::2]):
        dd = geometry.disk_distance((a, b), (c, d))
        ch = geometry.geodesic_distance(geometry.disk_to_chart(a, b),
                                        geometry.disk_to_chart(c, d))
        worst = max(worst, abs(dd - ch))

    thr = cfg.threshold("drift", 1e-2)
    properties = {
        "harmonic_drift_small": _prop(drift, drift <= thr, thr),
        "energy_nonincreasing": _prop(
            max(reports[k + 1].E1 - reports[k].E1
                for k in range(len(reports) - 1)),
            all(reports[k + 1].E1 <= reports[k].E1 + 1e-12 * reports[0].E1
                for k in range(len(reports) - 1))),
        "model_isometry": _prop(worst, worst <= 1e-10, 1e-10),
    }
    metrics = {"drift": drift, "tension_l2_initial": tau0,
               "E1_initial": reports[0].E1, "E1_final": reports[-1].E1}
    return _write_summary(outdir, "stationary", cfg, metrics, properties)


def run_heat_relax(cfg, outdir):
    grid, Q, u0 = _initial_data(cfg)
    params = flows.FlowParams(alpha=1.0, beta=0.0)
    tm = cfg.time()
    traj = flows.evolve(flows.FlowState(u0, None, 0.0), params, tm["T"],
                        n_checkpoints=tm["checkpoints"])
    reports = _energy_csv(os.path.join(outdir, "energy.csv"), traj, params)
    _snapshots(cfg, outdir, traj)
    mon = flows.bochner_monitor(traj.times, traj.maps,
                                burn_in=cfg.threshold("burn_in", 0.3))

    slack = cfg.threshold("sup_slack", 1e-8)
    exc_thr = cfg.threshold("bochner_excess", 1e-3)
    rate_thr = cfg.threshold("decay_rate", 0.1)
    properties = {
        "energy_nonincreasing": _prop(
            max(reports[k + 1].E1 - reports[k].E1
                for k in range(len(reports) - 1)),
            all(reports[k + 1].E1 <= reports[k].E1 + 1e-12 * reports[0].E1
                for k in range(len(reports) - 1))),
        "sup_speed_nonincreasing": _prop(mon.max_sup_increase,
                                         mon.max_sup_increase <= slack,
                                         slack),
        "bochner_speed_sq": _prop(mon.sq_excess, mon.sq_excess <= exc_thr,
                                  exc_thr),
        "exponential_decay": _prop(mon.decay_rate,
                                   mon.decay_rate <= -rate_thr, -rate_thr),
    }
    metrics = {"empirical_K": mon.empirical_K,
               "sup_history_first": float(mon.sup_history[0]),
               "sup_history_last": float(mon.sup_history[-1]),
               "E1_initial": reports[0].E1, "E1_final": reports[-1].E1}
    return _write_summary(outdir, "heat_relax", cfg, metrics, properties)


def run_theorem1(cfg, outdir):
    grid, Q, u0 = _initial_data(cfg)
    params = cfg.flow_params()
    tm = cfg.time()
    tw = cfg.tower()

    tower = gauge.build_heat_tower(u0, **tw)
    q_heat = tower.limit_map
    gridio.save_map(os.path.join(outdir, "q_heat.grid"), q_heat)
    floor = _heat_drift(grid, Q)

    traj = flows.evolve(flows.FlowState(u0, None, 0.0), params, tm["T"],
                        n_checkpoints=tm["checkpoints"], method="rk4")
    reports = _energy_csv(os.path.join(outdir, "energy.csv"), traj, params)
    _snapshots(cfg, outdir, traj)

    dist = [F.sup_distance(u, q_heat) for u in traj.maps]
    gridio.write_csv(os.path.join(outdir, "distance.csv"),
                     ("t", "sup_distance"), zip(traj.times, dist))

    # Cauchy tails of the time integrals of ||u_t||^2 and ||grad u_t||^2
    t = np.array(traj.times)
    ut_sq = 2.0 * np.array([r.E2 for r in reports])
    gut_sq = 2.0 * np.array([r.E3 for r in reports])
    half = len(t) // 2
    tail_ut = (np.trapezoid(ut_sq[half:], t[half:])
               / max(np.trapezoid(ut_sq, t), 1e-300))
    tail_gut = (np.trapezoid(gut_sq[half:], t[half:])
                / max(np.trapezoid(gut_sq, t), 1e-300))

    # dissipation identity, differenced across one half-CFL step at each
    # checkpoint state past the initial datum (whose under-resolved
    # derivatives put it outside the asymptotic regime)
    rel = []
    for k in range(1, len(traj.times)):
        if reports[k].tau_l2 ** 2 * params.alpha > 1e-9:
            rel.append(flows.dissipation_step_residual(traj.state(k),
                                                       params))
    worst_rel = max(rel) if rel else 0.0

    tail_half = dist[len(dist) // 2:]
    eventually_monotone = all(tail_half[k + 1] <= tail_half[k] + 1e-12
                              for k in range(len(tail_half) - 1))
    thr_floor = cfg.threshold("floor_factor", 10.0)
    thr_diss = cfg.threshold("dissipation_rel", 0.05)
    thr_tail = cfg.threshold("tail_fraction", 0.10)
    properties = {
        "energy_nonincreasing": _prop(
            max(reports[k + 1].E1 - reports[k].E1
                for k in range(len(reports) - 1)),
            all(reports[k + 1].E1 <= reports[k].E1 + 1e-12 * reports[0].E1
                for k in range(len(reports) - 1))),
        "dissipation_identity": _prop(worst_rel, worst_rel <= thr_diss,
                                      thr_diss),
        "distance_eventually_monotone": _prop(dist[-1],
                                              eventually_monotone),
        "converges_to_heat_limit": _prop(dist[-1],
                                         dist[-1] <= thr_floor * floor,
                                         thr_floor * floor),
        "ut_tail_cauchy": _prop(tail_ut, tail_ut < thr_tail, thr_tail),
        "grad_ut_tail_cauchy": _prop(tail_gut, tail_gut < thr_tail,
                                     thr_tail),
    }
    metrics = {"floor": floor, "initial_distance": dist[0],
               "final_distance": dist[-1],
               "tower_s_max": tower.s_max,
               "tower_tail_sup": tower.tail_sup}
    return _write_summary(outdir, "theorem1", cfg, metrics, properties)


def run_gauge_check(cfg, outdir):
    grid, Q, u0 = _initial_data(cfg)
    params = cfg.flow_params()
    tm = cfg.time()
    tw = cfg.tower()

    traj = flows.evolve(flows.FlowState(u0, None, 0.0), params, tm["T"],
                        n_checkpoints=max(2, tm["checkpoints"]),
                        method="rk4")
    _energy_csv(os.path.join(outdir, "energy.csv"), traj, params)
    u_t = traj.maps[-1]

    pair = gauge.tower_pair(u_t, params, dt=2.0 * flows.cfl_dt(grid, params),
                            **tw)
    tower, frames = pair.tower_a, pair.frames_a

    rows = []
    residual_sets = []
    ks = sorted({0, len(frames) // 4, len(frames) // 2, len(frames) - 2})
    At_frame_limit = float(np.abs(
        pair.connection_along_t(len(frames) - 1))[2:-2, 2:-2].max())
    for k in ks:
        b = gauge.caloric_bundle(tower, frames, k, phit=pair.phit(k))
        res = gauge.gauge_residuals(b, params, At_limit=At_frame_limit)
        rows.append((float(tower.s_grid[k]), res.torsion, res.commutator,
                     res.w_norm, res.heat_tension, res.At_limit))
        residual_sets.append(res)
    gridio.write_csv(os.path.join(outdir, "gauge.csv"), GAUGE_COLUMNS, rows)

    # two-route comparison at s = 0
    b0 = gauge.caloric_bundle(tower, frames, 0, phit=pair.phit(0))
    A1i, A2i, tail = gauge.connection_from_integral(tower, frames)
    gap1 = F.lp_norm(grid, A1i[0] - b0.A1, 2, trim=2)
    gap2 = F.lp_norm(grid, A2i[0] - b0.A2, 2, trim=2)
    a_scale = F.lp_norm(grid, b0.A1, 2, trim=2)
    As_max = max(float(np.abs(gauge.connection_along_s(tower, frames, k))
                       [2:-2, 2:-2].max())
                 for k in range(0, len(frames) - 1, 4))

    gridio.save_fields(os.path.join(outdir, "gauge_fields.grid"), grid,
                       {"A1": b0.A1, "A2": b0.A2,
                        "phi1_re": b0.phi1.real, "phi1_im": b0.phi1.imag,
                        "phi2_re": b0.phi2.real, "phi2_im": b0.phi2.imag,
                        "phis_re": b0.phis.real, "phis_im": b0.phis.imag})

    thr_tors = cfg.threshold("torsion", 0.05)
    thr_comm = cfg.threshold("commutator", 0.05)
    thr_w = cfg.threshold("w_norm", 2.0)
    thr_gap = cfg.threshold("two_route_gap", 0.05)
    thr_As = cfg.threshold("As_max", 1e-2)
    worst_t = max(r.torsion for r in residual_sets)
    worst_c = max(r.commutator for r in residual_sets)
    w0 = residual_sets[0].w_norm
    properties = {
        "torsion_small": _prop(worst_t, worst_t <= thr_tors, thr_tors),
        "commutator_small": _prop(worst_c, worst_c <= thr_comm, thr_comm),
        "w_below_budget": _prop(w0, w0 <= thr_w, thr_w),
        "two_route_agreement": _prop(max(gap1, gap2),
                                     max(gap1, gap2) <= thr_gap, thr_gap),
        "transport_parallel": _prop(As_max, As_max <= thr_As, thr_As),
        "At_limit_small": _prop(At_frame_limit,
                                At_frame_limit <= 3.0 * tw["tail_tol"],
                                3.0 * tw["tail_tol"]),
    }
    metrics = {"A_scale_l2": a_scale, "integral_tail_estimate": tail,
               "gap_A1": gap1, "gap_A2": gap2,
               "tower_s_max": tower.s_max,
               "tower_checkpoints": len(frames)}
    return _write_summary(outdir, "gauge_check", cfg, metrics, properties)


def run_lemma36(cfg, outdir):
    grid, Q, u0 = _initial_data(cfg)
    params = cfg.flow_params()
    tm = cfg.time()
    tw = cfg.tower()

    traj = flows.evolve(flows.FlowState(u0, None, 0.0), params, tm["T"],
                        n_checkpoints=2, method="rk4")
    _energy_csv(os.path.join(outdir, "energy.csv"), traj, params)
    sources = {f"t={traj.times[k]:g}": traj.maps[k] for k in range(3)}

    towers = {}
    for name, u in sources.items():
        towers[name] = gauge.build_heat_tower(u, **tw)
    names = list(towers)
    gaps = {}
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            d = F.sup_distance(towers[names[a]].limit_map,
                               towers[names[b]].limit_map)
            gaps[f"{names[a]} vs {names[b]}"] = d
    for name, tower in towers.items():
        tag = name.replace("=", "").replace(".", "p")
        gridio.save_map(os.path.join(outdir, f"limit_{tag}.grid"),
                        tower.limit_map)

    worst = max(gaps.values())
    thr = 3.0 * tw["tail_tol"]
    properties = {
        "common_limit": _prop(worst, worst <= thr, thr),
    }
    metrics = {"pairwise_gaps": gaps,
               "tail_tols": {n: towers[n].tail_sup for n in names}}
    return _write_summary(outdir, "lemma36_sametower", cfg, metrics,
                          properties)


def run_mcgahagan(cfg, outdir):
    grid, Q, u0 = _initial_data(cfg)
    params = cfg.flow_params()
    tm = cfg.time()
    deltas = sorted(cfg.delta_values(), reverse=True)

    ll = flows.evolve(flows.FlowState(u0.copy(), None, 0.0), params,
                      tm["T"], n_checkpoints=tm["checkpoints"],
                      method="rk4")
    _energy_csv(os.path.join(outdir, "energy.csv"), ll, params)

    rows = []
    finals = []
    for d in deltas:
        p = cfg.flow_params(delta=d)
        v0 = flows.ll_rhs(u0, p)
        wave = flows.evolve(flows.FlowState(u0.copy(), v0.copy(), 0.0), p,
                            tm["T"], n_checkpoints=tm["checkpoints"])
        dist = F.sup_distance(wave.maps[-1], ll.maps[-1])
        finals.append(dist)
        rows.append((d, dist))
    gridio.write_csv(os.path.join(outdir, "delta_distance.csv"),
                     ("delta", "sup_distance_final"), rows)

    monotone = all(finals[k + 1] < finals[k] for k in range(len(finals) - 1))
    properties = {
        "delta_monotone_approach": _prop(finals[-1], monotone),
    }
    metrics = {"deltas": deltas, "final_distances": finals}
    return _write_summary(outdir, "mcgahagan_delta", cfg, metrics,
                          properties)


def run_kernel_check(cfg, outdir):
    grid = cfg.grid()
    kc = cfg.kernel()
    f0 = harmonic.bump_profile(grid, (0.0, 0.0), 1.0)
    table = heatkernels.smoothing_diagnostics(grid, f0, kc["s_samples"])
    gridio.write_csv(os.path.join(outdir, "kernel_ratios.csv"),
                     KERNEL_COLUMNS, table.rows())

    total = table.integral_values[-1]
    t_grid = table.integral_grid
    S = t_grid[-1] / 2.0
    partial_S = float(np.interp(S, t_grid, table.integral_values))
    tail_frac = (total - partial_S) / max(total, 1e-300)

    ratio_max = float(table.ratio.max())
    metrics = {"ratio_max": ratio_max, "integral_total": float(total),
               "integral_tail_fraction": float(tail_frac)}
    properties = {
        "ratio_bounded": _prop(ratio_max,
                               ratio_max <= cfg.threshold("ratio_max", 50.0),
                               cfg.threshold("ratio_max", 50.0)),
        "lemma_integral_tail": _prop(tail_frac, tail_frac < 0.10, 0.10),
    }

    if kc["refine_check"]:
        fine = grid.refined()
        f0f = harmonic.bump_profile(fine, (0.0, 0.0), 1.0)
        table_f = heatkernels.smoothing_diagnostics(fine, f0f,
                                                    kc["s_samples"])
        change = abs(float(table_f.ratio.max()) - ratio_max) / ratio_max
        metrics["ratio_max_refined"] = float(table_f.ratio.max())
        metrics["ratio_refinement_change"] = float(change)
        properties["ratio_refinement_stable"] = _prop(change, change <= 0.2,
                                                      0.2)
    return _write_summary(outdir, "kernel_check", cfg, metrics, properties)


RUNNERS = {
    "stationary": run_stationary,
    "heat_relax": run_heat_relax,
    "theorem1": run_theorem1,
    "gauge_check": run_gauge_check,
    "lemma36_sametower": run_lemma36,
    "mcgahagan_delta": run_mcgahagan,
    "kernel_check": run_kernel_check,
}


def run_scenario(cfg, outdir=None):
    """Run a validated config; returns (exit_code, summary_or_None).

    Exit codes: 0 all properties pass, 2 numerical failure (divergence or
    unconverged tower; partial artifacts are kept), 3 at least one
    property failed.
    """
    outdir = outdir or cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    runner = RUNNERS[cfg.scenario]
    try:
        summary = runner(cfg, outdir)
    except (flows.FlowDivergedError, gauge.TowerNotConvergedError) as exc:
        with open(os.path.join(outdir, "failure.json"), "w") as fh:
            json.dump({"scenario": cfg.scenario, "error": str(exc)}, fh,
                      indent=2, sort_keys=True)
            fh.write("\n")
        return 2, None
    return (0 if summary["all_pass"] else 3), summary
