"""Monitors and end-to-end experiments for the flow of radial metrics.

Each monitor consumes an immutable trajectory (or metric) and produces a
MonitorReport: measured quantities, the tolerances they were held to, and a
verdict.  Experiments chain construction, smoothing, evolution and monitors.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import RadialGrid, smoothstep, sphere_area
from .metrics import RadialMetric, build_flat, build_distorted_flat, radial_kink_map
from .curvature import scalar_curvature
from . import corner as corner_mod
from . import flow as flow_mod
from . import mass as mass_mod


@dataclass
class MonitorReport:
    monitor: str
    passed: bool
    tolerances: dict
    measured: dict
    series: list = field(default_factory=list)  # rows of {column: value}

    def lines(self):
        out = [f"monitor={self.monitor}", f"passed={self.passed}"]
        out += [f"tol_{k}={v:g}" for k, v in self.tolerances.items()]
        out += [f"{k}={v}" for k, v in self.measured.items()]
        return out

    def write_csv(self, fh):
        if not self.series:
            return
        cols = list(self.series[0].keys())
        fh.write(",".join(cols) + "\n")
        for row in self.series:
            fh.write(",".join(f"{row[c]:.12g}" for c in cols) + "\n")


# -- cutoff functions -------------------------------------------------------

@dataclass
class CutoffFunction:
    r1: float
    r2: float
    values: np.ndarray
    C_meas: float


def _laplacian(metric, f):
    grid = metric.grid
    n = metric.n
    dens = np.sqrt(metric.A * metric.B ** (n - 1)) * grid.r ** (n - 1)
    df = grid.deriv(f, 1, parity=True)
    return grid.deriv(dens / metric.A * df, 1, parity=False) / dens


def _cubic_step(x):
    # quadratic onset keeps sup(f''/f) at the ramp start independent of scale
    x = np.clip(x, 0.0, 1.0)
    return x ** 2 * (3.0 - 2.0 * x)


def build_cutoff(r1, r2, metric):
    """Product cutoff: a bump rising from 1/r1^2 to 1 + 1/r1^2 across
    [r1, 2r1], flat to r2, then decaying to r^{-n-1} beyond 2r2.

    Satisfies Delta f <= C f with C independent of (r1, r2).
    """
    if not 1.0 < r1:
        raise ValueError("need r1 > 1")
    if not 2.0 * r1 < r2:
        raise ValueError("need r2 > 2 r1")
    if not r2 < metric.grid.r_max / 2.0:
        raise ValueError("need r2 < r_max / 2")
    r = metric.grid.r
    bump = _cubic_step(r / r1 - 1.0) + 1.0 / r1 ** 2
    top = 1.0 + 1.0 / r1 ** 2
    n = metric.n
    with np.errstate(divide="ignore"):
        target = np.where(r > 1.0, r ** (-(n + 1.0)) / top, 1.0)
    chi = smoothstep(r / r2 - 1.0)
    taper = np.exp(chi * np.log(target))
    f = bump * taper
    lap = _laplacian(metric, f)
    sel = slice(3, -3)  # clipped boundary stencils excluded
    C_meas = float(np.max(lap[sel] / f[sel]))
    return CutoffFunction(r1, r2, f, C_meas)


def cutoff_report(metric, ladder=((2.0, 8.0), (4.0, 16.0), (8.0, 32.0)),
                  tol=1e-6):
    """Nodewise value constraints plus ladder stability of C_meas."""
    r = metric.grid.r
    rows = []
    checks = []
    cs = []
    n = metric.n
    for r1, r2 in ladder:
        co = build_cutoff(r1, r2, metric)
        f = co.values
        inner = r < r1
        mid = (2.0 * r1 <= r) & (r <= r2)
        tail = r > 2.0 * r2
        ok = (bool(np.all((f > 0) & (f <= 2.0 + tol)))
              and bool(np.all(np.abs(f[inner] - 1.0 / r1 ** 2) <= tol))
              and bool(np.all(f[mid] >= 1.0 - tol))
              and bool(np.all(f[tail] <= r[tail] ** (-(n + 1.0)) + tol)))
        checks.append(ok)
        cs.append(co.C_meas)
        rows.append({"r1": r1, "r2": r2, "C_meas": co.C_meas, "values_ok": ok})
    spread = max(cs) / max(min(cs), 1e-300)
    passed = all(checks) and min(cs) > 0 and spread < 2.0
    return MonitorReport("cutoff", passed,
                         {"value_tol": tol, "C_spread_max": 2.0},
                         {"C_meas_min": min(cs), "C_meas_max": max(cs),
                          "C_spread": spread}, rows)


# -- discrete Gronwall ------------------------------------------------------

def gronwall_check(times, F, A, B, tol=1e-9):
    """Discrete check of F' <= A F + B on [0,1] and of the integrated bound
    F(t) <= e^A F(0) + B e^A.  A hypothesis failure is reported as such
    rather than as a bound failure."""
    times = np.asarray(times, dtype=float)
    F = np.asarray(F, dtype=float)
    if times[0] < 0 or times[-1] > 1.0 + 1e-12:
        raise ValueError("time series must lie in [0, 1]")
    hyp_ok = True
    for i in range(len(times) - 1):
        dt = times[i + 1] - times[i]
        # one exact integrating-factor step of the comparison ODE
        bound = np.exp(A * dt) * F[i] + B * dt * np.exp(A * dt)
        if F[i + 1] > bound + tol * (1.0 + abs(bound)):
            hyp_ok = False
            break
    glob = np.exp(A) * F[0] + B * np.exp(A)
    bound_ok = bool(np.all(F <= glob + tol * (1.0 + abs(glob))))
    if hyp_ok and bound_ok:
        mode = "none"
    elif not hyp_ok:
        mode = "hypothesis"
    else:
        mode = "bound"
    rows = [{"t": t, "F": f} for t, f in zip(times, F)]
    return MonitorReport("gronwall", hyp_ok and bound_ok, {"tol": tol},
                         {"failure_mode": mode, "global_bound": glob,
                          "F_max": float(np.max(F))}, rows)


# -- negative part of the scalar curvature ----------------------------------

def _volume_weights(metric, trim=5):
    # edge nodes use clipped stencils whose noise, scaled by the r^{n-1}
    # volume weight, would otherwise dominate small integrals
    n = metric.n
    r = metric.grid.r
    dens = np.sqrt(metric.A * metric.B ** (n - 1)) * r ** (n - 1)
    w = sphere_area(n) * dens
    if trim > 0:
        w = w.copy()
        w[:trim] = 0.0
        w[-trim:] = 0.0
    return w


def negative_part(metric, deltas=(1e-4, 1e-6, 1e-8)):
    """integral of |R| over {R < 0}, via the smooth penalisation
    (sqrt(R^2 + delta) - R)/2 shifted to vanish at R = 0, extrapolated to
    delta -> 0 (first order in sqrt(delta))."""
    R = scalar_curvature(metric)
    w = _volume_weights(metric)
    vals = []
    for d in deltas:
        pen = 0.5 * (np.sqrt(R ** 2 + d) - R) - 0.5 * np.sqrt(d)
        vals.append(metric.grid.trapz(w * np.maximum(pen, 0.0)))
    s1, s2 = np.sqrt(deltas[-2]), np.sqrt(deltas[-1])
    if s1 == s2:
        return float(max(vals[-1], 0.0))
    # linear model v(sqrt(delta)); eliminate the slope with the last two rungs
    v0 = (s1 * vals[-1] - s2 * vals[-2]) / (s1 - s2)
    return float(max(v0, 0.0))


def negative_part_masked(metric):
    """Direct route: masked quadrature of |R| where R < 0."""
    R = scalar_curvature(metric)
    w = _volume_weights(metric)
    return float(metric.grid.trapz(w * np.where(R < 0.0, -R, 0.0)))


def rneg_monitor(trajectory, K, tol=1e-6):
    """negative_part(g(t)) <= e^K negative_part(g(0)) + tol at every snapshot."""
    snaps = trajectory.snapshots
    p0 = negative_part(snaps[0].metric)
    cap = np.exp(K) * p0 + tol
    rows = []
    worst = 0.0
    worst_late = 0.0
    for s in snaps:
        p = negative_part(s.metric)
        rows.append({"t": s.t, "neg_part": p, "cap": cap})
        worst = max(worst, p)
        if s.t > snaps[0].t:
            worst_late = max(worst_late, p)
    # the t=0 comparison is an equality up to e^K, so the margin is only
    # informative once the flow has acted
    margin = cap / worst_late if worst_late > 0 else np.inf
    return MonitorReport("rneg", worst <= cap, {"abs_tol": tol},
                         {"K": K, "neg_part_initial": p0,
                          "neg_part_max": worst, "margin": margin}, rows)


# -- scalar-curvature tails and boundary fluxes -----------------------------

def _tail_integral(metric, r0):
    R = scalar_curvature(metric)
    w = _volume_weights(metric)
    r = metric.grid.r
    mask = r >= r0
    return float(np.trapezoid((w * np.abs(R))[mask], r[mask]))


def l1_tail_monitor(trajectory, radii, tol=1e-9):
    """Tails integral(|R|) over r > r0 for the radius ladder: decreasing in r
    at every snapshot, and bounded by a single curve eta~(r) = sup over t."""
    radii = sorted(radii)
    rows = []
    sup_curve = np.zeros(len(radii))
    mono_ok = True
    for s in trajectory.snapshots:
        tails = [_tail_integral(s.metric, r0) for r0 in radii]
        if np.any(np.diff(tails) > tol):
            mono_ok = False
        sup_curve = np.maximum(sup_curve, tails)
        row = {"t": s.t}
        row.update({f"tail_r{r0:g}": v for r0, v in zip(radii, tails)})
        rows.append(row)
    # growth constant of the doubling relation eta~(2r) <= C (r^-2 + eta(r)),
    # with eta measured on the initial data
    eta0 = {r0: _tail_integral(trajectory.snapshots[0].metric, r0)
            for r0 in radii}
    C_fit = 0.0
    for i, r0 in enumerate(radii):
        if 2.0 * r0 in radii:
            j = radii.index(2.0 * r0)
            C_fit = max(C_fit, sup_curve[j] / (r0 ** -2 + eta0[r0]))
    meas = {f"eta_sup_r{r0:g}": v for r0, v in zip(radii, sup_curve)}
    meas["C_fit"] = C_fit
    return MonitorReport("l1_tail", mono_ok and np.all(np.isfinite(sup_curve)),
                         {"mono_tol": tol}, meas, rows)


def boundary_gradient_flux(metric, r0):
    """integral of |grad R| over the metric sphere r = r0."""
    grid = metric.grid
    i = int(np.argmin(np.abs(grid.r - r0)))
    dR = grid.deriv(scalar_curvature(metric), 1, parity=True)
    n = metric.n
    area = sphere_area(n) * np.sqrt(metric.B[i]) ** (n - 1) * grid.r[i] ** (n - 1)
    return float(area * np.abs(dR[i]) / np.sqrt(metric.A[i]))


def boundary_gradient_monitor(trajectory, radii, tol=1e-12):
    """Flux of |grad R| through spheres: decreasing across the radius ladder,
    uniformly for t in the second half of the run."""
    radii = sorted(radii)
    T = trajectory.times()[-1]
    rows = []
    dec_ok = True
    sup_outer = 0.0
    inf_inner = np.inf
    for s in trajectory.snapshots:
        fluxes = [boundary_gradient_flux(s.metric, r0) for r0 in radii]
        row = {"t": s.t}
        row.update({f"flux_r{r0:g}": v for r0, v in zip(radii, fluxes)})
        rows.append(row)
        if s.t >= T / 2.0:
            if np.any(np.diff(fluxes) > tol):
                dec_ok = False
            sup_outer = max(sup_outer, fluxes[-1])
            inf_inner = min(inf_inner, fluxes[0])
    uniform_ok = sup_outer <= inf_inner + tol
    return MonitorReport("boundary_gradient", dec_ok and uniform_ok,
                         {"tol": tol},
                         {"sup_flux_outer": sup_outer,
                          "inf_flux_inner": inf_inner}, rows)


# -- experiments ------------------------------------------------------------

def _mass_radii(grid, targets):
    return [float(grid.r[np.argmin(np.abs(grid.r - t))]) for t in targets]


def mass_constancy_experiment(metric, h, config, radii=(60.0, 80.0, 100.0),
                              rel_tol=1e-2):
    """Evolve and track the extrapolated mass of every snapshot."""
    traj = flow_mod.evolve(metric, h, config)
    targets = _mass_radii(metric.grid, radii)
    rows = []
    masses = []
    for s in traj.snapshots:
        rep = mass_mod.adm_mass(s.metric, targets)
        masses.append(rep.mass)
        rows.append({"t": s.t, "mass": rep.mass})
    m0 = masses[0]
    scale = max(abs(m0), 1.0)
    drift = max(abs(m - m0) for m in masses) / scale
    report = MonitorReport("mass_constancy", drift < rel_tol,
                           {"rel_tol": rel_tol},
                           {"mass_initial": m0,
                            "mass_final": masses[-1],
                            "drift_rel": drift}, rows)
    return report, traj


def mass_liminf_experiment(cm, eps_ladder, config, radii=(60.0, 80.0, 100.0),
                           rel_tol=1e-2, r_floor_tol=1e-4, grid=None):
    """Smooth the corner at each epsilon, evolve, and compare masses.

    Checks: smoothing is mass-neutral across the ladder before the flow, all
    evolved masses stay near the base mass, the smallest-epsilon final mass
    does not exceed the ladder minimum, and R(g(T)) clears the floor."""
    if grid is None:
        # excised uniform grid: the corner base is singular at the center
        grid = RadialGrid.uniform(0.5, cm.inner.grid.r_max, 2048)
    base = cm.combined()
    targets = _mass_radii(grid, radii)
    base_mass = mass_mod.adm_mass(base,
                                  _mass_radii(base.grid, radii)).mass
    rows = []
    pre_masses = []
    all_masses = []
    final_R_min = np.inf
    last_traj = None
    for eps in sorted(eps_ladder, reverse=True):
        sm, cert = corner_mod.mollify(cm, eps, K_target=config.K_target,
                                      grid=grid)
        if not cert.satisfied:
            raise flow_mod.FlowAbort(f"smoothing certificate failed at eps={eps}")
        pre = mass_mod.adm_mass(sm, targets).mass
        pre_masses.append(pre)
        traj = flow_mod.evolve(sm, sm, config)
        for s in traj.snapshots:
            m = mass_mod.adm_mass(s.metric, targets).mass
            all_masses.append(m)
            rows.append({"eps": eps, "t": s.t, "mass": m})
        last_traj = traj
    RT = scalar_curvature(last_traj.snapshots[-1].metric)
    sel = grid.r < 0.9 * grid.r_max
    final_R_min = float(np.min(RT[sel]))
    limit_mass = rows[-1]["mass"]
    scale = max(abs(base_mass), 1.0)
    neutral = max(abs(m - base_mass) for m in pre_masses) / scale
    near = max(abs(m - base_mass) for m in all_masses) / scale
    liminf_ok = limit_mass <= min(all_masses) + rel_tol * scale
    passed = (neutral < rel_tol and near < rel_tol and liminf_ok
              and final_R_min >= -r_floor_tol)
    report = MonitorReport("mass_liminf", passed,
                           {"rel_tol": rel_tol, "R_floor": r_floor_tol},
                           {"mass_base": base_mass,
                            "mass_neutrality_rel": neutral,
                            "mass_spread_rel": near,
                            "mass_limit": limit_mass,
                            "final_R_min": final_R_min}, rows)
    return report, last_traj


def zero_mass_experiment(config, kink_radius=3.0, amp=0.05, grid=None,
                         smooth_width=None, mass_tol=1e-3, r_tol=1e-4,
                         roundtrip_tol=1e-2, map_tol=1e-1):
    """Flat metric in kinked coordinates: mass 0, flow flattens, and the
    extracted diffeomorphism recovers both the data and the coordinate map.

    The kink is resolved at grid scale (smooth_width, default 6 cells):
    sub-cell corner structure is unrepresentable and pointwise sampling of
    the bare Lipschitz map injects a phase-dependent curvature moment."""
    if grid is None:
        grid = RadialGrid.staggered(60.0, 2048)
    if smooth_width is None:
        smooth_width = 6.0 * grid.dr_min
    g0 = build_distorted_flat(3, grid, kink_radius=kink_radius, amp=amp,
                              smooth_width=smooth_width)
    h = build_flat(3, grid)
    targets = _mass_radii(grid, (grid.r_max * 0.5, grid.r_max * 0.7,
                                 grid.r_max * 0.9))
    m0 = mass_mod.adm_mass(g0, targets).mass
    traj = flow_mod.evolve(g0, h, config)
    gT = traj.snapshots[-1].metric
    R = scalar_curvature(gT)
    sel = grid.r < 0.8 * grid.r_max
    supR = float(np.max(np.abs(R[sel])))
    phi = flow_mod.extract_diffeomorphism(traj)
    pb = flow_mod.pullback(gT, phi.at_time(0.0))
    s2 = (grid.r > grid.r[4]) & sel
    rt_err = max(float(np.max(np.abs(pb.A - g0.A)[s2])),
                 float(np.max(np.abs(pb.B - g0.B)[s2])))
    Phi = radial_kink_map(grid.r, kink_radius, amp,
                          smooth_width=smooth_width)
    phi_err = float(np.max(np.abs(phi.at_time(0.0) - Phi)[s2]))
    rows = [{"t": s.t, "max_grad_eta": s.diagnostics["max_grad_eta"]}
            for s in traj.snapshots]
    passed = (abs(m0) < mass_tol and supR < r_tol
              and rt_err < roundtrip_tol and phi_err < map_tol)
    report = MonitorReport("zero_mass", passed,
                           {"mass_tol": mass_tol, "R_tol": r_tol,
                            "roundtrip_tol": roundtrip_tol,
                            "map_tol": map_tol},
                           {"mass": m0, "sup_R_final": supR,
                            "roundtrip_c0": rt_err,
                            "map_recovery_c0": phi_err}, rows)
    return report, traj


def weighted_decay_monitor(trajectory, t_floor_frac=0.1):
    """Uniform boundedness of the weighted sup-norms of eta along the run;
    the second-derivative norm is only required once t >= t_floor * T."""
    T = trajectory.times()[-1]
    rows = []
    w0m = w1m = 0.0
    w2m = 0.0
    for s in trajectory.snapshots:
        d = s.diagnostics
        rows.append({"t": s.t, "w0": d["wnorm0"], "w1": d["wnorm1"],
                     "w2": d["wnorm2"]})
        w0m = max(w0m, d["wnorm0"])
        w1m = max(w1m, d["wnorm1"])
        if s.t >= t_floor_frac * T:
            w2m = max(w2m, d["wnorm2"])
    start = trajectory.snapshots[0].diagnostics
    base = max(start["wnorm0"], start["wnorm1"], 1.0)
    passed = bool(np.isfinite(w0m) and np.isfinite(w1m) and np.isfinite(w2m)
                  and w0m <= 2.0 * base and w1m <= 2.0 * base)
    return MonitorReport("weighted_decay", passed,
                         {"growth_cap": 2.0},
                         {"w0_max": w0m, "w1_max": w1m,
                          "w2_max_late": w2m}, rows)
