"""Batch front end: build metrics, run experiments, write reports.

Exit codes: 0 all monitors pass, 1 monitor failure, 2 configuration error,
3 numerical abort (NaN / positivity / fairness loss).
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, corner, curvature, flow, heatdemo, mass, metrics, oracle
from .grid import RadialGrid

ENV_OUTDIR = "AFGEO_OUTDIR"

EXIT_OK = 0
EXIT_MONITOR = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    pass


def _parse_kv(body):
    out = {}
    if not body:
        return out
    for item in body.split(","):
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


def parse_grid(spec):
    """Grid constructors: staggered:rmax=..,num=.. | uniform:rmin=..,rmax=..,num=.."""
    name, _, body = spec.partition(":")
    kv = _parse_kv(body)
    try:
        if name == "staggered":
            return RadialGrid.staggered(kv["rmax"], int(kv["num"]))
        if name == "uniform":
            return RadialGrid.uniform(kv.get("rmin", 0.5), kv["rmax"],
                                      int(kv["num"]))
        if name == "geometric":
            return RadialGrid.geometric(kv.get("rmin", 0.5), kv["rmax"],
                                        int(kv["num"]), kv.get("ratio", 1.005))
    except KeyError as e:
        raise ConfigError(f"grid spec {spec!r} missing {e}")
    raise ConfigError(f"unknown grid type {name!r}")


def parse_metric(spec, grid, dim=3):
    """Metric constructors addressable as name:key=value,..."""
    name, _, body = spec.partition(":")
    kv = _parse_kv(body)
    if name == "flat":
        return metrics.build_flat(dim, grid)
    if name == "schwarzschild":
        return metrics.build_schwarzschild_isotropic(kv.get("m", 1.0), grid)
    if name == "conformal":
        return metrics.build_conformal(kv.get("c", 0.4), dim, grid)
    if name == "distorted-flat":
        return metrics.build_distorted_flat(dim, grid,
                                            kink_radius=kv.get("kink", 3.0),
                                            amp=kv.get("amp", 0.05))
    if name == "angular-bump":
        return metrics.build_angular_bump(kv.get("c", 0.2), dim, grid,
                                          width=kv.get("width", 1.0))
    raise ConfigError(f"unknown metric {name!r}")


def _float_list(text):
    return [float(x) for x in text.split(",") if x]


def _outdir(args):
    path = args.out or os.environ.get(ENV_OUTDIR) or "reports"
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_report(outdir, name, config_lines, body_lines):
    path = outdir / f"{name}.txt"
    with open(path, "w") as fh:
        for line in config_lines:
            fh.write(f"config.{line}\n")
        for line in body_lines:
            fh.write(line + "\n")
    return path


def _config_lines(args, keys):
    return [f"{k}={getattr(args, k.replace('-', '_'))}" for k in keys]


def _flow_config(args):
    return flow.FlowConfig(T_final=args.T, cfl=args.cfl,
                           monitor_every=args.monitor_every,
                           fairness=args.fairness)


# -- subcommands ------------------------------------------------------------

def cmd_mass(args):
    grid = parse_grid(args.grid)
    g = parse_metric(args.metric, grid, args.dim)
    # snap requested radii to the nearest grid nodes
    radii = [float(grid.r[np.argmin(np.abs(grid.r - t))])
             for t in _float_list(args.radii)]
    rep = mass.adm_mass(g, radii)
    out = _outdir(args)
    _write_report(out, "mass",
                  _config_lines(args, ["metric", "grid", "radii", "dim"]),
                  rep.lines())
    return EXIT_OK if rep.converged else EXIT_MONITOR


def cmd_flow(args):
    grid = parse_grid(args.grid)
    g = parse_metric(args.metric, grid, args.dim)
    h = parse_metric(args.background, grid, args.dim) if args.background else g
    traj = flow.evolve(g, h, _flow_config(args))
    out = _outdir(args)
    with open(out / "trajectory.csv", "w") as fh:
        traj.dump(fh)
    last = traj.snapshots[-1]
    body = [f"steps={len(traj.dt_history)}",
            f"T_final={last.t:.12g}",
            f"max_eta={float(np.max(np.abs(last.eta_A))):.12g}",
            f"max_grad_eta={last.diagnostics['max_grad_eta']:.12g}"]
    _write_report(out, "flow",
                  _config_lines(args, ["metric", "background", "grid", "T",
                                       "cfl", "monitor-every"]), body)
    return EXIT_OK


def cmd_corner(args):
    grid = corner.make_corner_grid(args.rmin, args.r0, args.rmax,
                                   fine_dr=1.0 / args.fine_density,
                                   outer_num=args.outer_num)
    base = parse_metric(args.base, grid, args.dim)
    cm = corner.corner_example(base, args.r0, args.strength)
    Hm, Hp, ok = corner.corner_condition(cm)
    body = [f"H_minus={Hm:.12g}", f"H_plus={Hp:.12g}", f"condition_ok={ok}"]
    all_ok = True
    jobs = [(eps,) for eps in _float_list(args.eps)]

    def run(eps):
        _, cert = corner.mollify(cm, eps, K_target=args.K)
        return eps, cert

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(lambda j: run(*j), jobs))
    for eps, cert in results:
        body.append(f"eps={eps:g} " + " ".join(cert.lines()))
        all_ok = all_ok and cert.satisfied
    out = _outdir(args)
    _write_report(out, "corner",
                  _config_lines(args, ["base", "r0", "strength", "eps", "K"]),
                  body)
    return EXIT_OK if all_ok else EXIT_MONITOR


def _finish_monitor(args, name, report, keys):
    out = _outdir(args)
    _write_report(out, name, _config_lines(args, keys), report.lines())
    with open(out / f"{name}.csv", "w") as fh:
        report.write_csv(fh)
    return EXIT_OK if report.passed else EXIT_MONITOR


def cmd_mass_constancy(args):
    grid = parse_grid(args.grid)
    g = parse_metric(args.metric, grid, args.dim)
    h = parse_metric(args.background, grid, args.dim) if args.background else g
    rep, _ = analysis.mass_constancy_experiment(
        g, h, _flow_config(args), radii=tuple(_float_list(args.radii)),
        rel_tol=args.tol)
    return _finish_monitor(args, "mass_constancy", rep,
                           ["metric", "grid", "T", "radii", "tol"])


def cmd_mass_liminf(args):
    cgrid = corner.make_corner_grid(args.rmin, args.r0, args.rmax,
                                    fine_dr=1.0 / args.fine_density,
                                    outer_num=args.outer_num)
    base = parse_metric(args.base, cgrid, args.dim)
    cm = corner.corner_example(base, args.r0, args.strength)
    rep, _ = analysis.mass_liminf_experiment(
        cm, _float_list(args.eps), _flow_config(args),
        radii=tuple(_float_list(args.radii)), rel_tol=args.tol,
        r_floor_tol=args.r_floor, grid=parse_grid(args.grid))
    return _finish_monitor(args, "mass_liminf", rep,
                           ["base", "r0", "strength", "eps", "grid", "T"])


def cmd_zero_mass(args):
    rep, _ = analysis.zero_mass_experiment(
        _flow_config(args), kink_radius=args.kink, amp=args.amp,
        grid=parse_grid(args.grid))
    return _finish_monitor(args, "zero_mass", rep,
                           ["kink", "amp", "grid", "T"])


def cmd_heat_demo(args):
    times = _float_list(args.times)
    if times[0] != 0.0:
        times.insert(0, 0.0)
    p = heatdemo.initial_profile(x_max=args.x_max, dx=args.dx)
    profiles = [p]
    for t0, t1 in zip(times, times[1:]):
        p = heatdemo.heat_evolve(p, t1 - t0)
        profiles.append(p)
    out = _outdir(args)
    with open(out / "heat_decay.csv", "w") as fh:
        rows = heatdemo.decay_table(profiles, fh)
    k0 = [r["sup_k0"] for r in rows]
    ok = min(k0) >= 0.05 and max(k0) <= 1.1
    _write_report(out, "heat_demo",
                  _config_lines(args, ["times", "x-max", "dx"]),
                  [f"sup_k0_min={min(k0):.6g}", f"sup_k0_max={max(k0):.6g}",
                   f"floor_ok={ok}"])
    return EXIT_OK if ok else EXIT_MONITOR


def cmd_verify(args):
    grid = parse_grid(args.grid)
    probes = [
        ("flat", metrics.build_flat(args.dim, grid)),
        ("schwarzschild", metrics.build_schwarzschild_isotropic(1.0, grid)),
        ("conformal", metrics.build_conformal(0.4, args.dim, grid)),
        ("angular-bump", metrics.build_angular_bump(0.2, args.dim, grid)),
        ("distorted-flat", metrics.build_distorted_flat(args.dim, grid,
                                                        kink_radius=3.0,
                                                        amp=0.03)),
    ]
    flat_bg = metrics.build_flat(args.dim, grid)
    radii = [float(grid.r[np.argmin(np.abs(grid.r - t))])
             for t in (10.0, 20.0)]
    body = []
    worst = 0.0
    for name, g in probes:
        R = curvature.scalar_curvature(g)
        Rn = curvature.ricci_norm_sq(g)
        W = flow.deturck_vector(g, flat_bg)
        for r0 in radii:
            i = int(np.argmin(np.abs(grid.r - r0)))
            pairs = [
                ("R", R[i], oracle.scalar_curvature_oracle(g, r0)),
                ("ric2", Rn[i], oracle.ricci_norm_sq_oracle(g, r0)),
                ("H", curvature.mean_curvature_sphere(g, r0),
                 oracle.mean_curvature_oracle(g, r0)),
                ("flux", mass.adm_mass_flux(g, r0),
                 oracle.flux_quadrature(g, r0, npoints=3000)),
                ("W", W[i], oracle.deturck_vector_oracle(g, flat_bg, r0)),
            ]
            for label, got, ref in pairs:
                # near-zero quantities are held to a 1e-2 scale floor so that
                # oracle roundoff does not masquerade as relative error
                rel = abs(got - ref) / max(abs(ref), abs(got), 1e-2)
                worst = max(worst, rel)
                body.append(f"{name}_r{r0:g}_{label}: value={got:.10g} "
                            f"oracle={ref:.10g} rel={rel:.3e}")
    ok = worst < args.tol
    body.append(f"worst_rel={worst:.3e}")
    body.append(f"passed={ok}")
    _write_report(_outdir(args), "verify",
                  _config_lines(args, ["grid", "tol"]), body)
    return EXIT_OK if ok else EXIT_MONITOR


# -- argument plumbing ------------------------------------------------------

def _add_common(p):
    p.add_argument("--out", default=None,
                   help=f"output directory (default ${ENV_OUTDIR} or ./reports)")
    p.add_argument("--config", default=None,
                   help="key=value file; command-line flags win")
    p.add_argument("--dim", type=int, default=3, choices=(3, 4, 5))
    p.add_argument("--jobs", type=int, default=1)


def _add_flow_opts(p):
    p.add_argument("--T", type=float, default=0.01)
    p.add_argument("--cfl", type=float, default=0.2)
    p.add_argument("--monitor-every", type=int, default=10)
    p.add_argument("--fairness", type=float, default=1.1)


def _add_corner_opts(p):
    p.add_argument("--base", default="schwarzschild:m=1")
    p.add_argument("--r0", type=float, default=4.0)
    p.add_argument("--strength", type=float, default=0.1)
    p.add_argument("--rmin", type=float, default=0.5)
    p.add_argument("--rmax", type=float, default=300.0)
    p.add_argument("--fine-density", type=float, default=32.0)
    p.add_argument("--outer-num", type=int, default=512)
    p.add_argument("--eps", default="1e-1,1e-2,1e-3")
    p.add_argument("--K", type=float, default=10.0)


def build_parser():
    top = argparse.ArgumentParser(prog="afgeo")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mass")
    _add_common(p)
    p.add_argument("--metric", default="schwarzschild:m=1")
    p.add_argument("--grid", default="staggered:rmax=300,num=2048")
    p.add_argument("--radii", default="50,100,200")
    p.set_defaults(func=cmd_mass)

    p = sub.add_parser("flow")
    _add_common(p)
    _add_flow_opts(p)
    p.add_argument("--metric", default="conformal:c=0.2")
    p.add_argument("--background", default="")
    p.add_argument("--grid", default="staggered:rmax=60,num=1024")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("corner")
    _add_common(p)
    _add_corner_opts(p)
    p.set_defaults(func=cmd_corner)

    p = sub.add_parser("mass-constancy")
    _add_common(p)
    _add_flow_opts(p)
    p.add_argument("--metric", default="schwarzschild:m=1")
    p.add_argument("--background", default="")
    p.add_argument("--grid", default="uniform:rmin=0.5,rmax=300,num=2048")
    p.add_argument("--radii", default="60,80,100")
    p.add_argument("--tol", type=float, default=1e-2)
    p.set_defaults(func=cmd_mass_constancy)

    p = sub.add_parser("mass-liminf")
    _add_common(p)
    _add_flow_opts(p)
    _add_corner_opts(p)
    p.add_argument("--grid", default="uniform:rmin=0.5,rmax=300,num=1024")
    p.add_argument("--radii", default="60,80,100")
    p.add_argument("--tol", type=float, default=1e-2)
    p.add_argument("--r-floor", type=float, default=1e-4)
    p.set_defaults(func=cmd_mass_liminf)

    p = sub.add_parser("zero-mass")
    _add_common(p)
    _add_flow_opts(p)
    p.add_argument("--kink", type=float, default=3.0)
    p.add_argument("--amp", type=float, default=0.05)
    p.add_argument("--grid", default="staggered:rmax=60,num=512")
    # the default 5% kink sandwiches the flat background within [0.86, 1.10]
    p.set_defaults(func=cmd_zero_mass, fairness=1.2)

    p = sub.add_parser("heat-demo")
    _add_common(p)
    p.add_argument("--times", default="0.25,0.5,1.0")
    p.add_argument("--x-max", type=float, default=200.0)
    p.add_argument("--dx", type=float, default=0.05)
    p.set_defaults(func=cmd_heat_demo)

    p = sub.add_parser("verify")
    _add_common(p)
    p.add_argument("--grid", default="uniform:rmin=0.5,rmax=40,num=1024")
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_verify)
    return top


def _apply_config_file(args, argv):
    if not args.config:
        return
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    given = {a.split("=")[0].lstrip("-").replace("-", "_")
             for a in argv if a.startswith("--")}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        attr = k.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {k!r}")
        if attr in given:
            continue  # flags win over the file
        cur = getattr(args, attr)
        if isinstance(cur, bool):
            v = v.lower() in ("1", "true", "yes")
        elif isinstance(cur, int):
            v = int(v)
        elif isinstance(cur, float):
            v = float(v)
        setattr(args, attr, v)


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, sys.argv[1:] if argv is None else argv)
        return args.func(args)
    except flow.FlowAbort as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(run())
