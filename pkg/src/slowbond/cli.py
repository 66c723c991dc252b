"""Command line entry point ``slowbond``."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import config as cfgmod
from .config import ExperimentConfig


def _base(args, kind: str) -> ExperimentConfig:
    """Config from ``--config`` (first entry) or the kind's defaults, with
    command line overrides applied."""
    if args.config:
        d = cfgmod.load(args.config)[0].to_dict()
        d["kind"] = kind
    else:
        d = {"kind": kind}
    for key, attr in (("sizes", "n"), ("horizon", "T"), ("m", "m"), ("replicas", "replicas")):
        v = getattr(args, attr, None)
        if v is not None:
            d[key] = v if key != "sizes" or isinstance(v, list) else [v]
    if args.seed is not None:
        d["seed"] = args.seed
    return ExperimentConfig.from_dict(d)


def _out(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _dump(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args) -> int:
    from . import io, plotting
    from .empirical import local_averages
    from .lattice import SYMMETRIC, WEAKLY_ASYMMETRIC, DynamicsSpec, initial_from_profile, simulate

    cfg = _base(args, "hydro_perturbed" if args.perturbed else "hydro_symmetric")
    n = int(cfg.sizes[0])
    H = cfg.perturbation() if args.perturbed else None
    spec = DynamicsSpec(n, cfg.horizon, WEAKLY_ASYMMETRIC if H else SYMMETRIC, H, cfg.seed)
    obs = np.linspace(0.0, cfg.horizon, args.snapshots)
    traj = simulate(spec, initial_from_profile(cfg.gamma(), n), obs, record_events=False)
    out = _out(args)
    io.write_snapshots_csv(traj, os.path.join(out, "snapshots.csv"))
    io.write_snapshots_packed(traj, os.path.join(out, "snapshots.bin"))
    io.write_rows_csv(os.path.join(out, "local_averages.csv"), ["site", "local_average"],
                      list(enumerate(local_averages(traj.final, cfg.eps).tolist())))
    plotting.occupation_image(traj, os.path.join(out, "occupation.png"))
    _dump({"spec": spec.to_dict(), "events": traj.n_events, "proposals": traj.n_proposals},
          os.path.join(out, "simulate.json"))
    print(f"N={n} T={cfg.horizon} events={traj.n_events} -> {out}")
    return 0


def _solution(cfg: ExperimentConfig, perturbed: bool, n_obs: int = 200):
    from .pde import solve_perturbed, solve_symmetric

    if perturbed:
        return solve_perturbed(cfg.gamma(), cfg.perturbation(), cfg.horizon, cfg.m, cfg.dt, n_obs)
    return solve_symmetric(cfg.gamma(), cfg.horizon, cfg.m, cfg.dt, n_obs)


def cmd_pde(args) -> int:
    from . import plotting

    cfg = _base(args, "hydro_perturbed" if args.perturbed else "hydro_symmetric")
    sol = _solution(cfg, args.perturbed, args.snapshots)
    out = _out(args)
    sol.to_csv(os.path.join(out, "pde.csv"))
    plotting.pde_snapshots(sol, os.path.join(out, "pde.png"))
    drift = float(np.abs(sol.masses - sol.masses[0]).max())
    _dump({"m": sol.m, "dt": sol.dt, "steps": sol.meta["steps"], "mass_drift": drift},
          os.path.join(out, "pde.json"))
    print(f"m={sol.m} steps={sol.meta['steps']} mass drift={drift:.3e} -> {out}")
    return 0


def cmd_rate(args) -> int:
    from .rate import PathMeasure, j_hat, rate_closed_form

    cfg = _base(args, "rate_check")
    rho = PathMeasure.from_solution(_solution(cfg, True, 400))
    H = cfg.perturbation()
    b = rate_closed_form(rho, H)
    out = _out(args)
    _dump({**b.to_dict(), "j_hat": j_hat(rho, H)}, os.path.join(out, "rate.json"))
    print(b.to_json())
    return 0


def cmd_invert(args) -> int:
    from .inverse import SolutionPath, build_H

    cfg = _base(args, "invert_check")
    inv = build_H(SolutionPath(_solution(cfg, True, 400)))
    out = _out(args)
    inv.to_csv(os.path.join(out, "inverse_field.csv"))
    print(f"recovered field on {inv.times.size} x {inv.nodes.size} grid; "
          f"mean jump {inv.jump.mean():.6f} -> {out}")
    return 0


def cmd_entropy(args) -> int:
    from .girsanov import entropy_estimates
    from .lattice import WEAKLY_ASYMMETRIC, DynamicsSpec, initial_from_profile

    cfg = _base(args, "entropy_check")
    H = cfg.perturbation()
    res = []
    for n in cfg.sizes:
        spec = DynamicsSpec(int(n), cfg.horizon, WEAKLY_ASYMMETRIC, H, cfg.seed)
        est = entropy_estimates(spec, H, cfg.replicas, initial_from_profile(cfg.gamma(), int(n)),
                                args.threads)
        res.append({k: v.to_dict() for k, v in est.items()})
        print(json.dumps(res[-1]))
    _dump(res, os.path.join(_out(args), "entropy.json"))
    return 0


def _configs(args) -> list[ExperimentConfig]:
    if args.config:
        cfgs = cfgmod.load(args.config)
    else:
        cfgs = [ExperimentConfig.default(k) for k in cfgmod.KINDS]
    if args.seed is not None:
        for c in cfgs:
            c.seed = args.seed
    return cfgs


def _print_report(r: dict) -> None:
    for c in r["checks"]:
        flag = "PASS" if c["passed"] else "FAIL"
        print(f"[{flag}] {r['kind']}.{c['name']}: value={c['value']} tol={c['tolerance']}")


def cmd_verify(args) -> int:
    from .experiments import sweep

    reports = sweep(_configs(args), args.out, args.threads, not args.no_figures)
    for r in reports:
        _print_report(r)
    return 0 if all(r["passed"] for r in reports) else 1


def cmd_sweep(args) -> int:
    from .experiments import sweep

    reports = sweep(_configs(args), args.out, args.threads, not args.no_figures)
    summary = summarize(reports)
    if args.out:
        _dump(summary, os.path.join(args.out, "sweep_summary.json"))
    print(json.dumps(summary, indent=2))
    return 0 if summary["passed"] else 1


def summarize(reports: list[dict]) -> dict:
    """Pass/fail per report and, for size sweeps, whether errors shrink with N."""
    trend = {}
    for r in reports:
        key = "errors" if "errors" in r["summary"] else "gaps" if "gaps" in r["summary"] else None
        if key:
            pairs = sorted((int(n), v) for n, v in r["summary"][key].items())
            vals = [v for _, v in pairs]
            trend[r["kind"]] = {"sizes": [n for n, _ in pairs], key: vals,
                                "monotone": bool(all(b < a for a, b in zip(vals, vals[1:])))}
    return {"passed": all(r["passed"] for r in reports),
            "reports": [{"kind": r["kind"], "passed": r["passed"]} for r in reports],
            "trends": trend}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slowbond", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (object or list)")
    common.add_argument("--seed", type=int, help="64-bit seed override")
    common.add_argument("--out", default="slowbond_out", help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="replica worker threads (default: $SLOWBOND_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    for name, fn, help_ in (("simulate", cmd_simulate, "one lattice trajectory"),
                            ("pde", cmd_pde, "solve the hydrodynamic equation")):
        sp = add(name, fn, help_)
        sp.add_argument("--perturbed", action="store_true", help="use the config's driving field")
        sp.add_argument("--snapshots", type=int, default=11)
        sp.add_argument("--n", type=int)
        sp.add_argument("--T", type=float)
        sp.add_argument("--m", type=int)
    for name, fn, help_ in (("rate", cmd_rate, "closed-form rate of the driven solution"),
                            ("invert", cmd_invert, "recover the driving field from a path"),
                            ("entropy", cmd_entropy, "relative entropy per site by simulation")):
        sp = add(name, fn, help_)
        sp.add_argument("--T", type=float)
        sp.add_argument("--m", type=int)
        sp.add_argument("--replicas", type=int)
        if name == "entropy":
            sp.add_argument("--n", type=int, nargs="+")
    for name, fn, help_ in (("verify", cmd_verify, "run checks; exit 1 on any failure"),
                            ("sweep", cmd_sweep, "run a list of configs with a trend summary")):
        sp = add(name, fn, help_)
        sp.add_argument("--no-figures", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"slowbond: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
