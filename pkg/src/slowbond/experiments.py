"""Experiment kinds composed from the library modules.

Every kind returns an :class:`Outcome`: named pass/fail checks, CSV
tables and figure builders. :func:`run` writes them next to a JSON
report when an output directory is given.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import plotting
from .config import ExperimentConfig
from .empirical import box_means, site_box_averages
from .fields import DensityField, constant_field, interior_bump, zero_field
from .girsanov import COMPENSATED, DIRECT, entropy_estimates, sample_log_rn
from .inverse import EllipticCoefficients, SolutionPath, build_H, solve_root, solve_root_newton
from .io import write_rows_csv
from .lattice import (SYMMETRIC, WEAKLY_ASYMMETRIC, DynamicsSpec, initial_from_profile,
                      simulate_replicas)
from .pde import solve_perturbed, solve_symmetric
from .rate import (PathMeasure, constant_path, energy, energy_maximizer, energy_of,
                   interpolation_check, j_hat,
                   random_family, rate_closed_form, rate_convex_combination_check)
from .report import build_report, write_report


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        v = float(self.value)
        return {"name": self.name, "value": v if math.isfinite(v) else None,
                "tolerance": float(self.tolerance), "passed": bool(self.passed),
                "note": self.note}


def at_most(name, value, tol, note="") -> Check:
    return Check(name, float(value), float(tol), bool(value <= tol), note)


@dataclass
class Outcome:
    checks: list[Check] = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # file name -> (header, rows)
    figures: dict = field(default_factory=dict)  # file name -> callable(path)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _n_obs(cfg: ExperimentConfig) -> int:
    return int(cfg.options.get("n_obs", 400))


def _strictly_decreasing(values) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) < 0) or np.all(v <= 1e-15))


# hydrodynamics ------------------------------------------------------------------

def _hydro(cfg: ExperimentConfig, perturbed: bool, threads) -> Outcome:
    gamma = cfg.gamma()
    H = cfg.perturbation() if perturbed else None
    T = cfg.horizon
    if perturbed:
        sol = solve_perturbed(gamma, H, T, cfg.m, cfg.dt, n_obs=10)
    else:
        sol = solve_symmetric(gamma, T, cfg.m, cfg.dt, n_obs=10)
    # lattice snapshots at the solver's observation instants after t = 0
    obs = np.minimum(sol.times[1:], T)
    errors, rows, curves = [], [], {}
    for n in cfg.sizes:
        mode = WEAKLY_ASYMMETRIC if perturbed else SYMMETRIC
        spec = DynamicsSpec(int(n), T, mode, H, cfg.seed)
        init = initial_from_profile(gamma, int(n))
        trajs = simulate_replicas(spec, init, cfg.replicas, obs, threads=threads)
        occ = np.mean([tr.snapshots for tr in trajs], axis=0)
        for k, t in enumerate(obs):
            emp = box_means(occ[k], cfg.eps)
            ref = site_box_averages(DensityField(sol.snapshots[k + 1]), int(n), cfg.eps)
            rows.append([int(n), float(t), float(np.abs(emp - ref).mean())])
        errors.append(rows[-1][2])
        curves[int(n)] = (np.arange(int(n)) / int(n), emp, ref)
    out = Outcome()
    out.checks.append(at_most(f"l1_error_n{cfg.sizes[-1]}", errors[-1], cfg.tolerance))
    if len(errors) > 1:
        out.checks.append(Check("l1_error_decreasing", errors[-1] - errors[0], 0.0,
                                _strictly_decreasing(errors), "largest minus smallest size"))
    out.tables["hydro_errors.csv"] = (["n", "t", "l1_error"], rows)
    out.figures["hydro_profiles.png"] = lambda p: plotting.hydro_profiles(curves, p)
    out.figures["hydro_errors.png"] = lambda p: plotting.error_vs_size(cfg.sizes, errors, p)
    out.summary = {"errors": dict(zip(map(str, cfg.sizes), errors))}
    return out


# rate functional -------------------------------------------------------------------

def _rate(cfg: ExperimentConfig, threads) -> Outcome:
    gamma, H, T = cfg.gamma(), cfg.perturbation(), cfg.horizon
    n_obs = _n_obs(cfg)
    rho = PathMeasure.from_solution(solve_perturbed(gamma, H, T, cfg.m, cfg.dt, n_obs))
    lam = PathMeasure.from_solution(solve_symmetric(gamma, T, cfg.m, cfg.dt, n_obs))
    family = random_family(count=cfg.replicas, seed=cfg.seed)[1:]
    out = Outcome()

    jH = j_hat(rho, H)
    closed = rate_closed_form(rho, H)
    excess = max(j_hat(rho, G) for G in family) - jH
    out.checks.append(at_most("sup_attained_at_driving_field", excess, 1e-6,
                              "max over random G of J_G minus J_H"))
    out.checks.append(at_most("closed_form_matches", abs(jH - closed.total), cfg.tolerance))
    zero_max = max(j_hat(lam, G) for G in family)
    out.checks.append(at_most("hydrodynamic_path_nonpositive", zero_max, 1e-6))
    const = max(abs(j_hat(lam, constant_field(c))) for c in (-2.0, 0.5, 3.0))
    out.checks.append(at_most("hydrodynamic_path_constant_fields", const, 1e-10))

    # convexity against a constant path below both side values
    low = float(0.5 * min(rho.plus.min(), rho.minus.min()))
    fam = [H, *family]
    margins = []
    for theta in (0.25, 0.5, 0.75):
        res = rate_convex_combination_check(rho, constant_path(low, rho), theta, fam)
        margins.append(res.margin if res.applicable else -math.inf)
    same = rate_convex_combination_check(rho, rho, 0.5, fam)
    out.checks.append(Check("convexity_margin", min(margins), 0.0,
                            bool(min(margins) >= -1e-10 and same.passed),
                            "min over theta of theta I(a) + (1-theta) I(b) - I(mix)"))
    interp = interpolation_check(rho, fam, reference=closed.total)
    out.checks.append(Check("interpolation_margin", interp.margin, 0.0, interp.passed,
                            "closed-form rate + 1e-3 minus family rate at the smallest eps"))

    out.tables["rate_breakdown.csv"] = (
        ["grad_term", "plus_term", "minus_term", "total", "j_hat_driving"],
        [[closed.grad_term, closed.plus_term, closed.minus_term, closed.total, jH]])
    out.tables["interpolation.csv"] = (["eps", "family_rate"],
                                       [[e, r] for e, r in zip(interp.eps, interp.rates)])
    out.figures["rate_interpolation.png"] = lambda p: plotting.interpolation(interp, p)
    out.summary = {"breakdown": closed.to_dict(), "j_hat": jH}
    return out


# inverse problem -----------------------------------------------------------------

def _invert(cfg: ExperimentConfig, threads) -> Outcome:
    gamma, H0, T = cfg.gamma(), cfg.perturbation(), cfg.horizon
    sol = solve_perturbed(gamma, H0, T, cfg.m, cfg.dt, _n_obs(cfg))
    inv = build_H(SolutionPath(sol))
    tt, u = inv.times[:, None], inv.nodes[None, :]
    true_du = H0.du(tt, u) * np.ones_like(inv.dH)
    rel_du = float(np.sqrt(np.sum((inv.dH - true_du) ** 2) / np.sum(true_du ** 2)))
    true_jump = H0.jump(inv.times)
    rel_jump = float(np.sqrt(np.sum((inv.jump - true_jump) ** 2) / np.sum(true_jump ** 2)))
    residual = max(r.residual for r in inv.roots)
    agree = max(abs(solve_root_newton(c).z0 - r.z0) for c, r in zip(inv.coeffs, inv.roots))
    rng = np.random.default_rng(cfg.seed)
    for _ in range(100):
        c = EllipticCoefficients(rng.uniform(2, 200), rng.uniform(-20, 20), rng.uniform(0, 1),
                                 rng.uniform(0, 1))
        agree = max(agree, abs(solve_root(c).z0 - solve_root_newton(c).z0))
    out = Outcome()
    out.checks.append(at_most("relative_l2_du", rel_du, cfg.tolerance))
    out.checks.append(at_most("relative_l2_jump", rel_jump, cfg.tolerance))
    out.checks.append(at_most("root_residual", residual, 1e-12))
    out.checks.append(at_most("bisection_newton_agreement", agree, 1e-10))
    k = np.linspace(0, inv.times.size - 1, 5).astype(int)
    out.tables["inverse_field.csv"] = (
        ["t", "u", "H", "dH_du", "dH_du_true"],
        [[inv.times[i], inv.nodes[j], inv.H[i, j], inv.dH[i, j], true_du[i, j]]
         for i in k for j in range(0, inv.nodes.size, 8)])
    out.figures["inverse_field.png"] = lambda p: plotting.inverse_field(inv, true_du, p)
    out.summary = {"relative_l2_du": rel_du, "relative_l2_jump": rel_jump}
    return out


# entropy ----------------------------------------------------------------------------

def _entropy(cfg: ExperimentConfig, threads) -> Outcome:
    gamma, H, T = cfg.gamma(), cfg.perturbation(), cfg.horizon
    estimator = cfg.options.get("estimator", COMPENSATED)
    rho = PathMeasure.from_solution(solve_perturbed(gamma, H, T, cfg.m, cfg.dt, _n_obs(cfg)))
    rate = rate_closed_form(rho, H).total
    rows, gaps, ests = [], [], []
    for n in cfg.sizes:
        spec = DynamicsSpec(int(n), T, WEAKLY_ASYMMETRIC, H, cfg.seed)
        both = entropy_estimates(spec, H, cfg.replicas, initial_from_profile(gamma, int(n)),
                                 threads)
        e = both[estimator]
        ests.append(e)
        gaps.append(abs(e.mean_per_site - rate))
        rows.append([int(n), cfg.replicas, both[COMPENSATED].mean_per_site,
                     both[COMPENSATED].std_error, both[DIRECT].mean_per_site,
                     both[DIRECT].std_error, rate])
    tol = max(cfg.tolerance, 0.2 * abs(rate))
    out = Outcome()
    out.checks.append(Check("gap_decreasing", gaps[-1] - gaps[0], 0.0,
                            _strictly_decreasing(gaps), f"estimator={estimator}"))
    out.checks.append(at_most("final_gap", gaps[-1], tol))
    worst = min(e.mean_per_site + 3 * e.std_error for e in ests)
    out.checks.append(Check("nonnegative_within_3se", worst, 0.0, bool(worst >= 0)))
    out.tables["entropy.csv"] = (["n", "replicas", "compensated", "compensated_se", "direct",
                                  "direct_se", "rate"], rows)
    out.figures["entropy.png"] = lambda p: plotting.entropy_trend(rows, p)
    out.summary = {"rate": rate, "gaps": dict(zip(map(str, cfg.sizes), gaps))}
    return out


# energy ---------------------------------------------------------------------------

def energy_paths():
    """Smooth paths ``1/2 + a(t) b(u)`` whose gradient vanishes near the cut,
    with their first and second space derivatives."""
    specs = [(0.2, 0.3, 0.7, 0.0), (0.3, 0.2, 0.8, 1.0), (0.15, 0.1, 0.6, 3.0),
             (0.25, 0.4, 0.9, -2.0), (0.1, 0.25, 0.55, 5.0)]
    out = []
    for amp, lo, hi, freq in specs:
        B = interior_bump(1.0, lo, hi)
        a = (lambda amp, freq: (lambda t: amp * np.cos(freq * np.asarray(t))))(amp, freq)
        rho = (lambda B, a: lambda t, u: 0.5 + a(t) * B(0.0, u))(B, a)
        rho_u = (lambda B, a: lambda t, u: a(t) * B.du(0.0, u))(B, a)
        rho_uu = (lambda B, a: lambda t, u: a(t) * B.duu(0.0, u))(B, a)
        out.append((rho, rho_u, rho_uu))
    return out


def _energy(cfg: ExperimentConfig, threads) -> Outcome:
    rng = np.random.default_rng(cfg.seed)
    worst_gap, worst_excess, rows = 0.0, -math.inf, []
    for i, (rho, rho_u, rho_uu) in enumerate(energy_paths()):
        path = PathMeasure.from_function(rho, cfg.horizon, 101, cfg.m, rho_u)
        top = energy(path)
        at_max = energy_of(path, energy_maximizer(rho_u, rho_uu))
        worst_gap = max(worst_gap, abs(at_max - top))
        for _ in range(cfg.replicas // 5 if i < 4 else cfg.replicas - 4 * (cfg.replicas // 5)):
            lo = rng.uniform(0.05, 0.5)
            G = interior_bump(rng.uniform(-1, 1), lo, rng.uniform(lo + 0.1, 0.95),
                              rng.uniform(0, 4))
            worst_excess = max(worst_excess, energy_of(path, G) - top)
        rows.append([i, top, at_max])
    out = Outcome()
    out.checks.append(at_most("maximizer_matches_closed_form", worst_gap, cfg.tolerance))
    out.checks.append(at_most("random_fields_below_supremum", worst_excess, 1e-12))
    out.tables["energy.csv"] = (["path", "energy", "energy_at_maximizer"], rows)
    out.summary = {"worst_gap": worst_gap}
    return out


# martingale ---------------------------------------------------------------------------

def _martingale(cfg: ExperimentConfig, threads) -> Outcome:
    gamma, H = cfg.gamma(), cfg.perturbation() or zero_field()
    n = int(cfg.sizes[0])
    spec = DynamicsSpec(n, cfg.horizon, SYMMETRIC, None, cfg.seed)
    vals = np.exp(sample_log_rn(spec, H, initial_from_profile(gamma, n), cfg.replicas, threads))
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(vals.size))
    z = abs(mean - 1.0) / se if se > 0 else (0.0 if mean == 1.0 else math.inf)
    out = Outcome()
    out.checks.append(at_most("mean_one_z_score", z, cfg.tolerance, f"mean={mean:.6f} se={se:.6f}"))
    out.tables["martingale.csv"] = (["replica", "likelihood_ratio"],
                                    [[i, v] for i, v in enumerate(vals)])
    out.figures["martingale.png"] = lambda p: plotting.likelihood_hist(vals, p)
    out.summary = {"mean": mean, "std_error": se}
    return out


KIND_RUNNERS: dict[str, Callable] = {
    "hydro_symmetric": lambda cfg, th: _hydro(cfg, False, th),
    "hydro_perturbed": lambda cfg, th: _hydro(cfg, True, th),
    "rate_check": _rate,
    "invert_check": _invert,
    "entropy_check": _entropy,
    "energy_check": _energy,
    "martingale_check": _martingale,
}


def execute(cfg: ExperimentConfig, threads: int | None = None) -> Outcome:
    try:
        return KIND_RUNNERS[cfg.kind](cfg, threads)
    except Exception as exc:
        raise RuntimeError(f"{cfg.kind} failed: {exc}") from exc


def run(cfg: ExperimentConfig, out_dir: str | None = None, threads: int | None = None,
        figures: bool = True) -> dict:
    """Run one experiment; write CSV tables, figures and ``report.json`` to
    ``out_dir`` (or ``cfg.out``) when set. Returns the report."""
    out_dir = out_dir or cfg.out
    t0 = time.perf_counter()
    outcome = execute(cfg, threads)
    elapsed = time.perf_counter() - t0
    files = []
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for name, (header, rows) in outcome.tables.items():
            write_rows_csv(os.path.join(out_dir, name), header, rows)
            files.append(name)
        if figures:
            for name, draw in outcome.figures.items():
                draw(os.path.join(out_dir, name))
                files.append(name)
    report = build_report(cfg, [c.to_dict() for c in outcome.checks], outcome.summary,
                          elapsed, files)
    if out_dir:
        write_report(report, os.path.join(out_dir, "report.json"))
    return report


def sweep(configs: list[ExperimentConfig], out_dir: str | None = None,
          threads: int | None = None, figures: bool = True) -> list[dict]:
    """Run configs in order, each in its own numbered subdirectory."""
    reports = []
    for i, cfg in enumerate(configs):
        sub = os.path.join(out_dir, f"{i:02d}_{cfg.kind}") if out_dir else None
        reports.append(run(cfg, sub, threads, figures))
    return reports
