"""Figures written next to the CSV outputs (Agg backend, no display)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def hydro_profiles(curves: dict, path) -> None:
    """Replica-mean local averages against the mollified PDE profile."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for n, (u, emp, ref) in sorted(curves.items()):
        ax.plot(u, emp, ".", ms=3, label=f"lattice N={n}")
    n_max = max(curves)
    u, _, ref = curves[n_max]
    ax.plot(u, ref, "k-", lw=1.2, label="PDE, same box average")
    ax.set_xlabel("u (cut at 0 = 1)")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    _save(fig, path)


def error_vs_size(sizes, errors, path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.loglog(sizes, errors, "o-")
    ax.set_xlabel("N")
    ax.set_ylabel("L1 error")
    _save(fig, path)


def interpolation(res, path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.semilogx(res.eps, res.rates, "o-", label="family rate of interpolated path")
    ax.axhline(res.base_rate, color="k", ls="--", lw=1, label="rate of the path")
    ax.set_xlabel("eps")
    ax.legend(fontsize=8)
    _save(fig, path)


def inverse_field(inv, true_du, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for k in np.linspace(inv.times.size // 10, inv.times.size - 1, 3).astype(int):
        line, = ax.plot(inv.nodes, inv.dH[k], lw=1.5, label=f"recovered t={inv.times[k]:.3g}")
        ax.plot(inv.nodes, true_du[k], "--", color=line.get_color(), lw=1)
    ax.set_xlabel("u")
    ax.set_ylabel("d_u H (dashed: driving field)")
    ax.legend(fontsize=8)
    _save(fig, path)


def entropy_trend(rows, path) -> None:
    rows = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.errorbar(rows[:, 0], rows[:, 2], yerr=rows[:, 3], fmt="o-", label="compensated")
    ax.errorbar(rows[:, 0], rows[:, 4], yerr=rows[:, 5], fmt="s:", label="direct")
    ax.axhline(rows[0, 6], color="k", ls="--", lw=1, label="closed-form rate")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("N")
    ax.set_ylabel("entropy per site")
    ax.legend(fontsize=8)
    _save(fig, path)


def likelihood_hist(vals, path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.hist(vals, bins=50)
    ax.axvline(1.0, color="k", ls="--", lw=1)
    ax.set_xlabel("likelihood ratio")
    _save(fig, path)


def pde_snapshots(sol, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    u = (np.arange(sol.m) + 0.5) / sol.m
    for k in np.linspace(0, sol.times.size - 1, 5).astype(int):
        ax.plot(u, sol.snapshots[k], label=f"t={sol.times[k]:.3g}")
    ax.set_xlabel("u")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    _save(fig, path)


def occupation_image(traj, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.imshow(traj.snapshots, aspect="auto", interpolation="nearest", cmap="Greys",
              extent=(0, traj.spec.n, traj.observe_at[-1], traj.observe_at[0]))
    ax.set_xlabel("site")
    ax.set_ylabel("time")
    _save(fig, path)
