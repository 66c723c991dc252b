"""Finite-volume solvers for the hydrodynamic equations on the cut torus.

Cells ``j = 0..m-1`` cover ``[j/m, (j+1)/m]``. Faces ``0`` and ``m`` are the
two sides of the slow bond and carry the same flux, so mass telescopes
exactly. The symmetric equation uses the Fick flux ``rho(0-) - rho(0+)``
across the cut; the perturbed one uses the nonlinear exchange flux.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .fields import DensityField, Perturbation, Profile, cell_centers, chi, side_values

CFL = 0.25
# time steps between rows of the tabulated H used by the compiled loop
TABLE_EVERY = 32


@dataclass
class PdeSolution:
    times: np.ndarray
    snapshots: np.ndarray  # (len(times), m) cell averages
    dt: float
    cut_flux: np.ndarray  # per step, flux from 0- into 0+
    perturbation: Perturbation | None = None
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.snapshots.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def fields(self) -> list[DensityField]:
        return [DensityField(row) for row in self.snapshots]

    @property
    def masses(self) -> np.ndarray:
        return self.snapshots.mean(axis=1)

    def sides(self):
        """Arrays ``(rho(0+), rho(0-))`` over the observation times."""
        return side_values(self.snapshots)

    def at(self, t: float) -> DensityField:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, self.horizon):
            raise ValueError(f"time {t} is not an observation time")
        return DensityField(self.snapshots[i])

    def to_csv(self, path) -> None:
        u = cell_centers(self.m)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "u", "rho"])
            for t, row in zip(self.times, self.snapshots):
                for uj, r in zip(u, row):
                    w.writerow([repr(float(t)), repr(float(uj)), repr(float(r))])


def _initial(gamma, m: int | None) -> DensityField:
    if isinstance(gamma, DensityField):
        if m is not None and m != gamma.m:
            raise ValueError("grid size differs from the initial field")
        return gamma
    if m is None:
        raise ValueError("grid size required for a profile initial condition")
    return DensityField.from_profile(gamma, m)


def _schedule(T: float, m: int, dt: float | None, n_obs: int):
    limit = CFL / m ** 2
    if dt is None:
        dt = limit
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt} violates the stability limit {limit}")
    if not T > 0:
        raise ValueError("horizon must be positive")
    nsteps = int(np.ceil(T / dt - 1e-9))
    stride = max(1, nsteps // max(1, n_obs))
    nsteps = int(np.ceil(nsteps / stride)) * stride
    return T / nsteps, nsteps, stride


def _solve(rho0: DensityField, T, dt, n_obs, H: Perturbation | None) -> PdeSolution:
    if not rho0.is_bounded():
        raise ValueError("initial density must lie in [0, 1]")
    m = rho0.m
    dt, nsteps, stride = _schedule(T, m, dt, n_obs)
    if H is None:
        tab_u = np.zeros((2, m + 1))
        tab_j = np.zeros(2)
        every = nsteps
    else:
        every = TABLE_EVERY
        rows = nsteps // every + 2
        t = (np.arange(rows) * every * dt)[:, None]
        faces = (np.arange(m + 1) / m)[None, :]
        tab_u = np.ascontiguousarray(H.du(t, faces) * np.ones((rows, m + 1)))
        tab_j = np.ascontiguousarray(H.jump(t[:, 0]) * np.ones(rows))
        if not (np.isfinite(tab_u).all() and np.isfinite(tab_j).all()):
            raise ValueError("perturbation evaluated to non-finite values")
    snaps, flux, lo, hi = _kernels.fv_kernel(rho0.values.copy(), dt, nsteps, stride,
                                             H is not None, tab_u, tab_j, every)
    if lo < -1e-12 or hi > 1 + 1e-12:
        raise AssertionError(f"density left [0, 1] (min {lo}, max {hi})")
    times = np.arange(snaps.shape[0]) * stride * dt
    return PdeSolution(times, snaps, dt, flux, H, {"m": m, "steps": nsteps, "stride": stride})


def solve_symmetric(gamma: DensityField | Profile, T: float, m: int | None = None,
                    dt: float | None = None, n_obs: int = 200) -> PdeSolution:
    """Heat equation with the linear Robin condition at the slow bond."""
    return _solve(_initial(gamma, m), T, dt, n_obs, None)


def solve_perturbed(gamma: DensityField | Profile, H: Perturbation, T: float,
                    m: int | None = None, dt: float | None = None,
                    n_obs: int = 200) -> PdeSolution:
    """Quasilinear equation driven by ``H`` with the nonlinear exchange flux."""
    return _solve(_initial(gamma, m), T, dt, n_obs, H)


def exchange_flux(plus, minus, jump):
    """Flux from ``0-`` into ``0+`` for side values and jump ``H(0+) - H(0-)``."""
    return minus * (1 - plus) * np.exp(jump) - plus * (1 - minus) * np.exp(-jump)


def _trapezoid(y, t):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def weak_residual(sol: PdeSolution, G: Perturbation, H: Perturbation | None = None) -> float:
    """``|LHS - RHS|`` of the integral identity satisfied by weak solutions.

    With ``H`` the perturbed identity is used (drift pairing and the
    exchange flux at the cut); without it, the symmetric one. Midpoint
    rule in space, trapezoid in time over the observation instants.
    """
    t = sol.times
    rho = sol.snapshots
    m = sol.m
    u = cell_centers(m)[None, :]
    tt = t[:, None]
    ones = np.ones((t.size, m))
    plus, minus = sol.sides()
    zeros, onesv = np.zeros_like(t), np.ones_like(t)

    lhs = (rho[-1] * G(t[-1], u[0])).mean() - (rho[0] * G(t[0], u[0])).mean()
    bulk = (rho * (G.dt(tt, u) + G.duu(tt, u)) * ones).mean(axis=1)
    edge = plus * G.du(t, zeros) - minus * G.du(t, onesv)
    jumpG = G.jump(t)
    if H is None:
        cut = -(plus - minus) * jumpG
        drift = 0.0
    else:
        cut = exchange_flux(plus, minus, H.jump(t)) * jumpG
        drift = 2.0 * (chi(rho) * H.du(tt, u) * G.du(tt, u) * ones).mean(axis=1)
    integrand = bulk + edge + cut + drift
    rhs = _trapezoid(integrand, t)
    return abs(lhs - rhs)
