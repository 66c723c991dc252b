"""Recover the driving field from a strictly interior density path.

For each time slice the field solves a linear second-order equation in
``u`` whose two flux conditions at the cut couple through one scalar
unknown ``z``, the value of the field at ``u = 1`` (it vanishes at
``u = 0``). That scalar is the root of a strictly increasing function.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import GL_NODES, GL_WEIGHTS, Perturbation, chi, side_values
from .pde import PdeSolution

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class SliceData:
    """A time slice on the nodes ``u`` (including 0 and 1)."""

    t: float
    u: np.ndarray
    rho: np.ndarray
    rho_u: np.ndarray
    flux_dt: np.ndarray  # time derivative of the mass on [0, u]

    @property
    def plus(self) -> float:
        return float(self.rho[0])

    @property
    def minus(self) -> float:
        return float(self.rho[-1])


@dataclass(frozen=True)
class SmoothPath:
    """Analytic path with its space and time derivatives."""

    rho: Callable
    rho_u: Callable
    rho_t: Callable
    horizon: float
    rho_uu: Callable | None = None

    def slice(self, t: float, m: int) -> SliceData:
        u = np.linspace(0.0, 1.0, m + 1)
        tt = np.full_like(u, t)
        # mass derivative on [0, u]: Gauss quadrature per cell, then cumulate
        left = u[:-1, None] + GL_NODES[None, :] / m
        cell = (self.rho_t(np.full_like(left, t), left) * GL_WEIGHTS).sum(axis=1) / m
        dF = np.concatenate(([0.0], np.cumsum(cell)))
        ones = np.ones_like(u)
        return SliceData(float(t), u, self.rho(tt, u) * ones, self.rho_u(tt, u) * ones, dF)


class SolutionPath:
    """Grid path from solver snapshots; time derivatives by centred differences
    between observation instants."""

    def __init__(self, sol: PdeSolution):
        self.sol = sol
        m = sol.m
        self.horizon = sol.horizon
        plus, minus = side_values(sol.snapshots)
        self.nodes = np.concatenate(([0.0], (np.arange(m) + 0.5) / m, [1.0]))
        self.values = np.column_stack((plus, sol.snapshots, minus))
        cum = np.cumsum(sol.snapshots, axis=1) / m
        F = cum - sol.snapshots / (2 * m)
        self.mass_left = np.column_stack((np.zeros(len(sol.times)), F, cum[:, -1]))

    @property
    def times(self) -> np.ndarray:
        return self.sol.times

    def slice_index(self, k: int) -> SliceData:
        t = self.sol.times
        lo, hi = max(k - 1, 0), min(k + 1, t.size - 1)
        dF = (self.mass_left[hi] - self.mass_left[lo]) / (t[hi] - t[lo])
        rho = self.values[k]
        grad = np.gradient(rho, self.nodes)
        return SliceData(float(t[k]), self.nodes, rho, grad, dF)

    def slice(self, t: float, m: int | None = None) -> SliceData:
        k = int(np.argmin(np.abs(self.sol.times - t)))
        if abs(self.sol.times[k] - t) > 1e-9 * max(1.0, self.horizon):
            raise ValueError(f"time {t} is not an observation time")
        return self.slice_index(k)


@dataclass(frozen=True)
class EllipticCoefficients:
    alpha: float
    A: float
    B: float
    C: float
    t: float = 0.0


def _trapz_cum(y, u):
    return np.concatenate(([0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(u))))


def _check_interior(s: SliceData):
    if s.rho.min() <= BOUNDARY_TOL or s.rho.max() >= 1 - BOUNDARY_TOL:
        raise ValueError(f"density touches 0 or 1 at t={s.t}; the inverse problem needs "
                         "a path bounded away from both")


def _integrands(s: SliceData):
    w = 1.0 / (2.0 * chi(s.rho))
    return w, (s.rho_u - s.flux_dt) * w


def coefficients_of(s: SliceData) -> EllipticCoefficients:
    _check_interior(s)
    w, src = _integrands(s)
    alpha = _trapz_cum(w, s.u)[-1]
    A = _trapz_cum(src, s.u)[-1]
    return EllipticCoefficients(float(alpha), float(A), s.minus * (1 - s.plus),
                                s.plus * (1 - s.minus), s.t)


def coefficients(path, t: float, m: int = 1024) -> EllipticCoefficients:
    return coefficients_of(path.slice(t, m))


@dataclass(frozen=True)
class RootResult:
    z0: float
    residual: float
    iterations: int


def root_function(c: EllipticCoefficients, z: float) -> float:
    return z - c.alpha * (c.B * math.exp(-z) - c.C * math.exp(z)) - c.A


def _slope(c: EllipticCoefficients, z: float) -> float:
    return 1.0 + c.alpha * (c.B * math.exp(-z) + c.C * math.exp(z))


def bracket(c: EllipticCoefficients) -> tuple[float, float]:
    """Interval with a sign change; the ``exp(-z)`` term is bounded by ``alpha B``
    on the right and the ``exp(z)`` term by ``alpha C`` on the left."""
    return -(abs(c.A) + c.alpha * c.C + 1.0), abs(c.A) + c.alpha * c.B + 1.0


def _validate(c: EllipticCoefficients):
    if c.B < 0 or c.C < 0 or not c.alpha > 0:
        raise ValueError("coefficients need B, C >= 0 and alpha > 0")


def solve_root(c: EllipticCoefficients, xtol: float = 1e-12, polish: int = 2) -> RootResult:
    """Bisection to ``xtol`` then Newton polish steps."""
    _validate(c)
    lo, hi = bracket(c)
    assert root_function(c, lo) < 0 < root_function(c, hi), "bracket lost its sign change"
    it = 0
    while hi - lo > xtol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if root_function(c, mid) < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    z = 0.5 * (lo + hi)
    for _ in range(polish):
        z -= root_function(c, z) / _slope(c, z)
        it += 1
    return RootResult(z, abs(root_function(c, z)), it)


def solve_root_newton(c: EllipticCoefficients, tol: float = 1e-14, maxiter: int = 200) -> RootResult:
    """Newton's method kept inside a shrinking sign-change bracket."""
    _validate(c)
    lo, hi = bracket(c)
    z = min(max(c.A, lo), hi)
    for it in range(1, maxiter + 1):
        g = root_function(c, z)
        if g < 0:
            lo = z
        else:
            hi = z
        step = z - g / _slope(c, z)
        z_new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(z_new - z) <= tol * max(1.0, abs(z)):
            z = z_new
            break
        z = z_new
    return RootResult(z, abs(root_function(c, z)), it)


@dataclass
class InverseField:
    """The recovered field tabulated on ``times x nodes``."""

    times: np.ndarray
    nodes: np.ndarray
    H: np.ndarray
    dH: np.ndarray
    roots: list
    coeffs: list
    meta: dict = field(default_factory=dict)

    @property
    def jump(self) -> np.ndarray:
        """``H(t, 0+) - H(t, 0-)``, i.e. ``-z0``."""
        return self.H[:, 0] - self.H[:, -1]

    def perturbation(self) -> Perturbation:
        return tabulated_field(self.times, self.nodes, self.H, self.dH)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "u", "H", "dH_du"])
            for k, t in enumerate(self.times):
                for i, u in enumerate(self.nodes):
                    w.writerow([repr(float(t)), repr(float(u)), repr(float(self.H[k, i])),
                                repr(float(self.dH[k, i]))])


def field_slice(s: SliceData):
    """``(H, d_u H, coefficients, root)`` on the slice's nodes, with ``H(0) = 0``."""
    c = coefficients_of(s)
    r = solve_root(c)
    K = c.B * math.exp(-r.z0) - c.C * math.exp(r.z0)
    w, src = _integrands(s)
    dH = K * w + src
    H = _trapz_cum(dH, s.u)
    return H, dH, c, r


def build_H(path, T: float | None = None, m: int = 1024, times=None) -> InverseField:
    """Solve every time slice and tabulate the field.

    ``path`` is a SmoothPath (sampled at ``times``, default 101 instants
    on ``[0, T]``) or a SolutionPath (its observation instants).
    """
    if isinstance(path, SolutionPath):
        ks = range(path.times.size)
        slices = [path.slice_index(k) for k in ks]
    else:
        T = path.horizon if T is None else T
        times = np.linspace(0.0, T, 101) if times is None else np.asarray(times, dtype=float)
        slices = [path.slice(t, m) for t in times]
    Hs, dHs, cs, rs = [], [], [], []
    for s in slices:
        H, dH, c, r = field_slice(s)
        Hs.append(H)
        dHs.append(dH)
        cs.append(c)
        rs.append(r)
    times = np.array([s.t for s in slices])
    return InverseField(times, slices[0].u, np.array(Hs), np.array(dHs), rs, cs)


def tabulated_field(times, nodes, H, dH) -> Perturbation:
    """Piecewise-linear interpolation of tabulated values; time and second
    space derivatives come from differences of the tables."""
    times = np.asarray(times, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    Ht = np.gradient(H, times, axis=0) if times.size > 1 else np.zeros_like(H)
    dHu = np.gradient(dH, nodes, axis=1)

    def interp(table):
        def ev(t, u):
            t, u = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(u, dtype=float))
            if times.size > 1:
                k = np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2)
                a = np.clip((t - times[k]) / (times[k + 1] - times[k]), 0.0, 1.0)
            else:
                k = np.zeros(t.shape, dtype=int)
                a = np.zeros(t.shape)
            i = np.clip(np.searchsorted(nodes, u, side="right") - 1, 0, nodes.size - 2)
            b = np.clip((u - nodes[i]) / (nodes[i + 1] - nodes[i]), 0.0, 1.0)
            k1 = np.minimum(k + 1, times.size - 1)
            row0 = (1 - b) * table[k, i] + b * table[k, i + 1]
            row1 = (1 - b) * table[k1, i] + b * table[k1, i + 1]
            return (1 - a) * row0 + a * row1
        return ev

    return Perturbation(interp(H), interp(dH), interp(Ht), interp(dHu), name="tabulated")


def equation_residual(s: SliceData, dH: np.ndarray, rho_uu, rho_t) -> np.ndarray:
    """Pointwise residual of the field equation at interior nodes.

    ``rho_uu``/``rho_t`` are the second space and first time derivatives of
    the density on the slice nodes; ``d^2_u H`` is taken by centred
    differences of the tabulated ``d_u H``.
    """
    u = s.u
    d2 = (dH[2:] - dH[:-2]) / (u[2:] - u[:-2])
    ch = chi(s.rho[1:-1])
    dchi = (1 - 2 * s.rho[1:-1]) * s.rho_u[1:-1]
    lhs = d2 + dchi / ch * dH[1:-1]
    rhs = (rho_uu[1:-1] - rho_t[1:-1]) / (2 * ch)
    return lhs - rhs
