"""Empirical measures, local averages and the two approximations of identity.

Conventions for the box average of atomic measures: the right box of ``v``
is ``(v, v + k/N]`` and the left box (used for ``v`` just left of the cut)
is ``[1 - k/N, 1)``, with ``k = floor(eps N)``. With these half-open ends
the box average of the empirical measure at ``x/N`` is exactly the local
average of the configuration at ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import DensityField
from .lattice import Configuration

_TOL = 1e-12


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Mass 1/N at every occupied site ``x/N``."""

    config: Configuration

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def atoms(self) -> np.ndarray:
        return np.flatnonzero(self.config.occ) / self.n

    @property
    def total_mass(self) -> float:
        return self.config.particles / self.n

    def pair(self, G) -> float:
        return pair(self, G)


def pair(pi: EmpiricalMeasure, G) -> float:
    """``<pi, G> = (1/N) sum_x G(x/N) eta(x)``."""
    x = np.flatnonzero(pi.config.occ)
    if x.size == 0:
        return 0.0
    return float(np.sum(np.asarray(G(x / pi.n), dtype=float) * np.ones(x.size)) / pi.n)


def box_size(n: int, eps: float) -> int:
    k = int(np.floor(eps * n + 1e-9))
    if k < 1:
        raise ValueError(f"eps*N = {eps * n} < 1: the box holds no site")
    return k


def box_means(values: np.ndarray, eps: float) -> np.ndarray:
    """Local averages of any site array (e.g. mean occupations over replicas)."""
    values = np.asarray(values, dtype=float)
    n = values.size
    k = box_size(n, eps)
    ext = np.concatenate((values, values[:k + 1]))
    csum = np.concatenate(([0.0], np.cumsum(ext)))
    x = np.arange(n)
    out = (csum[x + k + 1] - csum[x + 1]) / k
    out[x > n - k] = values[n - k:].sum() / k
    return out


def local_averages(c: Configuration, eps: float) -> np.ndarray:
    """Local averages at every site; boxes just left of the slow bond are
    moved so that they stay on its left."""
    return box_means(c.occ, eps)


def site_box_averages(rho, n: int, eps: float) -> np.ndarray:
    """Continuum counterpart of :func:`box_means` for a density with an
    ``integral(a, b)`` method: site ``y`` stands for the cell ``[y/N, (y+1)/N]``,
    as in the deterministic initial configurations."""
    k = box_size(n, eps)
    x = np.arange(n)
    a = (x + 1) / n
    b = (x + k + 1) / n
    inside = rho.integral(a, np.minimum(b, 1.0))
    wrapped = rho.integral(np.zeros(n), np.clip(b - 1.0, 0.0, 1.0))
    out = (inside + wrapped) * n / k
    left = x > n - k
    out[left] = rho.integral(1.0 - k / n, 1.0) * n / k
    return out


def local_average(c: Configuration, x: int, eps: float) -> float:
    return float(local_averages(c, eps)[x % c.n])


class BoxKernel:
    """``iota_eps(u, v)``: normalised indicator of the box attached to ``v``."""

    def __init__(self, eps: float):
        if not 0 < eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        self.eps = eps

    def box(self, v):
        v = np.asarray(v, dtype=float)
        a = np.where(v > 1 - self.eps, 1 - self.eps, v)
        return a, a + self.eps

    def __call__(self, u, v):
        a, b = self.box(v)
        u = np.asarray(u, dtype=float)
        return np.where((u > a) & (u < b), 1.0 / self.eps, 0.0)


def _box_empirical(pi: EmpiricalMeasure, eps: float, v) -> np.ndarray:
    n = pi.n
    k = box_size(n, eps)
    w = k / n
    v = np.atleast_1d(np.asarray(v, dtype=float)) % 1.0
    atoms = pi.atoms
    out = np.empty(v.shape)
    left = v > 1 - w + _TOL
    # right boxes (v, v + w]; atoms at exactly 1 are site 0
    pos = np.concatenate((atoms, atoms + 1.0))
    pos.sort()
    hi = np.searchsorted(pos, v[~left] + w + _TOL, side="right")
    lo = np.searchsorted(pos, v[~left] + _TOL, side="right")
    out[~left] = (hi - lo) / k
    cnt = np.count_nonzero(atoms >= 1 - w - _TOL)
    out[left] = cnt / k
    return out


def convolve_box(source, eps: float, v=None):
    """``(source * iota_eps)(v)`` evaluated exactly.

    ``source`` is an EmpiricalMeasure, a DensityField or a SmoothField.
    Without ``v``, a DensityField input is evaluated at its own cell
    centres and returned as a DensityField; an EmpiricalMeasure is
    evaluated at the sites ``x/N``.
    """
    if isinstance(source, EmpiricalMeasure):
        pts = np.arange(source.n) / source.n if v is None else v
        return _box_empirical(source, eps, pts)
    kern = BoxKernel(eps)
    if v is None:
        if not isinstance(source, DensityField):
            raise ValueError("evaluation points are required for this source")
        a, b = kern.box(source.centers)
        return DensityField((source.integral(a, b)) / eps)
    a, b = kern.box(np.asarray(v, dtype=float))
    return source.integral(a, b) / eps


# smooth approximation of identity ------------------------------------------

def base_profile(u):
    """``f(u) = 4 cos^2(2 pi u)`` on ``|u| <= 1/4``: continuous, symmetric,
    bounded by 4, unit integral."""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 0.25, 4.0 * np.cos(2 * np.pi * u) ** 2, 0.0)


def _P(s):
    """Antiderivative of ``f`` vanishing at ``-1/4``."""
    s = np.clip(s, -0.25, 0.25)
    return 2.0 * (s + 0.25) + np.sin(4 * np.pi * s) / (2 * np.pi)


def _Q(s):
    """Antiderivative of ``_P`` vanishing below ``-1/4``."""
    s = np.asarray(s, dtype=float)
    c = np.clip(s, -0.25, 0.25)
    mid = (c + 0.25) ** 2 - (np.cos(4 * np.pi * c) + 1.0) / (8 * np.pi ** 2)
    return np.where(s > 0.25, s, mid)


class SmoothKernel:
    """``iota^s_gamma(u) = f(u / gamma) / gamma`` on the torus."""

    def __init__(self, gamma: float):
        if not 0 < gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        self.gamma = gamma

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        d = (u + 0.5) % 1.0 - 0.5
        return base_profile(d / self.gamma) / self.gamma


@dataclass(frozen=True)
class SmoothField:
    """Convolution of atoms and uniform cells with ``iota^s_gamma``.

    ``atoms``/``atom_mass`` are point masses; ``cells`` (m, 2) intervals
    carrying ``cell_density``. Values and box integrals are exact.
    """

    gamma: float
    atoms: np.ndarray
    atom_mass: np.ndarray
    cells: np.ndarray
    cell_density: np.ndarray

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        g = self.gamma
        flat = u.reshape(-1)[:, None]
        out = np.zeros(flat.shape[0])
        for j in (-1.0, 0.0, 1.0):
            if self.atoms.size:
                out += (base_profile((flat - self.atoms - j) / g) / g * self.atom_mass).sum(axis=1)
            if self.cells.size:
                l, r = self.cells[:, 0] + j, self.cells[:, 1] + j
                out += ((_P((flat - l) / g) - _P((flat - r) / g)) * self.cell_density).sum(axis=1)
        return out.reshape(u.shape)

    def integral(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        shape = np.broadcast(a, b).shape
        A = np.broadcast_to(a, shape).reshape(-1)[:, None]
        B = np.broadcast_to(b, shape).reshape(-1)[:, None]
        g = self.gamma
        out = np.zeros(A.shape[0])
        for j in (-1.0, 0.0, 1.0):
            if self.atoms.size:
                x = self.atoms + j
                out += ((_P((B - x) / g) - _P((A - x) / g)) * self.atom_mass).sum(axis=1)
            if self.cells.size:
                l, r = self.cells[:, 0] + j, self.cells[:, 1] + j
                q = (_Q((B - l) / g) - _Q((B - r) / g) - _Q((A - l) / g) + _Q((A - r) / g))
                out += (g * q * self.cell_density).sum(axis=1)
        return out.reshape(shape)

    def to_density(self, m: int) -> DensityField:
        edges = np.arange(m + 1) / m
        return DensityField(self.integral(edges[:-1], edges[1:]) * m)


def convolve_smooth(source, gamma: float) -> SmoothField:
    """``source * iota^s_gamma`` as a continuous field."""
    if isinstance(source, EmpiricalMeasure):
        atoms = source.atoms
        return SmoothField(gamma, atoms, np.full(atoms.size, 1.0 / source.n),
                           np.empty((0, 2)), np.empty(0))
    if isinstance(source, DensityField):
        edges = np.arange(source.m + 1) / source.m
        cells = np.stack((edges[:-1], edges[1:]), axis=1)
        return SmoothField(gamma, np.empty(0), np.empty(0), cells, source.values)
    raise TypeError(f"cannot mollify {type(source).__name__}")


# bond observables -------------------------------------------------------------

def g1(c: Configuration, x: int = 0) -> int:
    """``eta(x)(1 - eta(x+1))``."""
    n = c.n
    return int(c.occ[x % n]) * (1 - int(c.occ[(x + 1) % n]))


def g2(c: Configuration, x: int = 0) -> int:
    """``eta(x+1)(1 - eta(x))``."""
    n = c.n
    return int(c.occ[(x + 1) % n]) * (1 - int(c.occ[x % n]))


def g1_tilde(alpha, beta):
    return alpha * (1 - beta)


def g2_tilde(alpha, beta):
    return beta * (1 - alpha)
