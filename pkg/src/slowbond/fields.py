"""Macroscopic objects on the torus cut at the slow bond.

The torus is opened at the slow bond and identified with ``[0, 1]``:
``u = 0`` is the right side ``0+`` and ``u = 1`` is the left side ``0-``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Profile = Callable[[np.ndarray], np.ndarray]

# 4-point Gauss-Legendre on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
GL_NODES = 0.5 * (_GL_X + 1.0)
GL_WEIGHTS = 0.5 * _GL_W


def chi(a):
    """Mobility a(1-a)."""
    return a * (1.0 - a)


@dataclass(frozen=True)
class DensityField:
    """Cell averages of a density on ``m`` uniform cells of the cut torus.

    Side values at the cut are linear extrapolations of the two cells
    adjacent to each end, clipped to ``[0, 1]``.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("DensityField needs a 1-d array with at least 2 cells")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def centers(self) -> np.ndarray:
        return cell_centers(self.m)

    @property
    def side_plus(self) -> float:
        return float(side_values(self.values[None, :])[0][0])

    @property
    def side_minus(self) -> float:
        return float(side_values(self.values[None, :])[1][0])

    @property
    def mass(self) -> float:
        return float(self.values.mean())

    def integral(self, a, b):
        """Exact integral of the piecewise-constant field over ``[a, b]``."""
        return _cumulative(self.values, b) - _cumulative(self.values, a)

    def is_bounded(self, tol: float = 1e-12) -> bool:
        return bool(self.values.min() >= -tol and self.values.max() <= 1.0 + tol)

    @classmethod
    def from_profile(cls, gamma: Profile, m: int) -> "DensityField":
        """Cell averages of ``gamma`` by 4-point Gauss quadrature per cell."""
        left = np.arange(m) / m
        nodes = left[:, None] + GL_NODES[None, :] / m
        vals = np.asarray(gamma(nodes), dtype=float) * np.ones_like(nodes)
        return cls((vals * GL_WEIGHTS).sum(axis=1))

    @classmethod
    def constant(cls, c: float, m: int) -> "DensityField":
        return cls(np.full(m, float(c)))


def cell_centers(m: int) -> np.ndarray:
    return (np.arange(m) + 0.5) / m


def side_values(values: np.ndarray):
    """Extrapolated side values ``(rho(0+), rho(0-))`` for rows of cell data."""
    values = np.atleast_2d(values)
    plus = np.clip(1.5 * values[:, 0] - 0.5 * values[:, 1], 0.0, 1.0)
    minus = np.clip(1.5 * values[:, -1] - 0.5 * values[:, -2], 0.0, 1.0)
    return plus, minus


def _cumulative(values, u):
    m = values.size
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    csum = np.concatenate(([0.0], np.cumsum(values) / m))
    j = np.minimum((u * m).astype(int), m - 1)
    return csum[j] + (u - j / m) * values[j]


@dataclass(frozen=True)
class Perturbation:
    """Smooth field ``H(t, u)`` on ``[0, T] x [0, 1]``, right-continuous at 0.

    All evaluators broadcast over numpy arrays. The jump across the cut is
    ``H(t, 0+) - H(t, 0-) = H(t, 0) - H(t, 1)``.
    """

    value: Callable
    du: Callable
    dt: Callable
    duu: Callable
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, t, u):
        return self.value(t, u)

    def jump(self, t):
        t = np.asarray(t, dtype=float)
        return self.value(t, np.zeros_like(t)) - self.value(t, np.ones_like(t))

    def __add__(self, other: "Perturbation") -> "Perturbation":
        return combine(1.0, self, 1.0, other)

    def scaled(self, a: float) -> "Perturbation":
        return combine(a, self, 0.0, self)

    def sup_norms(self, T: float, nt: int = 65, nu: int = 513) -> dict:
        """Sup norms of H and its derivatives sampled on a grid."""
        t, u = np.meshgrid(np.linspace(0, T, nt), np.linspace(0, 1, nu), indexing="ij")
        ones = np.ones_like(t)
        return {
            "H": float(np.abs(self.value(t, u) * ones).max()),
            "du": float(np.abs(self.du(t, u) * ones).max()),
            "dt": float(np.abs(self.dt(t, u) * ones).max()),
            "duu": float(np.abs(self.duu(t, u) * ones).max()),
        }

    def consistency_error(self, T: float, h: float = 1e-5) -> float:
        """Largest mismatch between the derivative evaluators and centred
        finite differences of the evaluators one order below, relative to
        the field's scale."""
        t, u = np.meshgrid(np.linspace(h, T - h, 9), np.linspace(h, 1 - h, 33), indexing="ij")
        ones = np.ones_like(t)
        fd_u = (self.value(t, u + h) - self.value(t, u - h)) / (2 * h)
        fd_t = (self.value(t + h, u) - self.value(t - h, u)) / (2 * h)
        fd_uu = (self.du(t, u + h) - self.du(t, u - h)) / (2 * h)
        errs = [
            np.abs(fd_u - self.du(t, u) * ones).max(),
            np.abs(fd_t - self.dt(t, u) * ones).max(),
            np.abs(fd_uu - self.duu(t, u) * ones).max(),
        ]
        scale = max(1.0, max(self.sup_norms(T).values()))
        return float(max(errs) / scale)


def combine(a: float, f: Perturbation, b: float, g: Perturbation) -> Perturbation:
    """The field ``a*f + b*g``."""
    return Perturbation(
        value=lambda t, u: a * f.value(t, u) + b * g.value(t, u),
        du=lambda t, u: a * f.du(t, u) + b * g.du(t, u),
        dt=lambda t, u: a * f.dt(t, u) + b * g.dt(t, u),
        duu=lambda t, u: a * f.duu(t, u) + b * g.duu(t, u),
        name="combination",
    )


def _zero(t, u):
    return np.zeros(np.broadcast(np.asarray(t), np.asarray(u)).shape)


def zero_field() -> Perturbation:
    return Perturbation(_zero, _zero, _zero, _zero, name="zero")


def constant_field(c: float = 1.0) -> Perturbation:
    return Perturbation(lambda t, u: c + _zero(t, u), _zero, _zero, _zero,
                        name="constant", params={"c": c})


def time_offset_field(coeffs) -> Perturbation:
    """Spatially constant ``c(t) = sum_k coeffs[k] t^k``."""
    p = np.polynomial.Polynomial(coeffs)
    dp = p.deriv()
    return Perturbation(lambda t, u: p(t) + _zero(t, u), _zero,
                        lambda t, u: dp(t) + _zero(t, u), _zero,
                        name="time_offset", params={"coeffs": list(coeffs)})


def linear_u(amp: float = 1.0) -> Perturbation:
    """``H = amp * u``; jump across the cut is ``-amp``."""
    return Perturbation(
        value=lambda t, u: amp * u + _zero(t, u),
        du=lambda t, u: amp + _zero(t, u),
        dt=_zero,
        duu=_zero,
        name="linear_u", params={"amp": amp},
    )


def sine_linear(amp: float = 1.0, wave: float = 0.3, freq: float = 2.0) -> Perturbation:
    """``H = amp*u + wave*sin(2 pi u) cos(freq t)``; jump ``-amp``."""
    k = 2 * np.pi
    return Perturbation(
        value=lambda t, u: amp * u + wave * np.sin(k * u) * np.cos(freq * t),
        du=lambda t, u: amp + wave * k * np.cos(k * u) * np.cos(freq * t),
        dt=lambda t, u: -wave * freq * np.sin(k * u) * np.sin(freq * t),
        duu=lambda t, u: -wave * k * k * np.sin(k * u) * np.cos(freq * t),
        name="sine_linear", params={"amp": amp, "wave": wave, "freq": freq},
    )


def interior_bump(amp: float = 1.0, lo: float = 0.25, hi: float = 0.75,
                  freq: float = 0.0) -> Perturbation:
    """``amp * b(u) * cos(freq t)`` with ``b = sin^4`` bump on ``[lo, hi]``.

    Vanishes with its first three derivatives outside ``(lo, hi)``, so the
    jump and the boundary derivatives at the cut are zero.
    """
    w = hi - lo
    k = np.pi / w

    def inside(u):
        return (u > lo) & (u < hi)

    def b(u):
        s = np.sin(k * (u - lo))
        return np.where(inside(u), s ** 4, 0.0)

    def db(u):
        x = k * (u - lo)
        return np.where(inside(u), 4 * k * np.sin(x) ** 3 * np.cos(x), 0.0)

    def d2b(u):
        x = k * (u - lo)
        s, c = np.sin(x), np.cos(x)
        return np.where(inside(u), 4 * k * k * (3 * s * s * c * c - s ** 4), 0.0)

    return Perturbation(
        value=lambda t, u: amp * b(u) * np.cos(freq * t),
        du=lambda t, u: amp * db(u) * np.cos(freq * t),
        dt=lambda t, u: -amp * freq * b(u) * np.sin(freq * t),
        duu=lambda t, u: amp * d2b(u) * np.cos(freq * t),
        name="interior_bump", params={"amp": amp, "lo": lo, "hi": hi, "freq": freq},
    )


def poly_trig(coeffs: np.ndarray, freq: float = 1.0) -> Perturbation:
    """``sum_{k,l} c[k,l,0] u^k (1-u)^l cos(freq t) + c[k,l,1] u^k (1-u)^l sin(freq t)``.

    ``coeffs`` has shape ``(K, L, 2)``; this is the random test family.
    """
    c = np.asarray(coeffs, dtype=float)
    K, L, _ = c.shape

    def basis(u, order):
        u = np.asarray(u, dtype=float)
        out = np.zeros((K, L) + u.shape)
        for k in range(K):
            for l in range(L):
                out[k, l] = _mono_deriv(u, k, l, order)
        return out

    def tfac(t, order):
        t = np.asarray(t, dtype=float)
        if order == 0:
            return np.cos(freq * t), np.sin(freq * t)
        return -freq * np.sin(freq * t), freq * np.cos(freq * t)

    def make(uorder, torder):
        def ev(t, u):
            B = basis(u, uorder)
            ct, st = tfac(t, torder)
            a = np.tensordot(c[..., 0], B, axes=([0, 1], [0, 1]))
            s = np.tensordot(c[..., 1], B, axes=([0, 1], [0, 1]))
            return a * ct + s * st
        return ev

    return Perturbation(make(0, 0), make(1, 0), make(0, 1), make(2, 0),
                        name="poly_trig", params={"coeffs": c.tolist(), "freq": freq})


def _mono_deriv(u, k, l, order):
    """``d^order/du^order`` of ``u^k (1-u)^l``."""
    p = np.polynomial.Polynomial([1.0])
    for _ in range(k):
        p = p * np.polynomial.Polynomial([0.0, 1.0])
    for _ in range(l):
        p = p * np.polynomial.Polynomial([1.0, -1.0])
    return p.deriv(order)(u) if order else p(u)


def random_test_field(rng: np.random.Generator, K: int = 3, L: int = 3,
                      scale: float = 1.0, freq: float | None = None) -> Perturbation:
    """Seeded draw from the ``u^k (1-u)^l trig(t)`` family."""
    coeffs = rng.uniform(-scale, scale, size=(K, L, 2))
    if freq is None:
        freq = float(rng.uniform(0.5, 3.0))
    return poly_trig(coeffs, freq)


# Named density profiles -----------------------------------------------------

def constant_profile(value: float = 0.5) -> Profile:
    return lambda u: value + 0.0 * np.asarray(u, dtype=float)


def smoothed_step(hi: float = 0.8, lo: float = 0.2, center: float = 0.5,
                  width: float = 0.05) -> Profile:
    """``hi`` left of ``center``, ``lo`` right of it, tanh transition."""
    return lambda u: lo + (hi - lo) * 0.5 * (1.0 - np.tanh((np.asarray(u) - center) / width))


def cosine_bump(base: float = 0.5, amp: float = 0.3, center: float = 0.5,
                width: float = 0.5) -> Profile:
    def g(u):
        u = np.asarray(u, dtype=float)
        x = (u - center) / width
        return base + amp * np.where(np.abs(x) < 0.5, np.cos(np.pi * x) ** 2, 0.0)
    return g


def sine_profile(mean: float = 0.5, amp: float = 0.2, phase: float = 0.0) -> Profile:
    return lambda u: mean + amp * np.sin(2 * np.pi * np.asarray(u) + phase)


def linear_profile(left: float = 0.7, right: float = 0.3) -> Profile:
    """Linear from ``left`` at ``0+`` to ``right`` at ``0-``; jumps at the cut."""
    return lambda u: left + (right - left) * np.asarray(u, dtype=float)


PROFILES = {
    "constant": constant_profile,
    "smoothed_step": smoothed_step,
    "cosine_bump": cosine_bump,
    "sine": sine_profile,
    "linear": linear_profile,
}

FIELDS = {
    "zero": lambda: zero_field(),
    "constant": constant_field,
    "linear_u": linear_u,
    "sine_linear": sine_linear,
    "interior_bump": interior_bump,
}


def make_profile(name: str, **params) -> Profile:
    try:
        return PROFILES[name](**params)
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; known: {sorted(PROFILES)}") from None


def make_field(name: str, **params) -> Perturbation:
    try:
        return FIELDS[name](**params)
    except KeyError:
        raise ValueError(f"unknown field {name!r}; known: {sorted(FIELDS)}") from None
