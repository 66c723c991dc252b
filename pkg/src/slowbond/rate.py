"""Large-deviation functionals of density paths on the cut torus.

Quadrature: midpoint rule on cell centres in space, trapezoid over the
path's time instants. ``plus``/``minus`` are the side values at ``0+``
(``u = 0``) and ``0-`` (``u = 1``).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fields import Perturbation, cell_centers, chi, random_test_field, side_values, zero_field
from .pde import PdeSolution


def psi(x):
    return np.expm1(x) - x


def gamma_fn(y):
    """``1 - e^y + y e^y``, the primitive of ``s e^s`` vanishing at 0."""
    y = np.asarray(y, dtype=float)
    return y * np.exp(y) - np.expm1(y)


@dataclass
class PathMeasure:
    """A density path sampled at ``times`` on ``m`` cell centres."""

    times: np.ndarray
    values: np.ndarray  # (nt, m)
    plus: np.ndarray
    minus: np.ndarray
    grad: np.ndarray | None = None  # d_u rho at the centres, if known exactly
    absolutely_continuous: bool = True
    finite_energy: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.plus = np.asarray(self.plus, dtype=float)
        self.minus = np.asarray(self.minus, dtype=float)
        nt = self.times.size
        if self.values.shape[0] != nt or self.plus.shape != (nt,) or self.minus.shape != (nt,):
            raise ValueError("side values missing or misaligned with the time grid")
        if nt < 2:
            raise ValueError("a path needs at least two time instants")
        tol = 1e-9
        if self.values.min() < -tol or self.values.max() > 1 + tol:
            raise ValueError("path density must lie in [0, 1]")

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def centers(self) -> np.ndarray:
        return cell_centers(self.m)

    @classmethod
    def from_solution(cls, sol: PdeSolution) -> "PathMeasure":
        plus, minus = sol.sides()
        return cls(sol.times, sol.snapshots, plus, minus, meta={"source": "pde"})

    @classmethod
    def from_snapshots(cls, times, values) -> "PathMeasure":
        values = np.atleast_2d(values)
        plus, minus = side_values(values)
        return cls(times, values, plus, minus, meta={"source": "grid"})

    @classmethod
    def from_function(cls, rho: Callable, T: float, nt: int, m: int,
                      rho_u: Callable | None = None) -> "PathMeasure":
        """Point samples of an analytic path ``rho(t, u)``; sides are the
        exact limits ``rho(t, 0)`` and ``rho(t, 1)``."""
        t = np.linspace(0.0, T, nt)
        u = cell_centers(m)
        ones = np.ones((nt, m))
        vals = rho(t[:, None], u[None, :]) * ones
        grad = None if rho_u is None else rho_u(t[:, None], u[None, :]) * ones
        return cls(t, vals, rho(t, np.zeros(nt)) * np.ones(nt),
                   rho(t, np.ones(nt)) * np.ones(nt), grad, meta={"source": "analytic"})

    def gradient(self) -> np.ndarray:
        if self.grad is not None:
            return self.grad
        return np.gradient(self.values, self.centers, axis=1)

    def mix(self, other: "PathMeasure", theta: float) -> "PathMeasure":
        """``theta * self + (1 - theta) * other`` on a shared grid."""
        if self.values.shape != other.values.shape or not np.allclose(self.times, other.times):
            raise ValueError("paths must share their grid")
        g = None
        if self.grad is not None and other.grad is not None:
            g = theta * self.grad + (1 - theta) * other.grad
        return PathMeasure(self.times, theta * self.values + (1 - theta) * other.values,
                           theta * self.plus + (1 - theta) * other.plus,
                           theta * self.minus + (1 - theta) * other.minus, g)

    def interpolate(self, eps: float) -> "PathMeasure":
        """``eps * 1 + (1 - 2 eps) * self + eps * 0``, bounded away from 0 and 1."""
        if not 0 <= eps <= 0.5:
            raise ValueError("eps must lie in [0, 1/2]")
        a = 1 - 2 * eps
        return PathMeasure(self.times, eps + a * self.values, eps + a * self.plus,
                           eps + a * self.minus, None if self.grad is None else a * self.grad)


def constant_path(c: float, like: PathMeasure) -> PathMeasure:
    nt = like.times.size
    return PathMeasure(like.times, np.full(like.values.shape, float(c)), np.full(nt, float(c)),
                       np.full(nt, float(c)), np.zeros(like.values.shape))


def _trap(y, t) -> float:
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def _grid(pi: PathMeasure):
    return pi.times[:, None], pi.centers[None, :], np.ones_like(pi.values)


def ell(pi: PathMeasure, H: Perturbation) -> float:
    """The part of the functional linear in ``H``."""
    t = pi.times
    tt, u, ones = _grid(pi)
    rho = pi.values
    zeros, onev = np.zeros_like(t), np.ones_like(t)
    end = (rho[-1] * H(t[-1], u[0]) * ones[0]).mean() - (rho[0] * H(t[0], u[0]) * ones[0]).mean()
    bulk = (rho * (H.dt(tt, u) + H.duu(tt, u)) * ones).mean(axis=1)
    edge = pi.plus * H.du(t, zeros) - pi.minus * H.du(t, onev)
    cut = (pi.plus - pi.minus) * H.jump(t)
    return float(end - _trap(bulk + edge - cut, t))


def _cut_weights(pi: PathMeasure):
    """Rates of crossings ``0- -> 0+`` and ``0+ -> 0-`` (without the H factor)."""
    return pi.minus * (1 - pi.plus), pi.plus * (1 - pi.minus)


def phi(pi: PathMeasure, H: Perturbation) -> float:
    """The convex part: mobility-weighted ``|d_u H|^2`` plus the cut terms."""
    t = pi.times
    tt, u, ones = _grid(pi)
    grad = (chi(pi.values) * (H.du(tt, u) * ones) ** 2).mean(axis=1)
    fwd, bwd = _cut_weights(pi)
    d = H.jump(t)
    return _trap(grad + fwd * psi(d) + bwd * psi(-d), t)


def j_hat(pi: PathMeasure, H: Perturbation) -> float:
    return ell(pi, H) - phi(pi, H)


def j_functional(pi: PathMeasure, H: Perturbation) -> float:
    """``j_hat`` on finite-energy paths, ``+inf`` otherwise."""
    return j_hat(pi, H) if pi.finite_energy else float("inf")


def _check_support(pi: PathMeasure, H: Perturbation, tol: float = 1e-12):
    t = pi.times
    at_ends = np.concatenate((H(t, np.zeros_like(t)), H(t, np.ones_like(t))))
    if np.abs(at_ends).max() > tol:
        raise ValueError("test field must vanish near the cut (compact support in (0, 1))")


def energy_of(pi: PathMeasure, H: Perturbation) -> float:
    """``<<d_u H, rho>> - 2 <<H, H>>`` for ``H`` supported inside ``(0, 1)``."""
    _check_support(pi, H)
    t = pi.times
    tt, u, ones = _grid(pi)
    h = H(tt, u) * ones
    val = (H.du(tt, u) * ones * pi.values).mean(axis=1) - 2.0 * (h * h).mean(axis=1)
    return _trap(val, t)


def energy(pi: PathMeasure) -> float:
    """``(1/8) <<d_u rho, d_u rho>>``, the value of the supremum over test fields.

    Attained at ``-d_u rho / 4`` when the gradient has compact support in
    ``(0, 1)``.
    """
    g = pi.gradient()
    return _trap((g * g).mean(axis=1), pi.times) / 8.0


def energy_maximizer(rho_u: Callable, rho_uu: Callable) -> Perturbation:
    """``H* = -d_u rho / 4`` from analytic derivatives of the path."""

    def nan(t, u):
        raise NotImplementedError("the time derivative of the maximizer is not needed")

    return Perturbation(lambda t, u: -0.25 * rho_u(t, u), lambda t, u: -0.25 * rho_uu(t, u),
                        nan, nan, name="energy_maximizer")


@dataclass(frozen=True)
class RateBreakdown:
    grad_term: float
    plus_term: float
    minus_term: float

    @property
    def total(self) -> float:
        return self.grad_term + self.plus_term + self.minus_term

    def to_dict(self) -> dict:
        return {**asdict(self), "total": self.total}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def rate_closed_form(pi: PathMeasure, H: Perturbation) -> RateBreakdown:
    """Value of the rate on the solution driven by ``H``."""
    t = pi.times
    tt, u, ones = _grid(pi)
    grad = (chi(pi.values) * (H.du(tt, u) * ones) ** 2).mean(axis=1)
    fwd, bwd = _cut_weights(pi)
    d = H.jump(t)
    return RateBreakdown(_trap(grad, t), _trap(fwd * gamma_fn(d), t),
                         _trap(bwd * gamma_fn(-d), t))


# finite-family lower bounds ------------------------------------------------------

def random_family(extra: Sequence[Perturbation] = (), count: int = 20, seed: int = 0,
                scale: float = 1.0) -> list[Perturbation]:
    """Zero, the given fields, and ``count`` seeded random polynomial-trig fields."""
    rng = np.random.default_rng(seed)
    fam = [zero_field(), *extra]
    fam += [random_test_field(rng, scale=scale) for _ in range(count)]
    return fam


def family_rate(pi: PathMeasure, family: Sequence[Perturbation]) -> tuple[float, int]:
    """``max_G j_hat(pi, G)`` over the family and the maximizing index."""
    vals = [j_hat(pi, G) for G in family]
    k = int(np.argmax(vals))
    return float(vals[k]), k


@dataclass(frozen=True)
class ConvexityResult:
    passed: bool
    margin: float
    applicable: bool
    lhs: float = 0.0
    rhs: float = 0.0


def sides_ordered(rho: PathMeasure, lam: PathMeasure, tol: float = 1e-12) -> bool:
    return bool(np.all((rho.plus - lam.plus) * (rho.minus - lam.minus) >= -tol))


def rate_convex_combination_check(rho: PathMeasure, lam: PathMeasure, theta: float,
                                  family: Sequence[Perturbation],
                                  tol: float = 1e-10) -> ConvexityResult:
    """``I(theta rho + (1-theta) lam) <= theta I(rho) + (1-theta) I(lam)`` with
    ``I`` replaced by its finite-family lower bound."""
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    if not sides_ordered(rho, lam):
        return ConvexityResult(False, float("nan"), False)
    lhs, _ = family_rate(rho.mix(lam, theta), family)
    rhs = theta * family_rate(rho, family)[0] + (1 - theta) * family_rate(lam, family)[0]
    margin = rhs - lhs
    return ConvexityResult(bool(margin >= -tol), float(margin), True, lhs, rhs)


@dataclass(frozen=True)
class InterpolationResult:
    eps: tuple
    rates: tuple
    base_rate: float
    passed: bool
    margin: float


def interpolation_check(pi: PathMeasure, family: Sequence[Perturbation],
                        eps_values=(0.2, 0.1, 0.05, 0.02, 0.01, 0.001),
                        reference: float | None = None,
                        margin: float = 1e-3) -> InterpolationResult:
    """Finite-family rates of ``eps * 1 + (1-2 eps) pi + eps * 0`` as eps decreases.

    Passes when the value at the smallest eps is within ``margin`` above
    ``reference`` (default: the family rate of ``pi`` itself).
    """
    base = family_rate(pi, family)[0] if reference is None else float(reference)
    rates = tuple(family_rate(pi.interpolate(e), family)[0] for e in eps_values)
    gap = base + margin - rates[-1]
    return InterpolationResult(tuple(eps_values), rates, base, bool(gap >= 0), float(gap))
