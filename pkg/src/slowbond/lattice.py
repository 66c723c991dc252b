"""Exclusion process on the discrete torus with one slow bond.

Sites are ``0..N-1``; site ``-1`` is stored as ``N-1``. Bond ``x`` joins
sites ``x`` and ``x+1``, so bond ``N-1`` is the slow bond between ``-1``
and ``0``. Time is already diffusively rescaled (generator times N^2).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .fields import GL_NODES, GL_WEIGHTS, Perturbation, Profile

SYMMETRIC = "symmetric"
WEAKLY_ASYMMETRIC = "weakly_asymmetric"

# time nodes per unit horizon used to tabulate H for the compiled loop
DEFAULT_TIME_NODES = 2048


@dataclass(frozen=True)
class Configuration:
    occ: np.ndarray

    def __post_init__(self):
        occ = np.asarray(self.occ)
        if occ.ndim != 1:
            raise ValueError("configuration must be one-dimensional")
        if occ.size and not np.isin(occ, (0, 1)).all():
            raise ValueError("occupancies must be 0 or 1")
        object.__setattr__(self, "occ", occ.astype(np.uint8))

    @property
    def n(self) -> int:
        return self.occ.size

    @property
    def particles(self) -> int:
        return int(self.occ.sum())

    def __eq__(self, other):
        return isinstance(other, Configuration) and np.array_equal(self.occ, other.occ)

    def __hash__(self):
        return hash(self.occ.tobytes())


def bond_factor(n: int) -> np.ndarray:
    """Rate factors xi_x: 1 everywhere except 1/N on the slow bond."""
    xi = np.ones(n)
    xi[n - 1] = 1.0 / n
    return xi


@dataclass(frozen=True)
class DynamicsSpec:
    n: int
    horizon: float
    mode: str = SYMMETRIC
    perturbation: Perturbation | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("lattice needs at least 2 sites")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.mode not in (SYMMETRIC, WEAKLY_ASYMMETRIC):
            raise ValueError(f"unknown mode {self.mode!r}")
        if (self.mode == WEAKLY_ASYMMETRIC) != (self.perturbation is not None):
            raise ValueError("a perturbation is required exactly in weakly asymmetric mode")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    def with_seed(self, seed: int) -> "DynamicsSpec":
        return DynamicsSpec(self.n, self.horizon, self.mode, self.perturbation, seed)

    def to_dict(self) -> dict:
        d = {"n": self.n, "horizon": self.horizon, "mode": self.mode, "seed": int(self.seed)}
        if self.perturbation is not None:
            d["perturbation"] = {"name": self.perturbation.name, **self.perturbation.params}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DynamicsSpec":
        from .fields import make_field

        pert = None
        if d.get("perturbation") is not None:
            p = dict(d["perturbation"])
            pert = make_field(p.pop("name"), **p)
        return cls(int(d["n"]), float(d["horizon"]), d.get("mode", SYMMETRIC), pert,
                   int(d.get("seed", 0)))


@dataclass
class Trajectory:
    spec: DynamicsSpec
    initial: Configuration
    event_times: np.ndarray
    event_bonds: np.ndarray
    observe_at: np.ndarray
    snapshots: np.ndarray  # (len(observe_at), N) uint8
    final: Configuration
    n_events: int
    n_proposals: int
    recorded: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def events(self):
        return list(zip(self.event_times.tolist(), self.event_bonds.tolist()))

    def snapshot(self, i: int) -> Configuration:
        return Configuration(self.snapshots[i])


def exchange(c: Configuration, x: int) -> Configuration:
    n = c.n
    if not 0 <= x < n:
        raise ValueError(f"bond {x} outside 0..{n - 1}")
    occ = c.occ.copy()
    y = (x + 1) % n
    occ[x], occ[y] = occ[y], occ[x]
    return Configuration(occ)


def bond_rate(c: Configuration, x: int, t: float, spec: DynamicsSpec) -> float:
    """Jump rate across bond ``x`` at time ``t`` (including the N^2 speed-up)."""
    if not 0.0 <= t <= spec.horizon:
        raise ValueError(f"time {t} outside [0, {spec.horizon}]")
    n = c.n
    y = (x + 1) % n
    base = n * n * (1.0 / n if x == n - 1 else 1.0)
    a, b = int(c.occ[x]), int(c.occ[y])
    if spec.mode == SYMMETRIC:
        return base * float(a != b)
    H = spec.perturbation
    d = float(H(t, y / n) - H(t, x / n))
    return base * (np.exp(d) * a * (1 - b) + np.exp(-d) * b * (1 - a))


def initial_from_profile(gamma: Profile, n: int) -> Configuration:
    """Deterministic configuration from cumulative rounding of ``gamma``.

    ``occ[x] = floor(N F((x+1)/N)) - floor(N F(x/N))`` with ``F`` the
    cumulative integral of ``gamma``.
    """
    left = np.arange(n) / n
    nodes = left[:, None] + GL_NODES[None, :] / n
    vals = np.asarray(gamma(nodes), dtype=float) * np.ones_like(nodes)
    if vals.min() < -1e-12 or vals.max() > 1 + 1e-12:
        raise ValueError("profile values must lie in [0, 1]")
    cell = (vals * GL_WEIGHTS).sum(axis=1) / n
    F = np.concatenate(([0.0], np.cumsum(cell)))
    k = np.floor(n * F + 1e-9)
    occ = np.diff(k)
    return Configuration(np.clip(occ, 0, 1).astype(np.uint8))


def bernoulli_configuration(gamma: Profile, n: int, rng: np.random.Generator) -> Configuration:
    """Product measure with marginals ``gamma(x/N)``."""
    p = np.clip(np.asarray(gamma(np.arange(n) / n), dtype=float) * np.ones(n), 0, 1)
    return Configuration((rng.random(n) < p).astype(np.uint8))


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Independent PCG64 stream for replica ``replica`` of run ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(replica)])))


@dataclass(frozen=True)
class LatticeTable:
    """``H`` tabulated at the sites ``x/N`` on a uniform time grid.

    The compiled loops see ``H`` through the cubic Hermite interpolant in
    time of these values and time derivatives.
    """

    h: np.ndarray
    ht: np.ndarray
    dtn: float

    @classmethod
    def build(cls, H: Perturbation | None, n: int, T: float,
              nodes: int | None = None) -> "LatticeTable":
        if H is None:
            z = np.zeros((2, n))
            return cls(z, z, T)
        K = nodes or max(64, int(np.ceil(DEFAULT_TIME_NODES * T)))
        t = np.linspace(0.0, T, K + 1)[:, None]
        u = (np.arange(n) / n)[None, :]
        ones = np.ones((K + 1, n))
        return cls(np.ascontiguousarray(H(t, u) * ones),
                   np.ascontiguousarray(H.dt(t, u) * ones), T / K)

    def delta_bound(self, T: float, sub: int = 8) -> np.ndarray:
        """Upper bound on ``|delta_N H_x(t)|`` over ``[0, T]`` per bond."""
        K = self.h.shape[0] - 1
        s = np.linspace(0.0, 1.0, sub + 1)[:, None, None]
        h0, h1 = self.h[:-1][None], self.h[1:][None]
        d0, d1 = self.ht[:-1][None] * self.dtn, self.ht[1:][None] * self.dtn
        vals = ((2 * s ** 3 - 3 * s ** 2 + 1) * h0 + (s ** 3 - 2 * s ** 2 + s) * d0
                + (-2 * s ** 3 + 3 * s ** 2) * h1 + (s ** 3 - s ** 2) * d1)
        vals = vals.reshape(-1, self.h.shape[1])
        delta = np.roll(vals, -1, axis=1) - vals
        assert K >= 1
        return np.abs(delta).max(axis=0)


def rate_caps(spec: DynamicsSpec, table: LatticeTable) -> tuple[np.ndarray, np.ndarray]:
    """Per-bond thinning bounds and lower bounds of the acceptance ratio."""
    n = spec.n
    base = n * n * bond_factor(n)
    if spec.mode == SYMMETRIC:
        return base, np.ones(n)
    # slack covers the interpolant between the sampled points
    d = table.delta_bound(spec.horizon) * (1 + 1e-3) + 1e-9
    return base * np.exp(d), np.exp(-2.0 * d)


def simulate(spec: DynamicsSpec, initial: Configuration, observe_at=(), *,
             record_events: bool = True, replica: int = 0,
             table: LatticeTable | None = None) -> Trajectory:
    """Sample one trajectory on ``[0, T]``; deterministic given seed and replica."""
    if initial.n != spec.n:
        raise ValueError("initial configuration has the wrong size")
    obs = np.asarray(observe_at, dtype=float).ravel()
    if obs.size and (np.any(np.diff(obs) < 0) or obs[0] < 0 or obs[-1] > spec.horizon):
        raise ValueError("observation times must be sorted within [0, T]")
    weak = spec.mode == WEAKLY_ASYMMETRIC
    if table is None:
        table = LatticeTable.build(spec.perturbation, spec.n, spec.horizon)
    caps, floor = rate_caps(spec, table)
    ev_t, ev_b, snaps, final, ne, props, violated = _kernels.simulate_kernel(
        initial.occ, float(spec.horizon), weak, table.h, table.ht, float(table.dtn),
        caps, floor, obs, replica_rng(spec.seed, replica), record_events)
    if violated:
        raise RuntimeError("thinning bound exceeded; increase the tabulation resolution")
    return Trajectory(spec, initial, ev_t, ev_b, obs, snaps, Configuration(final),
                      int(ne), int(props), record_events)


def thread_count(threads: int | None = None) -> int:
    if threads:
        return max(1, int(threads))
    env = os.environ.get("SLOWBOND_THREADS")
    return max(1, int(env)) if env else 1


def simulate_replicas(spec: DynamicsSpec, initial, replicas: int, observe_at=(), *,
                      record_events: bool = False, threads: int | None = None,
                      start: int = 0) -> list[Trajectory]:
    """Independent replicas ``start..start+replicas-1``.

    ``initial`` is a Configuration or a callable ``replica -> Configuration``.
    """
    table = LatticeTable.build(spec.perturbation, spec.n, spec.horizon)

    def one(r):
        init = initial(r) if callable(initial) else initial
        return simulate(spec, init, observe_at, record_events=record_events,
                        replica=r, table=table)

    ids = range(start, start + replicas)
    nthreads = thread_count(threads)
    if nthreads == 1:
        return [one(r) for r in ids]
    with ThreadPoolExecutor(nthreads) as pool:
        return list(pool.map(one, ids))
