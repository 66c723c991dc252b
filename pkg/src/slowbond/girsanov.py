"""Log-likelihood ratio of the perturbed dynamics against the symmetric one.

Along a trajectory with the full event record,

    log dP^H/dP = N<pi_T, H_T> - N<pi_0, H_0> - N int <pi_t, d_t H_t> dt
                  - N^2 int sum_x xi_x [g1_x (e^{delta_x} - 1) + g2_x (e^{-delta_x} - 1)] dt,

with ``delta_x = H(t, (x+1)/N) - H(t, x/N)``. ``H`` enters through the
same time-tabulated interpolant used by the simulator.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .fields import Perturbation
from .lattice import (Configuration, DynamicsSpec, LatticeTable, Trajectory, WEAKLY_ASYMMETRIC,
                      simulate, thread_count)


DIRECT = "direct"
COMPENSATED = "compensated"


@dataclass(frozen=True)
class GirsanovAccumulator:
    boundary_term: float
    time_integral: float
    bulk_compensator: float
    slow_compensator: float
    jump_sum: float
    bulk_entropy: float = 0.0
    slow_entropy: float = 0.0

    @property
    def jump_compensators(self) -> float:
        return self.bulk_compensator + self.slow_compensator

    @property
    def total(self) -> float:
        return self.boundary_term - self.time_integral - self.jump_compensators

    @property
    def total_from_jumps(self) -> float:
        """Same quantity written as a sum over jumps minus compensators."""
        return self.jump_sum - self.jump_compensators

    @property
    def compensated(self) -> float:
        """Integrated rate of ``log dP^H/dP`` under the perturbed law.

        Equals ``total`` minus a mean-zero martingale when the trajectory is
        drawn from the perturbed law, so both have the same expectation.
        """
        return self.bulk_entropy + self.slow_entropy

    def swapped(self) -> "GirsanovAccumulator":
        """Terms of the reverse derivative ``log dP/dP^H``."""
        return GirsanovAccumulator(-self.boundary_term, -self.time_integral,
                                   -self.bulk_compensator, -self.slow_compensator, -self.jump_sum,
                                   -self.bulk_entropy, -self.slow_entropy)


def log_rn(traj: Trajectory, H: Perturbation, table: LatticeTable | None = None) -> GirsanovAccumulator:
    if not traj.recorded:
        raise ValueError("trajectory was simulated without its event record")
    spec = traj.spec
    if table is None:
        table = LatticeTable.build(H, spec.n, spec.horizon)
    out = _kernels.log_rn_kernel(
        traj.initial.occ, traj.event_times, traj.event_bonds, float(spec.horizon),
        table.h, table.ht, float(table.dtn))
    return GirsanovAccumulator(*(float(v) for v in out))


@dataclass(frozen=True)
class EntropyEstimate:
    n: int
    replicas: int
    mean_per_site: float
    std_error: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def sample_accumulators(spec: DynamicsSpec, H: Perturbation, initial, replicas: int,
                        threads: int | None = None, start: int = 0) -> list[GirsanovAccumulator]:
    """Log-likelihood terms on independent replicas simulated under ``spec``.

    ``initial`` is a Configuration or a callable ``replica -> Configuration``.
    Each replica is simulated and reduced in the same worker, so event
    records never accumulate in memory.
    """
    if replicas < 1:
        raise ValueError("at least one replica is required")
    sim_table = LatticeTable.build(spec.perturbation, spec.n, spec.horizon)
    rn_table = LatticeTable.build(H, spec.n, spec.horizon)

    def one(r):
        init = initial(r) if callable(initial) else initial
        traj = simulate(spec, init, record_events=True, replica=r, table=sim_table)
        return log_rn(traj, H, rn_table)

    ids = range(start, start + replicas)
    k = thread_count(threads)
    if k == 1:
        return [one(r) for r in ids]
    with ThreadPoolExecutor(k) as pool:
        return list(pool.map(one, ids))


def sample_log_rn(spec: DynamicsSpec, H: Perturbation, initial, replicas: int,
                  threads: int | None = None, start: int = 0) -> np.ndarray:
    return np.array([a.total for a in sample_accumulators(spec, H, initial, replicas,
                                                          threads, start)])


def _estimate(n: int, vals: np.ndarray) -> EntropyEstimate:
    vals = vals / n
    se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return EntropyEstimate(n, int(vals.size), float(vals.mean()), se)


def entropy_estimates(spec: DynamicsSpec, H: Perturbation, replicas: int, initial,
                      threads: int | None = None) -> dict[str, EntropyEstimate]:
    """Both estimators of ``(1/N) E^H[log dP^H/dP]`` from one set of replicas.

    ``direct`` averages the log-likelihood itself. ``compensated`` averages
    its integrated rate under the perturbed law; the two differ by a
    mean-zero martingale, so they share the mean while the second has far
    smaller variance.
    """
    if spec.mode != WEAKLY_ASYMMETRIC or spec.perturbation is None:
        raise ValueError("the entropy is estimated under the weakly asymmetric law")
    accs = sample_accumulators(spec, H, initial, replicas, threads)
    return {
        DIRECT: _estimate(spec.n, np.array([a.total for a in accs])),
        COMPENSATED: _estimate(spec.n, np.array([a.compensated for a in accs])),
    }


def estimate_entropy(spec: DynamicsSpec, H: Perturbation, replicas: int,
                     initial: Configuration, threads: int | None = None,
                     estimator: str = DIRECT) -> EntropyEstimate:
    """Monte Carlo estimate of ``(1/N) E^H[log dP^H/dP]`` under the perturbed law."""
    if estimator not in (DIRECT, COMPENSATED):
        raise ValueError(f"unknown estimator {estimator!r}")
    if replicas < 1:
        raise ValueError("at least one replica is required")
    return entropy_estimates(spec, H, replicas, initial, threads)[estimator]


def c_bound(H: Perturbation, T: float) -> float:
    """Deterministic envelope of ``|log dP^H/dP| / N`` valid for every path.

    Boundary terms cost ``2|H|``, the time integral ``T|d_t H|``; summing the
    bulk compensator by parts leaves ``|d_uu H|`` plus two end terms of size
    ``|d_u H|`` and a quadratic remainder; the slow bond contributes at most
    ``e^{2|H|}`` per unit time.
    """
    s = H.sup_norms(T)
    h, hu, ht, huu = s["H"], s["du"], s["dt"], s["duu"]
    per_time = ht + huu + 2 * hu + 0.5 * hu * hu * np.exp(hu) + np.exp(2 * h)
    return float(2 * h + T * per_time)
