import numpy as np
import pytest

from slowbond import _kernels
from slowbond.fields import constant_profile, sine_linear, smoothed_step, zero_field
from slowbond.lattice import (SYMMETRIC, WEAKLY_ASYMMETRIC, Configuration, DynamicsSpec,
                              LatticeTable, bernoulli_configuration, bond_factor, bond_rate,
                              exchange, initial_from_profile, rate_caps, replica_rng, simulate,
                              simulate_replicas)


def cfg(*bits):
    return Configuration(np.array(bits))


# exchange / rates ---------------------------------------------------------------

@pytest.mark.parametrize("occ, x, expected", [
    ([1, 0, 0, 0], 0, [0, 1, 0, 0]),
    ([1, 1, 0, 0], 0, [1, 1, 0, 0]),
    ([0, 0, 0, 1], 3, [1, 0, 0, 0]),
])
def test_exchange_examples(occ, x, expected):
    assert exchange(cfg(*occ), x) == cfg(*expected)


def test_exchange_rejects_bad_bond():
    with pytest.raises(ValueError):
        exchange(cfg(1, 0, 0, 0), 4)


def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration(np.array([0, 2, 1]))
    with pytest.raises(ValueError):
        Configuration(np.zeros((2, 2)))


def test_bond_factor_single_slow_bond():
    xi = bond_factor(10)
    assert np.count_nonzero(xi == 0.1) == 1 and xi[9] == 0.1
    assert np.all(xi[:9] == 1.0)


def test_bond_rate_examples():
    spec = DynamicsSpec(4, 1.0)
    assert bond_rate(cfg(1, 0, 0, 0), 0, 0.5, spec) == 16
    # active slow bond: N^2 / N = N
    assert bond_rate(cfg(0, 0, 0, 1), 3, 0.5, spec) == 4
    # sites 3 and 0 both occupied: the slow bond is blocked
    assert bond_rate(cfg(1, 0, 0, 1), 3, 0.5, spec) == 0
    assert bond_rate(cfg(1, 1, 0, 0), 0, 0.5, spec) == 0
    with pytest.raises(ValueError):
        bond_rate(cfg(1, 0, 0, 0), 0, 2.0, spec)


def test_weak_rates_with_zero_field_match_symmetric():
    sym = DynamicsSpec(6, 1.0)
    weak = DynamicsSpec(6, 1.0, WEAKLY_ASYMMETRIC, zero_field())
    r = np.random.default_rng(0)
    for _ in range(50):
        c = Configuration(r.integers(0, 2, 6))
        for x in range(6):
            assert bond_rate(c, x, 0.3, weak) == bond_rate(c, x, 0.3, sym)


def test_weak_rate_formula_and_slow_bond_jump():
    n, H = 8, sine_linear()
    spec = DynamicsSpec(n, 0.5, WEAKLY_ASYMMETRIC, H)
    c = cfg(1, 0, 0, 0, 0, 0, 0, 0)
    d = H(0.2, 1 / n) - H(0.2, 0.0)
    assert bond_rate(c, 0, 0.2, spec) == pytest.approx(n * n * np.exp(d))
    # site N-1 is vacant, site 0 occupied: the particle jumps backwards across the cut
    d_slow = H(0.2, 0.0) - H(0.2, (n - 1) / n)
    assert bond_rate(c, n - 1, 0.2, spec) == pytest.approx(n * np.exp(-d_slow))


def test_spec_validation():
    with pytest.raises(ValueError):
        DynamicsSpec(4, 0.0)
    with pytest.raises(ValueError):
        DynamicsSpec(4, 1.0, WEAKLY_ASYMMETRIC, None)
    with pytest.raises(ValueError):
        DynamicsSpec(4, 1.0, SYMMETRIC, sine_linear())
    with pytest.raises(ValueError):
        DynamicsSpec(4, 1.0, seed=-1)


def test_spec_roundtrip():
    s = DynamicsSpec(16, 0.5, WEAKLY_ASYMMETRIC, sine_linear(0.5), 7)
    t = DynamicsSpec.from_dict(s.to_dict())
    assert t.to_dict() == s.to_dict()


# initial data ------------------------------------------------------------------

def test_initial_from_profile_examples():
    assert initial_from_profile(constant_profile(1.0), 8) == Configuration(np.ones(8))
    assert initial_from_profile(constant_profile(0.0), 8) == Configuration(np.zeros(8))
    assert initial_from_profile(constant_profile(0.5), 8) == cfg(0, 1, 0, 1, 0, 1, 0, 1)


def test_initial_from_profile_counts_mass():
    g = smoothed_step()
    for n in (50, 128, 1000):
        c = initial_from_profile(g, n)
        assert abs(c.particles - n * 0.5) <= 1


def test_initial_from_profile_rejects_out_of_range():
    with pytest.raises(ValueError):
        initial_from_profile(constant_profile(1.5), 8)


def test_bernoulli_configuration_mean():
    c = bernoulli_configuration(constant_profile(0.3), 100000, np.random.default_rng(1))
    assert abs(c.particles / 100000 - 0.3) < 0.005


# simulation: deterministic properties -------------------------------------------

@pytest.mark.parametrize("bits", [0, 1])
def test_frozen_configurations_have_no_events(bits):
    for mode, H in ((SYMMETRIC, None), (WEAKLY_ASYMMETRIC, sine_linear())):
        spec = DynamicsSpec(16, 0.3, mode, H)
        tr = simulate(spec, Configuration(np.full(16, bits)), [0.0, 0.3])
        assert tr.n_events == 0 and tr.event_times.size == 0
        assert np.all(tr.snapshots == bits)


def test_seed_determinism():
    spec = DynamicsSpec(32, 0.05, WEAKLY_ASYMMETRIC, sine_linear(), seed=99)
    init = initial_from_profile(smoothed_step(), 32)
    a = simulate(spec, init, [0.01, 0.05], replica=3)
    b = simulate(spec, init, [0.01, 0.05], replica=3)
    c = simulate(spec, init, [0.01, 0.05], replica=4)
    assert np.array_equal(a.event_times, b.event_times)
    assert np.array_equal(a.event_bonds, b.event_bonds)
    assert np.array_equal(a.snapshots, b.snapshots)
    assert not np.array_equal(a.event_times[:10], c.event_times[:10])


def test_replicas_independent_of_thread_count():
    spec = DynamicsSpec(16, 0.02, seed=5)
    init = initial_from_profile(smoothed_step(), 16)
    one = simulate_replicas(spec, init, 6, [0.02], threads=1)
    many = simulate_replicas(spec, init, 6, [0.02], threads=3)
    for a, b in zip(one, many):
        assert np.array_equal(a.snapshots, b.snapshots) and a.n_events == b.n_events


def _replay(tr):
    occ = tr.initial.occ.copy()
    n = occ.size
    for x in tr.event_bonds:
        y = (x + 1) % n
        assert occ[x] != occ[y]
        occ[x], occ[y] = occ[y], occ[x]
    return occ


@pytest.mark.parametrize("mode", [SYMMETRIC, WEAKLY_ASYMMETRIC])
def test_trajectory_invariants(mode):
    H = sine_linear() if mode == WEAKLY_ASYMMETRIC else None
    spec = DynamicsSpec(24, 0.05, mode, H, seed=1)
    init = initial_from_profile(smoothed_step(), 24)
    obs = np.linspace(0, 0.05, 6)
    tr = simulate(spec, init, obs)
    assert np.all(np.diff(tr.event_times) > 0)
    assert tr.event_times[0] >= 0 and tr.event_times[-1] <= 0.05
    assert np.all(tr.snapshots.sum(axis=1) == init.particles)
    assert np.array_equal(_replay(tr), tr.final.occ)
    assert np.array_equal(tr.snapshots[-1], tr.final.occ)
    assert tr.n_proposals >= tr.n_events == tr.event_times.size


def test_observation_times_validated():
    spec = DynamicsSpec(8, 0.1)
    init = initial_from_profile(smoothed_step(), 8)
    with pytest.raises(ValueError):
        simulate(spec, init, [0.05, 0.01])
    with pytest.raises(ValueError):
        simulate(spec, init, [0.2])
    with pytest.raises(ValueError):
        simulate(spec, Configuration(np.zeros(4)), [])


def test_rate_caps_bound_the_true_rates():
    n, T, H = 32, 0.2, sine_linear(2.0)
    spec = DynamicsSpec(n, T, WEAKLY_ASYMMETRIC, H)
    caps, floor = rate_caps(spec, LatticeTable.build(H, n, T))
    t = np.linspace(0, T, 401)[:, None]
    h = H(t, np.arange(n)[None, :] / n)
    d = np.abs(np.roll(h, -1, axis=1) - h).max(axis=0)
    assert np.all(caps >= n * n * bond_factor(n) * np.exp(d))
    # accepting below the floor is only valid if the floor never exceeds the ratio
    assert np.all(floor <= np.exp(-2 * d))


def test_table_reproduces_field():
    n, T, H = 16, 0.3, sine_linear()
    tab = LatticeTable.build(H, n, T)
    for t in (0.0, 0.0123, 0.17, 0.3):
        for x in (0, 5, 15):
            v = _kernels.hermite_eval(tab.h, tab.ht, tab.dtn, t, x)
            assert v == pytest.approx(H(t, x / n), abs=1e-10)


def test_first_event_picks_slow_bond_with_its_rate_share():
    # occupied site 0 alone: bond 0 has rate N^2, the slow bond rate N
    n, M = 8, 4000
    occ = np.zeros(n, dtype=np.uint8)
    occ[0] = 1
    trajs = simulate_replicas(DynamicsSpec(n, 0.5, seed=17), Configuration(occ), M,
                              record_events=True)
    first = np.array([t.event_bonds[0] for t in trajs])
    assert set(np.unique(first)) == {0, n - 1}
    p = n / (n * n + n)
    se = np.sqrt(p * (1 - p) / M)
    assert abs(np.mean(first == n - 1) - p) <= 3 * se
    # waiting time to the first event is exponential with rate N^2 + N
    wait = np.array([t.event_times[0] for t in trajs])
    assert abs(wait.mean() * (n * n + n) - 1) <= 3 / np.sqrt(M)


# statistical checks ------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_bernoulli_product_is_invariant(alpha):
    n, T, M = 16, 0.1, 1000
    spec = DynamicsSpec(n, T, seed=11)
    g = constant_profile(alpha)
    init = lambda r: bernoulli_configuration(g, n, replica_rng(1000 + int(alpha * 10), r))
    trajs = simulate_replicas(spec, init, M, [T])
    final = np.array([tr.snapshots[-1] for tr in trajs], dtype=float)
    se = np.sqrt(alpha * (1 - alpha) / M)
    for site in (0, n - 1):
        assert abs(final[:, site].mean() - alpha) <= 3 * se


def test_zero_field_thinning_matches_symmetric_law():
    n, T, M = 32, 0.05, 1000
    init = initial_from_profile(smoothed_step(), n)
    sym = simulate_replicas(DynamicsSpec(n, T, seed=21), init, M, [T])
    weak = simulate_replicas(DynamicsSpec(n, T, WEAKLY_ASYMMETRIC, zero_field(), seed=22),
                             init, M, [T])

    def agree(a, b):
        a, b = np.asarray(a, float), np.asarray(b, float)
        se = np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
        return abs(a.mean() - b.mean()) <= 3 * se

    assert agree([t.n_events for t in sym], [t.n_events for t in weak])
    for site in (0, n // 4, n - 1):
        assert agree([t.snapshots[-1, site] for t in sym], [t.snapshots[-1, site] for t in weak])


def test_slow_bond_crossings_scale_like_n():
    T, M = 0.2, 60
    means = {}
    for n in (64, 128):
        occ = np.zeros(n, dtype=np.uint8)
        occ[n // 2:] = 1  # left of the slow bond full, right empty
        trajs = simulate_replicas(DynamicsSpec(n, T, seed=3), Configuration(occ), M,
                                  record_events=True)
        means[n] = np.mean([np.count_nonzero(t.event_bonds == n - 1) for t in trajs])
        assert 0.05 <= means[n] / (n * T) <= 1.0
        assert means[n] / (n * n * T) < 0.02
    assert 1.4 <= means[128] / means[64] <= 2.8


def _uniformized_counts(n, T, H, init, reps, dt, seed):
    """Independent discrete-time chain: per step each replica proposes with
    probability ``total_cap * dt`` on a bond drawn proportionally to its cap
    and accepts with probability ``rate / cap`` at the current time."""
    xi = bond_factor(n)
    if H is None:
        cap = n * n * xi
    else:
        t = np.linspace(0, T, 2001)[:, None]
        h = H(t, np.arange(n)[None, :] / n) * np.ones((t.size, n))
        d = np.abs(np.roll(h, -1, axis=1) - h).max(axis=0)
        cap = n * n * xi * np.exp(1.05 * d + 1e-6)
    total = cap.sum()
    p_bond = cap / total
    assert total * dt <= 1
    r = np.random.default_rng(seed)
    occ = np.tile(init.occ.astype(np.int8), (reps, 1))
    counts = np.zeros(reps, dtype=np.int64)
    rows = np.arange(reps)
    for k in range(int(round(T / dt))):
        t = (k + 0.5) * dt
        go = r.random(reps) < total * dt
        if not go.any():
            continue
        idx = rows[go]
        x = r.choice(n, size=idx.size, p=p_bond)
        y = (x + 1) % n
        a, b = occ[idx, x], occ[idx, y]
        if H is None:
            rate = n * n * xi[x] * (a != b)
        else:
            d = H(t, y / n) - H(t, x / n)
            rate = n * n * xi[x] * (np.exp(d) * a * (1 - b) + np.exp(-d) * b * (1 - a))
        acc = r.random(idx.size) < rate / cap[x]
        ia, xa, ya = idx[acc], x[acc], y[acc]
        occ[ia, xa], occ[ia, ya] = occ[ia, ya], occ[ia, xa]
        counts[ia] += 1
    return counts


@pytest.mark.slow
@pytest.mark.parametrize("weak", [False, True])
def test_event_counts_match_uniformized_oracle(weak):
    n, T, reps = 64, 0.05, 100
    H = sine_linear() if weak else None
    init = initial_from_profile(smoothed_step(), n)
    spec = DynamicsSpec(n, T, WEAKLY_ASYMMETRIC if weak else SYMMETRIC, H, seed=8)
    sim = np.array([t.n_events for t in simulate_replicas(spec, init, reps)], dtype=float)
    ora = _uniformized_counts(n, T, H, init, reps, 1e-6, seed=9).astype(float)
    se = np.sqrt(sim.var(ddof=1) / reps + ora.var(ddof=1) / reps)
    assert abs(sim.mean() - ora.mean()) <= 3 * se
