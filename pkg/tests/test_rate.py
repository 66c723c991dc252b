import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowbond.fields import (constant_field, cosine_bump, interior_bump, linear_u, random_test_field,
                             sine_linear, time_offset_field, zero_field)
from slowbond.pde import solve_perturbed, solve_symmetric
from slowbond.rate import (PathMeasure, RateBreakdown, constant_path, ell, energy, energy_of,
                           family_rate, gamma_fn, interpolation_check, j_functional, j_hat, phi,
                           psi, random_family, rate_closed_form, rate_convex_combination_check)

E = np.e


@pytest.fixture(scope="module")
def paths():
    g, H, T = cosine_bump(), sine_linear(), 0.05
    rho = PathMeasure.from_solution(solve_perturbed(g, H, T, 256, n_obs=400))
    lam = PathMeasure.from_solution(solve_symmetric(g, T, 256, n_obs=400))
    return rho, lam, H


def half_path(T=1.0, nt=11, m=32):
    return PathMeasure.from_function(lambda t, u: 0.5 + 0.0 * t * u, T, nt, m)


# scalar helpers ----------------------------------------------------------------

def test_gamma_and_psi_nonnegative():
    y = np.linspace(-5, 5, 1001)
    assert np.all(gamma_fn(y) >= 0) and np.all(psi(y) >= 0)
    assert gamma_fn(0.0) == 0 and psi(0.0) == 0
    nz = y[np.abs(y) > 1e-6]
    assert np.all(gamma_fn(nz) > 0) and np.all(psi(nz) > 0)
    assert gamma_fn(1.0) == pytest.approx(1.0)
    assert gamma_fn(-1.0) == pytest.approx(1 - 2 / E)


def test_gamma_is_primitive_of_s_exp_s():
    from scipy import integrate
    for y in (-3.0, -0.5, 0.7, 2.0):
        val, _ = integrate.quad(lambda s: s * np.exp(s), 0, y)
        assert gamma_fn(y) == pytest.approx(val, rel=1e-12)


# worked examples ------------------------------------------------------------------

def test_phi_example():
    # rho = 1/2, H = u, T = 1: chi term 1/4 plus (1/4) psi(-1) + (1/4) psi(1)
    want = 0.25 + 0.25 * psi(-1.0) + 0.25 * psi(1.0)
    assert want == pytest.approx(0.25 + 0.25 / E + 0.25 * (E - 2))
    assert phi(half_path(), linear_u(1.0)) == pytest.approx(want, abs=1e-12)
    assert want == pytest.approx(0.5215403174, abs=1e-10)


def test_closed_form_example():
    b = rate_closed_form(half_path(), linear_u(1.0))
    assert b.grad_term == pytest.approx(0.25)
    assert b.plus_term == pytest.approx(0.25 * gamma_fn(-1.0))
    assert b.minus_term == pytest.approx(0.25)
    assert b.total == pytest.approx(0.5660602794, abs=1e-10)


def test_zero_field_has_zero_rate(paths):
    rho, _, _ = paths
    b = rate_closed_form(rho, zero_field())
    assert b.total == 0.0 and j_hat(rho, zero_field()) == pytest.approx(0.0, abs=1e-14)


def test_constant_fields(paths):
    rho, lam, _ = paths
    for c in (-1.0, 0.5, 4.0):
        G = constant_field(c)
        assert phi(rho, G) == 0.0
        assert ell(rho, G) == pytest.approx(0.0, abs=1e-12)
        assert j_hat(lam, G) == pytest.approx(0.0, abs=1e-10)


def test_constant_path_energy_zero(paths):
    rho, _, _ = paths
    assert energy(constant_path(0.3, rho)) == 0.0
    assert energy_of(constant_path(0.3, rho), interior_bump()) <= 0.0


# structure --------------------------------------------------------------------------

def test_ell_is_linear(paths, rng):
    rho, _, _ = paths
    F, G = random_test_field(rng), random_test_field(rng)
    a, b = 0.7, -1.3
    mix = F.scaled(a) + G.scaled(b)
    assert ell(rho, mix) == pytest.approx(a * ell(rho, F) + b * ell(rho, G), abs=1e-12)


def test_phi_convex_and_nonnegative(paths, rng):
    rho, _, _ = paths
    for _ in range(10):
        F, G = random_test_field(rng), random_test_field(rng)
        assert phi(rho, F) >= 0
        for th in (0.2, 0.5, 0.9):
            lhs = phi(rho, F.scaled(th) + G.scaled(1 - th))
            assert lhs <= th * phi(rho, F) + (1 - th) * phi(rho, G) + 1e-12


def test_gauge_invariance(paths):
    rho, lam, H = paths
    c = time_offset_field([0.3, -2.0, 5.0, 7.0])
    for pi in (rho, lam):
        assert phi(pi, H + c) == pytest.approx(phi(pi, H), abs=1e-14)
        assert j_hat(pi, H + c) == pytest.approx(j_hat(pi, H), abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 3.0))
def test_breakdown_terms_nonnegative(seed, scale):
    pi = PathMeasure.from_function(
        lambda t, u: 0.5 + 0.3 * np.sin(2 * np.pi * u + t), 0.2, 9, 32)
    H = random_test_field(np.random.default_rng(seed), scale=scale)
    b = rate_closed_form(pi, H)
    assert min(b.grad_term, b.plus_term, b.minus_term) >= 0 and b.total >= 0
    assert phi(pi, H) >= 0


def test_breakdown_json():
    b = RateBreakdown(0.1, 0.2, 0.3)
    d = json.loads(b.to_json())
    assert d == {"grad_term": 0.1, "plus_term": 0.2, "minus_term": 0.3,
                 "total": pytest.approx(0.6)}


def test_path_validation():
    t = np.linspace(0, 1, 3)
    with pytest.raises(ValueError):
        PathMeasure(t, np.full((3, 4), 0.5), np.full(2, 0.5), np.full(3, 0.5))
    with pytest.raises(ValueError):
        PathMeasure(t, np.full((3, 4), 1.5), np.full(3, 0.5), np.full(3, 0.5))
    with pytest.raises(ValueError):
        PathMeasure(t[:1], np.full((1, 4), 0.5), np.full(1, 0.5), np.full(1, 0.5))
    with pytest.raises(ValueError):
        half_path().interpolate(0.7)


def test_infinite_energy_gate():
    p = half_path()
    assert j_functional(p, linear_u()) == j_hat(p, linear_u())
    p.finite_energy = False
    assert j_functional(p, linear_u()) == float("inf")


def test_energy_requires_compact_support():
    with pytest.raises(ValueError):
        energy_of(half_path(), linear_u())


# finite-family checks -----------------------------------------------------------------

def test_sup_attained_at_driving_field(paths):
    rho, _, H = paths
    top = j_hat(rho, H)
    assert top == pytest.approx(rate_closed_form(rho, H).total, abs=1e-3)
    fam = random_family(count=20, seed=1)
    assert max(j_hat(rho, G) for G in fam) <= top + 1e-6
    # scaled copies of the driving field do worse
    for a in (0.5, 0.9, 1.1, 2.0):
        assert j_hat(rho, H.scaled(a)) < top


def test_hydrodynamic_path_nonpositive(paths):
    _, lam, _ = paths
    assert all(j_hat(lam, G) <= 1e-6 for G in random_family(count=20, seed=2))


def test_convexity_check_cases(paths):
    rho, lam, H = paths
    fam = random_family([H], count=5, seed=3)
    same = rate_convex_combination_check(rho, rho, 0.4, fam)
    assert same.applicable and same.passed and same.margin == pytest.approx(0.0, abs=1e-12)
    low = constant_path(0.5 * min(rho.plus.min(), rho.minus.min()), rho)
    res = rate_convex_combination_check(rho, low, 0.5, fam)
    assert res.applicable and res.passed
    with pytest.raises(ValueError):
        rate_convex_combination_check(rho, low, 1.5, fam)


def test_convexity_inapplicable_when_sides_cross():
    a = PathMeasure.from_function(lambda t, u: 0.3 + 0.4 * u + 0 * t, 0.1, 5, 16)
    b = PathMeasure.from_function(lambda t, u: 0.5 + 0 * t * u, 0.1, 5, 16)
    res = rate_convex_combination_check(a, b, 0.5, [zero_field()])
    assert not res.applicable and not res.passed


def test_family_rate_nonnegative(paths):
    rho, _, _ = paths
    val, k = family_rate(rho, random_family(count=3))
    assert val >= 0.0 and 0 <= k < 4


def test_interpolation_limits(paths):
    rho, _, H = paths
    res = interpolation_check(rho, [zero_field(), H], eps_values=(0.1, 0.01, 0.001))
    assert res.rates[-1] == pytest.approx(j_hat(rho, H), abs=2e-3)
    assert res.passed
