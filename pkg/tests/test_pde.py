import csv

import numpy as np
import pytest

from slowbond.fields import (DensityField, constant_field, cosine_bump, interior_bump, linear_u,
                             sine_linear, sine_profile, smoothed_step, zero_field)
from slowbond.pde import CFL, exchange_flux, solve_perturbed, solve_symmetric, weak_residual


def test_constants_are_stationary():
    for c in (0.0, 0.3, 1.0):
        sol = solve_symmetric(DensityField.constant(c, 64), 0.2, n_obs=10)
        np.testing.assert_allclose(sol.snapshots, c, atol=1e-14)
    # a spatially constant field does not drive anything
    sol = solve_perturbed(DensityField.constant(0.4, 64), constant_field(2.0), 0.2, n_obs=10)
    np.testing.assert_allclose(sol.snapshots, 0.4, atol=1e-14)


def test_zero_field_reproduces_symmetric_solver(bump):
    a = solve_symmetric(bump, 0.05, 128, n_obs=20)
    b = solve_perturbed(bump, zero_field(), 0.05, 128, n_obs=20)
    np.testing.assert_allclose(a.snapshots, b.snapshots, atol=1e-13)
    np.testing.assert_allclose(a.cut_flux, b.cut_flux, atol=1e-13)


@pytest.mark.parametrize("perturbed", [False, True])
def test_mass_conserved(perturbed, rng):
    for _ in range(3):
        g = sine_profile(0.5, rng.uniform(0, 0.4), rng.uniform(0, 6))
        H = sine_linear(rng.uniform(-1, 1)) if perturbed else None
        sol = (solve_perturbed(g, H, 0.1, 128) if perturbed else solve_symmetric(g, 0.1, 128))
        assert np.abs(sol.masses - sol.masses[0]).max() <= 1e-10 * 0.1


def test_bounds_preserved_under_strong_drive(step):
    sol = solve_perturbed(step, sine_linear(3.0, 1.0, 5.0), 0.1, 128)
    assert sol.snapshots.min() >= -1e-12 and sol.snapshots.max() <= 1 + 1e-12


def test_schedule_and_input_validation(bump):
    with pytest.raises(ValueError):
        solve_symmetric(bump, 0.1, 64, dt=2 * CFL / 64 ** 2)
    with pytest.raises(ValueError):
        solve_symmetric(bump, 0.1)  # no grid size
    with pytest.raises(ValueError):
        solve_symmetric(DensityField.constant(1.2, 16), 0.1)
    with pytest.raises(ValueError):
        solve_symmetric(bump, 0.0, 16)
    sol = solve_symmetric(bump, 0.1, 32, n_obs=7)
    assert sol.times[0] == 0 and sol.times[-1] == pytest.approx(0.1)
    assert sol.dt <= CFL / 32 ** 2


def test_solution_accessors_and_csv(tmp_path, bump):
    sol = solve_symmetric(bump, 0.01, 16, n_obs=4)
    assert sol.at(sol.times[2]).values.tolist() == sol.snapshots[2].tolist()
    with pytest.raises(ValueError):
        sol.at(0.0033)
    path = tmp_path / "p.csv"
    sol.to_csv(path)
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "u", "rho"]
    assert len(rows) == 1 + sol.times.size * 16
    assert float(rows[-1][2]) == sol.snapshots[-1, -1]


def test_symmetric_cut_flux_is_fick(bump):
    sol = solve_symmetric(bump, 0.01, 64, n_obs=1)
    plus, minus = sol.sides()
    assert sol.cut_flux[0] == pytest.approx(minus[0] - plus[0])


def test_exchange_flux_reduces_to_fick():
    p, q = np.linspace(0, 1, 7), np.linspace(1, 0, 7)
    np.testing.assert_allclose(exchange_flux(p, q, 0.0), q - p, atol=1e-15)
    # pushing from 0- to 0+ increases the flux into 0+
    assert exchange_flux(0.5, 0.5, 1.0) > 0 > exchange_flux(0.5, 0.5, -1.0)


def test_weak_residual_trivial_cases(bump):
    const = solve_symmetric(DensityField.constant(0.6, 64), 0.05, n_obs=20)
    for G in (sine_linear(), linear_u(2.0), interior_bump()):
        assert weak_residual(const, G) <= 1e-10
    sol = solve_symmetric(bump, 0.05, 64, n_obs=20)
    one = constant_field(1.0)
    assert weak_residual(sol, one) == pytest.approx(abs(sol.masses[-1] - sol.masses[0]),
                                                    abs=1e-14)
    assert weak_residual(sol, one) <= 1e-10


def test_weak_residual_detects_wrong_equation(bump):
    # the symmetric solution does not solve the driven equation
    sol = solve_symmetric(bump, 0.05, 256, n_obs=100)
    H = sine_linear()
    assert weak_residual(sol, linear_u(), H) > 100 * weak_residual(sol, linear_u())


def test_l2_contraction(rng):
    g = smoothed_step()
    m, T = 128, 0.1
    a = DensityField.from_profile(g, m)
    bump = DensityField.from_profile(cosine_bump(0.0, 1.0, 0.3, 0.2), m).values
    b = DensityField(a.values + 1e-3 * bump / np.sqrt(np.mean(bump ** 2)) * 0.999)
    sa = solve_symmetric(a, T, n_obs=50)
    sb = solve_symmetric(b, T, n_obs=50)
    d = np.sqrt(np.mean((sa.snapshots - sb.snapshots) ** 2, axis=1))
    assert d[0] <= 1e-3
    fitted = np.max(np.log(d[1:] / d[0]) / sa.times[1:])
    assert fitted <= 10


def test_discrete_boundary_relation_first_order(bump):
    errs = []
    for m in (64, 128, 256, 512):
        sol = solve_symmetric(smoothed_step(0.8, 0.2, 0.9, 0.05), 0.02, m, n_obs=4)
        rho = sol.snapshots[-1]
        plus, minus = sol.sides()
        errs.append(abs(m * (rho[1] - rho[0]) - (plus[-1] - minus[-1])))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios >= 1.6)
    assert errs[-1] < 0.05
