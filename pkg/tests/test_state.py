import warnings

import numpy as np
import pytest

from scho import operators as ops
from scho.control import vortex_control
from scho.errors import ConfigurationError, SolverFailure
from scho.grid import ScalarField, VectorField, make_grid
from scho.linsolve import SolverOptions
from scho.random_fields import random_face, smooth_direction
from scho.rng import SplitMix64
from scho.state import (PhysParams, Snapshot, TimeGrid, ViscosityWarning, check_memory_budget,
                        energy, lipschitz_probe, solve_forward, step_cho, step_stokes)


def test_physparams_validation():
    with pytest.raises(ConfigurationError, match="physics.mu"):
        PhysParams(mu=0.0)
    with pytest.raises(ConfigurationError, match="physics.lambda"):
        PhysParams(lam=-1.0)
    with pytest.raises(ConfigurationError, match="physics.alpha"):
        PhysParams(alpha=-0.1)


def test_viscosity_warning_is_recorded():
    with pytest.warns(ViscosityWarning):
        p = PhysParams(mu=0.01, lam=0.02)
    assert p.warnings and "mu > lambda" in p.warnings[0]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert PhysParams().warnings == ()


def test_timegrid():
    tg = TimeGrid(0.3, 7)
    assert abs(tg.dt * tg.nt - tg.T) <= 1e-16
    assert tg.times()[-1] == pytest.approx(0.3)
    with pytest.raises(ConfigurationError):
        TimeGrid(1.0, 0)


# Cahn-Hilliard-Oono step -----------------------------------------------------

def test_cho_zero_fixed_point(grid8):
    u, w = step_cho(ScalarField(grid8), VectorField(grid8), PhysParams(), 1e-2)
    assert u.max_abs() == 0.0 and w.max_abs() == 0.0


def test_cho_uniform_reduction(grid8):
    p, dt, c = PhysParams(alpha=0.7), 1e-2, 0.6
    u, w = step_cho(ScalarField.constant(grid8, c), VectorField(grid8), p, dt)
    u_exp = c / (1 + p.alpha * dt)
    np.testing.assert_allclose(u.values, u_exp, rtol=1e-13)
    w_exp = ops.double_well_deriv(c) + p.stab_S * (u_exp - c)
    np.testing.assert_allclose(w.values, w_exp, rtol=1e-12)


def test_cho_mean_recurrence(rng):
    g = make_grid(16, 16)
    p, dt = PhysParams(alpha=0.5), 1e-3
    u = ScalarField(g, rng.uniform(-1, 1, (16, 16)))
    v = random_face(g, SplitMix64(3))
    u1, _ = step_cho(u, v, p, dt)
    assert abs(ops.mean_cc(u1) - ops.mean_cc(u) / (1 + p.alpha * dt)) <= 1e-11


# Stokes step -------------------------------------------------------------------

def test_stokes_zero_forcing(grid8):
    z = ScalarField(grid8)
    v, p = step_stokes(VectorField(grid8), z, ScalarField.constant(grid8, 0.3),
                       ScalarField.constant(grid8, 2.0), VectorField(grid8), PhysParams(), 1e-3)
    assert v.max_abs() == 0.0 and p.max_abs() == 0.0


def test_stokes_pressure_is_the_step_pressure(grid8):
    # the returned pressure balances the current forcing; a stale p_n is discarded
    p_n = ScalarField.from_function(grid8, lambda X, Y: np.cos(np.pi * X))
    v, p = step_stokes(VectorField(grid8), p_n, ScalarField(grid8), ScalarField(grid8),
                       VectorField(grid8), PhysParams(), 1e-3)
    assert v.max_abs() < 1e-15 and p.max_abs() < 1e-12


def test_stokes_gradient_forcing_goes_to_pressure(grid8):
    q = ScalarField.from_function(grid8, lambda X, Y: np.cos(np.pi * X) * np.cos(np.pi * Y))
    dt = 1e-2
    v, p = step_stokes(VectorField(grid8), ScalarField(grid8), ScalarField(grid8), ScalarField(grid8),
                       ops.grad_cc(q), PhysParams(), dt)
    assert v.max_abs() < 1e-12
    np.testing.assert_allclose(p.values, q.values - q.values.mean(), atol=1e-10)


def test_stokes_random_forcing_divergence_free():
    g = make_grid(24, 20)
    rng = SplitMix64(11)
    v = ScalarField(g)
    vel, _ = step_stokes(VectorField(g), v, ScalarField(g, rng.uniform((24, 20))),
                         ScalarField(g, rng.uniform((24, 20))), random_face(g, rng, no_slip=False),
                         PhysParams(), 1e-3, SolverOptions(tol=1e-10))
    assert ops.div_fc(vel).max_abs() <= 1e-8
    assert vel.boundary_normal_max() == 0.0


# forward solve -----------------------------------------------------------------

def test_uniform_decay_exact():
    g = make_grid(8, 8)
    p, tg = PhysParams(alpha=1.0), TimeGrid(1.0, 100)
    traj = solve_forward(ScalarField.constant(g, 0.7), VectorField(g), None, g, p, tg)
    means = np.array([d["mean_u"] for d in traj.diagnostics])
    expected = 0.7 * 1.01 ** -np.arange(101)
    assert np.max(np.abs(means - expected)) <= 1e-12
    # (1.01)^-100 = 0.369711...
    assert traj.snapshots[-1].u.values[0, 0] / 0.7 == pytest.approx(0.3697112123291701, rel=1e-12)


def test_zero_data_gives_zero_trajectory(grid8):
    traj = solve_forward(ScalarField(grid8), VectorField(grid8), None, grid8, PhysParams(),
                         TimeGrid(0.1, 10))
    for s in traj.snapshots:
        assert s.u.max_abs() == s.v.max_abs() == s.w.max_abs() == s.p.max_abs() == 0.0


def test_snapshot_zero_is_initial_data(grid8, rng):
    u0 = ScalarField(grid8, rng.uniform(-1, 1, (8, 8)))
    traj = solve_forward(u0, VectorField(grid8), None, grid8, PhysParams(), TimeGrid(0.01, 3))
    np.testing.assert_array_equal(traj.snapshots[0].u.values, u0.values)
    assert len(traj.snapshots) == 4 and len(traj.controls) == 3
    w0 = -1.0 * ops.laplace_cc(u0) + u0.map(ops.double_well_deriv)
    np.testing.assert_allclose(traj.snapshots[0].w.values, w0.values, rtol=1e-14)


def test_mean_decay_under_control():
    g = make_grid(16, 16)
    p, tg = PhysParams(alpha=0.3), TimeGrid(0.05, 50)
    u0 = ScalarField.from_function(g, lambda X, Y: 0.2 + np.tanh((X - 0.4) / 0.1))
    theta = smooth_direction(g, 50, SplitMix64(4))
    traj = solve_forward(u0, VectorField(g), theta, g, p, tg)
    m0 = ops.mean_cc(u0)
    for n, d in enumerate(traj.diagnostics):
        assert abs(d["mean_u"] - m0 / (1 + p.alpha * tg.dt) ** n) <= 1e-11


def test_step_failure_reports_index(grid8, rng):
    u0 = ScalarField(grid8, rng.uniform(-1, 1, (8, 8)))
    bad = SolverOptions(tol=1e-15, maxiter=1, precond="jacobi")
    with pytest.raises(SolverFailure, match="step 0"):
        solve_forward(u0, VectorField(grid8), None, grid8, PhysParams(), TimeGrid(0.01, 2), bad)


def test_control_length_checked(grid8):
    with pytest.raises(ConfigurationError):
        solve_forward(ScalarField(grid8), VectorField(grid8), [VectorField(grid8)], grid8,
                      PhysParams(), TimeGrid(0.1, 2))


def test_memory_guard():
    with pytest.raises(ConfigurationError):
        check_memory_budget(make_grid(128, 128), 10**5)
    check_memory_budget(make_grid(32, 32), 500)


# energy --------------------------------------------------------------------------

def test_energy_examples(grid8):
    p = PhysParams(lam=0.01)
    one = Snapshot(VectorField(grid8), ScalarField.constant(grid8, 1.0), ScalarField(grid8), ScalarField(grid8))
    zero = Snapshot(VectorField(grid8), ScalarField(grid8), ScalarField(grid8), ScalarField(grid8))
    assert energy(one, p) == 0.0
    assert energy(zero, p) == pytest.approx(0.0025, abs=1e-15)


def _energy_double_loop(v, u, lam, hx, hy):
    nx, ny = u.shape
    e = 0.0
    for i in range(nx + 1):
        for j in range(ny):
            wgt = hx * hy * (0.5 if i in (0, nx) else 1.0)
            gx = 0.0 if i in (0, nx) else (u[i, j] - u[i - 1, j]) / hx
            e += wgt * (0.5 * v[0][i, j] ** 2 + 0.5 * lam * gx**2)
    for i in range(nx):
        for j in range(ny + 1):
            wgt = hx * hy * (0.5 if j in (0, ny) else 1.0)
            gy = 0.0 if j in (0, ny) else (u[i, j] - u[i, j - 1]) / hy
            e += wgt * (0.5 * v[1][i, j] ** 2 + 0.5 * lam * gy**2)
    for i in range(nx):
        for j in range(ny):
            e += hx * hy * lam * 0.25 * (u[i, j] ** 2 - 1) ** 2
    return e


def test_energy_matches_brute_force(rng):
    g = make_grid(7, 9, 1.3, 0.8)
    u = ScalarField(g, rng.uniform(-1.5, 1.5, (7, 9)))
    v = VectorField(g, rng.standard_normal((8, 9)), rng.standard_normal((7, 10))).with_zero_boundary_normal()
    p = PhysParams(lam=0.03)
    e = energy(Snapshot(v, u, ScalarField(g), ScalarField(g)), p)
    ref = _energy_double_loop((v.xvals, v.yvals), u.values, 0.03, g.hx, g.hy)
    assert e == pytest.approx(ref, rel=1e-12)


# stability probe -----------------------------------------------------------------

def test_lipschitz_identical_controls(grid8):
    theta = vortex_control(grid8, 5)
    ratio, same = lipschitz_probe(theta, theta, ScalarField(grid8), VectorField(grid8), grid8,
                                  PhysParams(), TimeGrid(0.05, 5))
    assert ratio == 0.0 and same


def test_lipschitz_ratio_stable_under_scaling():
    g = make_grid(16, 16)
    tg = TimeGrid(0.05, 25)
    u0 = ScalarField.from_function(g, lambda X, Y: np.tanh((np.hypot(X - 0.5, Y - 0.5) - 0.25) / 0.05))
    theta = vortex_control(g, 25)
    h = smooth_direction(g, 25, SplitMix64(8))
    ratios = []
    for eps in (1e-1, 1e-2, 1e-3):
        other = [a + eps * b for a, b in zip(theta, h)]
        ratios.append(lipschitz_probe(theta, other, u0, VectorField(g), g, PhysParams(), tg)[0])
    assert max(ratios) <= 1.2 * min(ratios)
