import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scho import control as ctl
from scho import operators as ops
from scho.adjoint import solve_adjoint
from scho.errors import ConfigurationError, PreconditionError
from scho.grid import ScalarField, VectorField, make_grid
from scho.random_fields import random_face, smooth_direction
from scho.rng import SplitMix64
from scho.state import PhysParams, TimeGrid, solve_forward

NT = 10


@pytest.fixture(scope="module")
def setup():
    g = make_grid(12, 12)
    tg = TimeGrid(0.2, NT)
    p = PhysParams(mu=0.05, lam=0.01)
    u0 = ScalarField.from_function(g, lambda X, Y: -np.tanh((np.hypot(X - 0.4, Y - 0.5) - 0.2) / 0.07))
    return g, tg, p, u0, VectorField(g)


def _const_seq(g, c, n=NT):
    return [VectorField.constant(g, c) for _ in range(n)]


# cost ------------------------------------------------------------------------

def test_cost_zero_for_perfect_tracking(setup):
    g, tg, p, u0, v0 = setup
    traj = solve_forward(u0, v0, None, g, p, tg)
    cp = ctl.CostParams(0.5, [s.v for s in traj.snapshots], [s.u for s in traj.snapshots])
    assert ctl.cost(traj, traj.controls, cp) == 0.0


def test_cost_of_constant_control():
    g = make_grid(8, 8)
    tg = TimeGrid(1.0, 4)
    traj = solve_forward(ScalarField(g), VectorField(g), None, g, PhysParams(), tg)
    v_d, u_d = ctl.constant_targets(g, 4)
    cp = ctl.CostParams(0.1, v_d, u_d)
    assert ctl.cost(traj, _const_seq(g, 1.0, 4), cp) == pytest.approx(0.1, rel=1e-14)
    assert ctl.cost_terms(traj, _const_seq(g, 1.0, 4), cp)[:2] == (0.0, 0.0)


def test_cost_matches_brute_force(setup):
    g, tg, p, u0, v0 = setup
    rng = SplitMix64(21)
    theta = [random_face(g, rng) for _ in range(NT)]
    traj = solve_forward(u0, v0, theta, g, p, tg)
    v_d = [random_face(g, rng) for _ in range(NT + 1)]
    u_d = [ScalarField(g, rng.uniform((12, 12))) for _ in range(NT + 1)]
    beta = 0.37
    J = ctl.cost(traj, theta, ctl.CostParams(beta, v_d, u_d))
    hx, hy, dt = g.hx, g.hy, tg.dt
    wx = np.full((13, 12), hx * hy)
    wx[[0, -1], :] *= 0.5
    wy = np.full((12, 13), hx * hy)
    wy[:, [0, -1]] *= 0.5
    ref = 0.0
    for n in range(NT):
        s = traj.snapshots[n]
        ref += dt * 0.5 * (np.sum(wx * (s.v.xvals - v_d[n].xvals) ** 2) + np.sum(wy * (s.v.yvals - v_d[n].yvals) ** 2))
        ref += dt * 0.5 * np.sum(hx * hy * (s.u.values - u_d[n].values) ** 2)
        ref += dt * 0.5 * beta * (np.sum(wx * theta[n].xvals ** 2) + np.sum(wy * theta[n].yvals ** 2))
    assert J == pytest.approx(ref, rel=1e-12)


def test_cost_length_mismatch(setup):
    g, tg, p, u0, v0 = setup
    traj = solve_forward(u0, v0, None, g, p, tg)
    v_d, u_d = ctl.constant_targets(g, NT)
    with pytest.raises(PreconditionError):
        ctl.cost(traj, _const_seq(g, 0.0, NT - 1), ctl.CostParams(1.0, v_d, u_d))


def test_costparams_validation(setup):
    g = setup[0]
    v_d, u_d = ctl.constant_targets(g, NT)
    with pytest.raises(ConfigurationError):
        ctl.CostParams(0.0, v_d, u_d)
    with pytest.raises(ConfigurationError):
        ctl.CostParams(1.0, v_d, u_d, 1.0, -1.0)


# gradient --------------------------------------------------------------------

def test_gradient_reduces_to_adjoint(setup):
    g, tg, p, u0, v0 = setup
    theta = ctl.vortex_control(g, NT, 0.5)
    traj = solve_forward(u0, v0, theta, g, p, tg)
    v_d, u_d = ctl.constant_targets(g, NT, 0.2)
    adj = solve_adjoint(traj, v_d, u_d)
    for a, b in zip(ctl.gradient(adj, theta, 0.0), adj.gamma1):
        assert (a - b).max_abs() == 0.0
    for a, b in zip(ctl.gradient(adj, _const_seq(g, 0.0), 3.0), adj.gamma1):
        assert (a - b).max_abs() == 0.0
    for a, b, t in zip(ctl.gradient(adj, theta, 0.25), adj.gamma1, theta):
        np.testing.assert_array_equal(a.xvals, b.xvals + 0.25 * t.xvals)


def test_directional_derivative(setup):
    g, tg, p, u0, v0 = setup
    v_d, u_d = ctl.constant_targets(g, NT, 0.1, 0.2)
    cp = ctl.CostParams(1e-2, v_d, u_d)
    h = smooth_direction(g, NT, SplitMix64(31))
    gc = ctl.gradient_check(ctl.vortex_control(g, NT), h, u0, v0, g, p, tg, cp)
    assert gc.best_error <= 0.02
    assert gc.rel_errors[-2] < gc.rel_errors[0]


# projection ------------------------------------------------------------------

def test_project_box_examples(setup):
    g = setup[0]
    v_d, u_d = ctl.constant_targets(g, 1)
    cp = ctl.CostParams(1.0, v_d, u_d, -1.0, 1.0)
    inside = [VectorField.constant(g, 0.3, -0.9)]
    assert (ctl.project_box(inside, cp)[0] - inside[0]).max_abs() == 0.0
    out = ctl.project_box([VectorField.constant(g, 5.0, -7.0)], cp)[0]
    assert np.all(out.xvals == 1.0) and np.all(out.yvals == -1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 0), st.floats(0, 3), st.integers(0, 2**63))
def test_project_box_idempotent(lo, hi, seed):
    g = make_grid(5, 4)
    v_d, u_d = ctl.constant_targets(g, 2)
    cp = ctl.CostParams(1.0, v_d, u_d, lo, hi)
    rng = SplitMix64(seed)
    theta = [random_face(g, rng, -5, 5, no_slip=False) for _ in range(2)]
    once = ctl.project_box(theta, cp)
    twice = ctl.project_box(once, cp)
    for a, b in zip(once, twice):
        assert (a - b).max_abs() == 0.0
        assert a.xvals.min() >= lo and a.xvals.max() <= hi


def test_field_valued_bounds(setup):
    g = setup[0]
    v_d, u_d = ctl.constant_targets(g, 2)
    lo = VectorField.constant(g, -0.5, -2.0)
    hi = VectorField.constant(g, 0.5, 2.0)
    cp = ctl.CostParams(1.0, v_d, u_d, lo, hi)
    out = ctl.project_box([VectorField.constant(g, 3.0, 3.0)] * 2, cp)
    assert np.all(out[0].xvals == 0.5) and np.all(out[1].yvals == 2.0)


def test_dykstra_feasible_and_nearly_solenoidal(setup):
    g = setup[0]
    v_d, u_d = ctl.constant_targets(g, 1)
    cp = ctl.CostParams(1.0, v_d, u_d, -0.6, 0.6)
    theta = [random_face(g, SplitMix64(2), -2, 2)]
    out = ctl.project_dykstra(theta, cp)[0]
    assert out.xvals.min() >= -0.6 and out.yvals.max() <= 0.6
    assert ops.norm_cc(ops.div_fc(out)) < 0.2 * ops.norm_cc(ops.div_fc(theta[0]))


# optimality residual ---------------------------------------------------------

def test_residual_zero_gradient(setup):
    g = setup[0]
    v_d, u_d = ctl.constant_targets(g, 3)
    cp = ctl.CostParams(1.0, v_d, u_d, -1.0, 1.0)
    theta = [VectorField.constant(g, 0.3)] * 3
    assert ctl.optimality_residual(theta, _const_seq(g, 0.0, 3), cp, 1.0, 0.1) == 0.0


def test_residual_active_lower_bound(setup):
    g = setup[0]
    v_d, u_d = ctl.constant_targets(g, 3)
    cp = ctl.CostParams(1.0, v_d, u_d, -1.0, 1.0)
    theta = [VectorField.constant(g, -1.0)] * 3
    assert ctl.optimality_residual(theta, _const_seq(g, 2.0, 3), cp, 0.5, 0.1) == 0.0
    assert ctl.optimality_residual(theta, _const_seq(g, -2.0, 3), cp, 0.5, 0.1) > 0.0


def test_residual_matches_formula(setup):
    g = setup[0]
    rng = SplitMix64(17)
    v_d, u_d = ctl.constant_targets(g, 4)
    cp = ctl.CostParams(1.0, v_d, u_d, -0.5, 0.8)
    theta = [random_face(g, rng, -0.5, 0.8, no_slip=False) for _ in range(4)]
    grad = [random_face(g, rng, -3, 3, no_slip=False) for _ in range(4)]
    s, dt = 0.7, 0.05
    w = ops.face_weights(g)
    ref = 0.0
    for t, d in zip(theta, grad):
        rx = t.xvals - np.clip(t.xvals - s * d.xvals, -0.5, 0.8)
        ry = t.yvals - np.clip(t.yvals - s * d.yvals, -0.5, 0.8)
        ref += dt * (np.sum(w[0] * rx**2) + np.sum(w[1] * ry**2))
    assert ctl.optimality_residual(theta, grad, cp, s, dt) == pytest.approx(math.sqrt(ref), rel=1e-14)
    with pytest.raises(PreconditionError):
        ctl.optimality_residual(theta, grad, cp, 0.0, dt)


# optimizer -------------------------------------------------------------------

def test_start_at_minimizer_converges_immediately(setup):
    g, tg, p, u0, v0 = setup
    traj = solve_forward(u0, v0, None, g, p, tg)
    cp = ctl.CostParams(1e-3, [s.v for s in traj.snapshots], [s.u for s in traj.snapshots])
    st_ = ctl.projected_gradient_descent(u0, v0, cp, g, p, tg)
    assert st_.converged and st_.iterations == 0
    assert st_.residual_history == [0.0] and st_.J_history == [0.0]


def test_degenerate_box(setup):
    g, tg, p, u0, v0 = setup
    v_d, u_d = ctl.constant_targets(g, NT, 0.5, 0.3)
    cp = ctl.CostParams(1e-3, v_d, u_d, 0.0, 0.0)
    st_ = ctl.projected_gradient_descent(u0, v0, cp, g, p, tg, ctl.OptConfig(max_iters=5),
                                         theta0=ctl.vortex_control(g, NT))
    assert st_.converged
    assert all(t.max_abs() == 0.0 for t in st_.theta)


@pytest.fixture(scope="module")
def small_inverse():
    g = make_grid(12, 12)
    nt = 20
    tg = TimeGrid(1.0, nt)
    p = PhysParams(mu=0.01, lam=0.005)
    u0 = ScalarField.from_function(g, lambda X, Y: -np.tanh((np.hypot(X - 0.4, Y - 0.5) - 0.2) / 0.07))
    v0 = VectorField(g)
    star = ctl.vortex_control(g, nt, 0.3, profile=lambda n: math.sin(math.pi * n / nt) ** 2)
    v_d, u_d = ctl.synthetic_targets(u0, v0, star, g, p, tg)
    cp = ctl.CostParams(1e-3, v_d, u_d, -0.25, 0.25)
    iterates = []
    st_ = ctl.projected_gradient_descent(u0, v0, cp, g, p, tg, ctl.OptConfig(max_iters=300),
                                         callback=lambda k, th, J, r: iterates.append(th))
    return (g, tg, p, u0, v0), cp, st_, iterates


def test_descent_monotone_and_feasible(small_inverse):
    _, cp, st_, iterates = small_inverse
    J = st_.J_history
    assert all(b <= a for a, b in zip(J, J[1:]))
    assert J[-1] < J[0] / 10
    for th in iterates:
        for t in th:
            assert t.xvals.min() >= -0.25 and t.xvals.max() <= 0.25
            assert t.yvals.min() >= -0.25 and t.yvals.max() <= 0.25


def test_armijo_sufficient_decrease(small_inverse):
    (_, tg, *_), cp, st_, iterates = small_inverse
    dt = tg.dt
    for k, s in enumerate(st_.step_history):
        d = [a - b for a, b in zip(iterates[k], iterates[k + 1])]
        assert st_.J_history[k + 1] <= st_.J_history[k] - 1e-4 / s * ctl.control_inner(d, d, dt) + 1e-15


def test_variational_inequality_at_convergence(small_inverse):
    (g, tg, p, u0, v0), cp, st_, _ = small_inverse
    assert st_.converged
    prob = ctl.ReducedProblem(u0, v0, cp, g, p, tg)
    grad = prob.gradient(st_.theta)
    rng = SplitMix64(77)
    tol = 1e-4 * (1 + st_.J_history[-1])
    for _ in range(100):
        probe = [random_face(g, rng, -0.25, 0.25) for _ in range(tg.nt)]
        diff = [a - b for a, b in zip(probe, st_.theta)]
        assert ctl.control_inner(grad, diff, tg.dt) >= -tol


def test_opt_config_validation():
    with pytest.raises(ConfigurationError):
        ctl.OptConfig(c1=1.5)
    with pytest.raises(ConfigurationError):
        ctl.OptConfig(mode="exact")


# Taylor test -----------------------------------------------------------------

def test_taylor_zero_direction(setup):
    g, tg, p, u0, v0 = setup
    v_d, u_d = ctl.constant_targets(g, NT)
    res = ctl.taylor_test(_const_seq(g, 0.0), _const_seq(g, 0.0), u0, v0, g, p, tg,
                          ctl.CostParams(1.0, v_d, u_d))
    assert res.exact and res.remainders == [0.0] * 4 and res.orders == []


def test_taylor_pure_tikhonov(setup):
    """A discrete-gradient direction is invisible to the state: r(eps) = eps^2 beta/2 |h|^2."""
    g, tg, p, u0, v0 = setup
    traj = solve_forward(u0, v0, None, g, p, tg)
    beta = 0.3
    cp = ctl.CostParams(beta, [s.v for s in traj.snapshots], [s.u for s in traj.snapshots])
    q = ScalarField.from_function(g, lambda X, Y: np.cos(np.pi * X) * np.cos(2 * np.pi * Y))
    h = [float(n + 1) * ops.grad_cc(q) for n in range(NT)]
    res = ctl.taylor_test(traj.controls, h, u0, v0, g, p, tg, cp)
    hh = ctl.control_inner(h, h, tg.dt)
    for eps, r in zip(res.eps, res.remainders):
        assert r == pytest.approx(0.5 * beta * eps**2 * hh, rel=1e-9)
    assert all(abs(o - 2.0) <= 1e-10 for o in res.orders)


def test_vortex_control_is_admissible():
    g = make_grid(10, 14, 1.0, 1.4)
    th = ctl.vortex_control(g, 3, amplitude=1.5, profile=lambda n: n)
    assert th[0].max_abs() == 0.0
    assert th[1].max_abs() == pytest.approx(1.5)
    assert ops.div_fc(th[2]).max_abs() < 1e-12 and th[2].boundary_normal_max() == 0.0
