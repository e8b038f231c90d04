"""Tracking-type optimal control: cost, gradient, box projection and descent.

Controls are lists of ``nt`` face fields; ``theta[n]`` acts during step
``n -> n+1``.  Time integrals use the left-endpoint rectangle rule, so the
discrete cost is

    J = sum_{n<nt} dt [ |v^n - v_d^n|^2 / 2 + |u^n - u_d^n|^2 / 2 + beta |theta^n|^2 / 2 ]

and the gradient in the ``sum dt <., .>_face`` inner product is
``gamma1 + beta theta``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .adjoint import solve_adjoint
from .errors import ConfigurationError, PreconditionError
from .grid import ScalarField, VectorField
from .linsolve import SolverOptions
from .random_fields import curl_of_nodal, wall_sine
from .state import leray_project, solve_forward

log = logging.getLogger(__name__)

TAYLOR_EPS = (1e-1, 3e-2, 1e-2, 3e-3)
GRADCHECK_EPS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


# ---------------------------------------------------------------------------
# parameters and helpers

def _bound_arrays(bound, n, grid):
    """Return (xarray, yarray) or scalar for bound entry ``n``."""
    if isinstance(bound, (int, float)):
        return float(bound), float(bound)
    if isinstance(bound, VectorField):
        return bound.xvals, bound.yvals
    b = bound[n]
    return b.xvals, b.yvals


@dataclass
class CostParams:
    """Tikhonov weight, tracking targets and box bounds.

    ``theta_min``/``theta_max`` are scalars, a single face field (constant in
    time) or a list of ``nt`` face fields.  Bounds apply componentwise.
    """

    beta: float
    v_d: list
    u_d: list
    theta_min: object = -np.inf
    theta_max: object = np.inf

    def __post_init__(self):
        if not (self.beta > 0):
            raise ConfigurationError(f"control.beta must be > 0, got {self.beta}")
        n = min(len(self.v_d), len(self.u_d))
        grid = self.u_d[0].grid if self.u_d else None
        for k in range(max(n, 1)):
            lo = _bound_arrays(self.theta_min, k, grid)
            hi = _bound_arrays(self.theta_max, k, grid)
            for a, b in zip(lo, hi):
                if np.any(np.asarray(a) > np.asarray(b)):
                    raise ConfigurationError("theta_min must not exceed theta_max")
            if isinstance(self.theta_min, (int, float)) and isinstance(self.theta_max, (int, float)):
                break


@dataclass
class OptConfig:
    max_iters: int = 50
    tol: float = 1e-4
    c1: float = 1e-4
    rho: float = 0.5
    s0: float = 1.0
    s_min: float = 1e-12
    residual_step: float = 1.0
    mode: str = "box"

    def __post_init__(self):
        if self.max_iters < 0:
            raise ConfigurationError("opt.max_iters must be >= 0")
        if not (0 < self.c1 < 1):
            raise ConfigurationError("opt.c1 must lie in (0, 1)")
        if not (0 < self.rho < 1):
            raise ConfigurationError("opt.rho must lie in (0, 1)")
        if not (self.s0 > 0 and self.tol > 0 and self.residual_step > 0):
            raise ConfigurationError("opt.s0, opt.tol and the residual step must be positive")
        if self.mode not in ("box", "dykstra"):
            raise ConfigurationError(f"unknown projection mode {self.mode!r}")


@dataclass
class OptState:
    theta: list
    J_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    step_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    message: str = ""


def control_inner(a, b, dt) -> float:
    """``sum_n dt <a^n, b^n>_face``."""
    if len(a) != len(b):
        raise PreconditionError(f"control length mismatch: {len(a)} vs {len(b)}")
    return sum(dt * ops.inner_face(x, y) for x, y in zip(a, b))


def control_norm(a, dt) -> float:
    return math.sqrt(control_inner(a, a, dt))


def axpy(alpha, x, y):
    """``alpha * x + y`` for control sequences."""
    return [alpha * a + b for a, b in zip(x, y)]


# ---------------------------------------------------------------------------
# cost and gradient

def cost_terms(traj, theta, cp: CostParams):
    """Return ``(J_track_v, J_track_u, J_reg)`` whose sum is the cost."""
    nt, dt = traj.timegrid.nt, traj.timegrid.dt
    if len(theta) != nt:
        raise PreconditionError(f"control has {len(theta)} steps, trajectory {nt}")
    if len(cp.v_d) < nt or len(cp.u_d) < nt:
        raise PreconditionError("targets shorter than the time grid")
    jv = ju = jr = 0.0
    for n in range(nt):
        s = traj.snapshots[n]
        dv = s.v - cp.v_d[n]
        du = s.u - cp.u_d[n]
        jv += 0.5 * dt * ops.inner_face(dv, dv)
        ju += 0.5 * dt * ops.inner_cc(du, du)
        jr += 0.5 * cp.beta * dt * ops.inner_face(theta[n], theta[n])
    return jv, ju, jr


def cost(traj, theta, cp: CostParams) -> float:
    return sum(cost_terms(traj, theta, cp))


def gradient(adj, theta, beta: float):
    """Cost gradient ``gamma1 + beta theta`` per step."""
    if len(adj.gamma1) < len(theta):
        raise PreconditionError("adjoint shorter than the control")
    return [adj.gamma1[n] + beta * theta[n] for n in range(len(theta))]


# ---------------------------------------------------------------------------
# projections

def project_box(theta, cp: CostParams):
    """Componentwise clamp into ``[theta_min, theta_max]``."""
    out = []
    for n, t in enumerate(theta):
        lox, loy = _bound_arrays(cp.theta_min, n, t.grid)
        hix, hiy = _bound_arrays(cp.theta_max, n, t.grid)
        out.append(VectorField._wrap(t.grid, np.clip(t.xvals, lox, hix),
                                     np.clip(t.yvals, loy, hiy)))
    return out


def project_dykstra(theta, cp: CostParams, sweeps=20, solver=None):
    """Alternating (Dykstra) projections between the box and solenoidal fields.

    Returns the box-side iterate of the last sweep, so the result is exactly
    feasible for the bounds and approximately divergence free.
    """
    x = [t.copy() for t in theta]
    pbox = [VectorField(t.grid) for t in theta]
    pdiv = [VectorField(t.grid) for t in theta]
    y = x
    for _ in range(sweeps):
        y = project_box([a + b for a, b in zip(x, pbox)], cp)
        pbox = [a + b - c for a, b, c in zip(x, pbox, y)]
        z = [a + b for a, b in zip(y, pdiv)]
        x = [leray_project(t, solver)[0] for t in z]
        pdiv = [a - b for a, b in zip(z, x)]
    return y


def project_admissible(theta, cp, mode="box", solver=None):
    if mode == "box":
        return project_box(theta, cp)
    if mode == "dykstra":
        return project_dykstra(theta, cp, solver=solver)
    raise ConfigurationError(f"unknown projection mode {mode!r}")


def optimality_residual(theta, grad, cp: CostParams, step_s: float, dt: float = 1.0,
                        mode="box", solver=None) -> float:
    """``|| theta - Proj(theta - s g) ||`` in the discrete L2(0,T) face norm.

    Zero exactly when the discrete variational inequality holds at ``theta``.
    """
    if not step_s > 0:
        raise PreconditionError("step_s must be positive")
    trial = project_admissible(axpy(-step_s, grad, theta), cp, mode, solver)
    return control_norm([a - b for a, b in zip(theta, trial)], dt)


# ---------------------------------------------------------------------------
# reduced problem

class ReducedProblem:
    """Control-to-cost map with forward/adjoint evaluation."""

    def __init__(self, u0, v0, cp: CostParams, grid, params, timegrid, solver=None):
        self.u0, self.v0, self.cp = u0, v0, cp
        self.grid, self.params, self.timegrid = grid, params, timegrid
        self.solver = solver or SolverOptions()
        self.n_forward = 0
        self.n_adjoint = 0

    @property
    def dt(self):
        return self.timegrid.dt

    def forward(self, theta):
        self.n_forward += 1
        return solve_forward(self.u0, self.v0, theta, self.grid, self.params,
                             self.timegrid, self.solver)

    def J(self, theta, traj=None) -> float:
        traj = traj or self.forward(theta)
        return cost(traj, theta, self.cp)

    def gradient(self, theta, traj=None):
        traj = traj or self.forward(theta)
        self.n_adjoint += 1
        adj = solve_adjoint(traj, self.cp.v_d, self.cp.u_d, self.solver)
        return gradient(adj, theta, self.cp.beta)

    def J_and_gradient(self, theta):
        traj = self.forward(theta)
        return cost(traj, theta, self.cp), self.gradient(theta, traj)


def projected_gradient_descent(u0, v0, cp, grid, params, timegrid, config=None,
                               theta0=None, solver=None, callback=None) -> OptState:
    """Projected gradient method with Armijo backtracking on the reduced cost.

    Each iteration tries ``s = s0, rho s0, ...`` and accepts the first
    ``theta+ = Proj(theta - s g)`` with
    ``J(theta+) <= J(theta) - c1 / s * ||theta - theta+||^2``.  The run stops
    when the optimality residual (computed with ``config.residual_step``)
    drops below ``tol * (1 + |J|)``.
    """
    config = config or OptConfig()
    prob = ReducedProblem(u0, v0, cp, grid, params, timegrid, solver)
    dt = prob.dt
    proj = lambda t: project_admissible(t, cp, config.mode, prob.solver)  # noqa: E731
    if theta0 is None:
        theta0 = [VectorField(grid) for _ in range(timegrid.nt)]
    theta = proj(theta0)
    J, g = prob.J_and_gradient(theta)
    state = OptState(theta=theta, J_history=[J])
    for k in range(config.max_iters + 1):
        res = optimality_residual(theta, g, cp, config.residual_step, dt,
                                  config.mode, prob.solver)
        state.residual_history.append(res)
        log.info("iter %d  J=%.10e  residual=%.3e", k, J, res)
        if callback is not None:
            callback(k, theta, J, res)
        if res <= config.tol * (1.0 + abs(J)):
            state.converged = True
            state.message = "optimality residual below tolerance"
            break
        if k == config.max_iters:
            state.message = "iteration limit reached"
            break
        s = config.s0
        while True:
            trial = proj(axpy(-s, g, theta))
            d2 = control_inner(*(2 * [[a - b for a, b in zip(theta, trial)]]), dt)
            if d2 == 0.0:
                break
            traj = prob.forward(trial)
            J_trial = cost(traj, trial, cp)
            if J_trial <= J - config.c1 / s * d2:
                break
            s *= config.rho
            if s < config.s_min:
                state.message = "line search failed"
                state.iterations = k
                state.theta = theta
                return state
        if d2 == 0.0:
            state.converged = True
            state.message = "projected step is zero"
            break
        theta, J = trial, J_trial
        g = prob.gradient(theta, traj)
        state.J_history.append(J)
        state.step_history.append(s)
        state.iterations = k + 1
        state.theta = theta
    state.theta = theta
    return state


# ---------------------------------------------------------------------------
# derivative checks

@dataclass
class TaylorResult:
    eps: tuple
    remainders: list
    orders: list
    exact: bool = False


def _orders(eps, rem):
    out = []
    for k in range(1, len(eps)):
        a, b = rem[k - 1], rem[k]
        if a == 0.0 or b == 0.0:
            out.append(float("nan"))
        else:
            out.append(math.log(a / b) / math.log(eps[k - 1] / eps[k]))
    return out


def taylor_test(theta, h, u0, v0, grid, params, timegrid, cp, eps=TAYLOR_EPS,
                solver=None) -> TaylorResult:
    """Second-order Taylor remainders of the reduced cost.

    ``r(eps) = |J(theta + eps h) - J(theta) - eps <g, h>|`` should decay with
    order two.  A zero direction reports ``exact=True`` with empty orders.
    """
    prob = ReducedProblem(u0, v0, cp, grid, params, timegrid, solver)
    dt = prob.dt
    if control_norm(h, dt) == 0.0:
        return TaylorResult(tuple(eps), [0.0] * len(eps), [], exact=True)
    J0, g = prob.J_and_gradient(theta)
    dJ = control_inner(g, h, dt)
    rem = [abs(prob.J(axpy(e, h, theta)) - J0 - e * dJ) for e in eps]
    return TaylorResult(tuple(eps), rem, _orders(eps, rem))


@dataclass
class GradientCheck:
    eps: tuple
    fd: list
    predicted: float
    rel_errors: list

    @property
    def best_error(self) -> float:
        return min(self.rel_errors)


def gradient_check(theta, h, u0, v0, grid, params, timegrid, cp,
                   eps=GRADCHECK_EPS, solver=None) -> GradientCheck:
    """Compare one-sided difference quotients of ``J`` with ``<g, h>``.

    The quotient error is first order in ``eps`` until cancellation takes
    over, so the smallest relative error over the sweep is the figure of merit.
    """
    prob = ReducedProblem(u0, v0, cp, grid, params, timegrid, solver)
    dt = prob.dt
    J0, g = prob.J_and_gradient(theta)
    pred = control_inner(g, h, dt)
    fd = [(prob.J(axpy(e, h, theta)) - J0) / e for e in eps]
    scale = abs(pred) if pred != 0.0 else 1.0
    return GradientCheck(tuple(eps), fd, pred, [abs(f - pred) / scale for f in fd])


def duality_gap(traj, lin, adj, h, cp):
    """Both sides of the linearized/adjoint pairing identity.

    Returns ``(sum dt <gamma1, h>, sum dt [<u - u_d, phi2> + <v - v_d, phi1>])``.
    """
    nt, dt = traj.timegrid.nt, traj.timegrid.dt
    lhs = sum(dt * ops.inner_face(adj.gamma1[n], h[n]) for n in range(nt))
    rhs = 0.0
    for n in range(nt):
        s = traj.snapshots[n]
        rhs += dt * (ops.inner_cc(s.u - cp.u_d[n], lin.phi2[n])
                     + ops.inner_face(s.v - cp.v_d[n], lin.phi1[n]))
    return lhs, rhs


# ---------------------------------------------------------------------------
# presets

def vortex_control(grid, nt, amplitude=1.0, profile=None):
    """Discretely divergence-free vortex control, no flux through the walls.

    Built as the discrete curl of the nodal stream function
    ``sin^2(pi x / Lx) sin^2(pi y / Ly)``, scaled so the largest face value
    is ``amplitude``.  ``profile(n)`` multiplies step ``n`` (default 1).
    """
    xn = grid.xf() / grid.Lx
    yn = grid.yf() / grid.Ly
    psi = np.outer(wall_sine(xn) ** 2, wall_sine(yn) ** 2)
    base = curl_of_nodal(grid, psi)
    base = (amplitude / base.max_abs()) * base
    profile = profile or (lambda n: 1.0)
    return [profile(n) * base for n in range(nt)]


def constant_targets(grid, nt, u_value=0.0, v_value=0.0):
    v_d = [VectorField.constant(grid, v_value) for _ in range(nt + 1)]
    u_d = [ScalarField.constant(grid, u_value) for _ in range(nt + 1)]
    return v_d, u_d


def synthetic_targets(u0, v0, theta_star, grid, params, timegrid, solver=None):
    """Targets reachable by construction: the trajectory driven by ``theta_star``."""
    traj = solve_forward(u0, v0, theta_star, grid, params, timegrid, solver)
    return [s.v.copy() for s in traj.snapshots], [s.u.copy() for s in traj.snapshots]
