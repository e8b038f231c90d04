"""Forward solver for the Stokes / Cahn-Hilliard-Oono system.

One time step is a first-order splitting: the Cahn-Hilliard-Oono update
uses the lagged velocity, then the Stokes update uses the fresh order
parameter and chemical potential in the capillary force.

Cahn-Hilliard-Oono step (w eliminated, stabilised semi-implicit)::

    (1 + a dt) u+ + dt L^2 u+ - S dt L u+ = u - dt div(v u) + dt L(f(u) - S u)
    w+ = -L u+ + f(u) + S (u+ - u)

Stokes step::

    v+ = P H^-1 P (v + dt (F(u+, w+) + theta - grad p)),   H = I - mu dt L_face

where ``P`` is the discrete Leray projection (one Neumann Poisson solve).
The projection applied before the viscous solve removes the gradient part
of the forcing, which makes the step operator ``P H^-1 P`` symmetric; the
pressure is recovered from the two projection potentials.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .errors import ConfigurationError, NumericalBreakdown, SolverFailure
from .grid import GridSpec, ScalarField, VectorField, check_no_slip
from .linsolve import (SolverOptions, cg_solve, face_spectral_preconditioner,
                       spectral_preconditioner)

log = logging.getLogger(__name__)

MEMORY_BUDGET = 4 * 2**30


class ViscosityWarning(UserWarning):
    """Raised (as a warning) when mu <= lambda."""


@dataclass(frozen=True)
class PhysParams:
    mu: float = 0.1
    lam: float = 0.01
    alpha: float = 0.1
    stab_S: float = 2.0
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not (self.mu > 0):
            raise ConfigurationError(f"physics.mu must be > 0, got {self.mu}")
        if not (self.lam > 0):
            raise ConfigurationError(f"physics.lambda must be > 0, got {self.lam}")
        if not (self.alpha >= 0):
            raise ConfigurationError(f"physics.alpha must be >= 0, got {self.alpha}")
        if not (self.stab_S >= 0):
            raise ConfigurationError(f"physics.stab_S must be >= 0, got {self.stab_S}")
        if self.mu <= self.lam:
            msg = (f"mu={self.mu:g} does not exceed lambda={self.lam:g}; the "
                   "uniqueness and stability estimates require mu > lambda")
            object.__setattr__(self, "warnings", self.warnings + (msg,))
            warnings.warn(msg, ViscosityWarning, stacklevel=3)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    nt: int

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigurationError(f"time.T must be > 0, got {self.T}")
        if int(self.nt) != self.nt or self.nt < 1:
            raise ConfigurationError(f"time.nt must be an integer >= 1, got {self.nt}")
        object.__setattr__(self, "nt", int(self.nt))

    @property
    def dt(self) -> float:
        return self.T / self.nt

    def times(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt


@dataclass
class Snapshot:
    v: VectorField
    u: ScalarField
    w: ScalarField
    p: ScalarField


@dataclass
class Trajectory:
    grid: GridSpec
    params: PhysParams
    timegrid: TimeGrid
    snapshots: list
    controls: list
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        nt = self.timegrid.nt
        if len(self.snapshots) != nt + 1 or len(self.controls) != nt:
            raise ConfigurationError(
                f"trajectory needs {nt + 1} snapshots and {nt} controls, got "
                f"{len(self.snapshots)} and {len(self.controls)}")

    @property
    def u(self):
        return [s.u for s in self.snapshots]

    @property
    def v(self):
        return [s.v for s in self.snapshots]

    @property
    def w(self):
        return [s.w for s in self.snapshots]


def zero_controls(grid, nt):
    return [VectorField(grid) for _ in range(nt)]


def check_memory_budget(grid, nt, budget=MEMORY_BUDGET):
    """Reject trajectories whose in-memory footprint would exceed ``budget`` bytes."""
    per_step = 8 * (3 * grid.nx * grid.ny + 4 * (grid.nx + 1) * (grid.ny + 1))
    need = per_step * (nt + 1)
    if need > budget:
        raise ConfigurationError(
            f"trajectory needs ~{need / 2**30:.1f} GiB, above the {budget / 2**30:.1f} GiB budget")


def _check(report, what):
    if not report.converged:
        raise SolverFailure(f"{what}: CG stopped at relative residual "
                            f"{report.final_residual:.3e} after {report.iterations} iterations")


# ---------------------------------------------------------------------------
# Cahn-Hilliard-Oono pieces

def cho_solve(rhs: ScalarField, params: PhysParams, dt: float, solver=None, x0=None):
    """Solve ``((1 + a dt) I + dt L^2 - S dt L) x = rhs``.

    The constant mode is an eigenvector with eigenvalue ``1 + a dt``, so the
    mean is divided out exactly and CG only sees the zero-mean part.
    """
    solver = solver or SolverOptions()
    g = rhs.grid
    c0 = 1.0 + params.alpha * dt
    S = params.stab_S
    hx, hy = g.hx, g.hy

    def apply(x):
        lx = ops._lap_cc(x.values, hx, hy)
        return ScalarField._wrap(g, c0 * x.values + dt * ops._lap_cc(lx, hx, hy) - S * dt * lx)

    d1, d2 = ops.lap_cc_diagonal(g)
    diag = ScalarField._wrap(g, c0 + dt * d2 - S * dt * d1)
    pre = None
    if solver.precond == "spectral":
        pre = spectral_preconditioner(g, lambda lam: c0 + dt * lam * lam - S * dt * lam)
    m = rhs.values.mean()
    x, rep = cg_solve(apply, rhs, tol=solver.tol, maxiter=solver.maxiter,
                      nullspace_mean=True, x0=x0, diag=diag, precond=pre)
    _check(rep, "Cahn-Hilliard solve")
    return ScalarField._wrap(g, x.values + m / c0)


def step_cho(u_n: ScalarField, v_n: VectorField, params: PhysParams, dt: float,
             solver=None):
    """Advance the order parameter one step; returns ``(u_next, w_next)``."""
    if not u_n.is_finite():
        raise NumericalBreakdown("non-finite order parameter")
    check_no_slip(v_n)
    S = params.stab_S
    fu = u_n.map(ops.double_well_deriv)
    rhs = u_n - dt * ops.advect(v_n, u_n) + dt * ops.laplace_cc(fu - S * u_n)
    u_next = cho_solve(rhs, params, dt, solver, x0=u_n)
    w_next = -ops.laplace_cc(u_next) + fu + S * (u_next - u_n)
    return u_next, w_next


# ---------------------------------------------------------------------------
# Stokes pieces

def poisson_potential(rhs: ScalarField, solver=None) -> ScalarField:
    """Zero-mean solution of the Neumann problem ``L phi = rhs``."""
    solver = solver or SolverOptions()
    g = rhs.grid
    hx, hy = g.hx, g.hy
    d1, _ = ops.lap_cc_diagonal(g)
    diag = ScalarField._wrap(g, -d1)
    pre = spectral_preconditioner(g, lambda lam: -lam) if solver.precond == "spectral" else None

    def apply(x):
        return ScalarField._wrap(g, -ops._lap_cc(x.values, hx, hy))

    phi, rep = cg_solve(apply, -rhs, tol=solver.tol, maxiter=solver.maxiter,
                        nullspace_mean=True, diag=diag, precond=pre)
    _check(rep, "pressure Poisson solve")
    return phi


def leray_project(b: VectorField, solver=None):
    """Discrete Leray projection of a face field.

    Boundary-normal entries are dropped first.  Returns ``(Pb, phi)`` with
    ``Pb = b - grad(phi)`` and ``div(Pb) = 0`` to solver tolerance.
    """
    b = b.with_zero_boundary_normal()
    phi = poisson_potential(ops.div_fc(b), solver)
    return b - ops.grad_cc(phi), phi


def helmholtz_solve(b: VectorField, mu: float, dt: float, solver=None) -> VectorField:
    """Solve ``(I - mu dt L_face) x = b`` with no-slip walls."""
    solver = solver or SolverOptions()
    g = b.grid
    hx, hy = g.hx, g.hy
    c = mu * dt
    dx, dy = ops.lap_face_diagonal(g)
    diag = VectorField._wrap(g, 1.0 - c * dx, 1.0 - c * dy)

    def apply(x):
        lx, ly = ops._lap_face(x.xvals, x.yvals, hx, hy)
        return VectorField._wrap(g, x.xvals - c * lx, x.yvals - c * ly)

    precond = None
    if solver.precond == "spectral":
        precond = face_spectral_preconditioner(g, lambda lam: 1.0 - c * lam)
    x, rep = cg_solve(apply, b, tol=solver.tol, maxiter=solver.maxiter, diag=diag,
                      precond=precond)
    _check(rep, "viscous Helmholtz solve")
    return x


def stokes_resolvent(b: VectorField, mu: float, dt: float, solver=None):
    """Apply the symmetric Stokes step operator ``P H^-1 P`` to ``b``.

    Returns ``(v, phi1, phi2)`` where ``phi1`` and ``phi2`` are the
    potentials removed by the first and second projection.
    """
    b1, phi1 = leray_project(b, solver)
    vstar = helmholtz_solve(b1, mu, dt, solver)
    v, phi2 = leray_project(vstar, solver)
    return v, phi1, phi2


def step_stokes(v_n, p_n, u_next, w_next, theta_n, params: PhysParams, dt: float,
                solver=None):
    """Advance velocity and pressure one step; returns ``(v_next, p_next)``.

    ``theta_n`` may carry arbitrary boundary-normal entries; they act on the
    walls where the velocity is prescribed and are ignored.
    """
    force = ops.surface_force(u_next, w_next, params.lam) + theta_n.with_zero_boundary_normal()
    b = v_n + dt * (force - ops.grad_cc(p_n))
    v_next, phi1, phi2 = stokes_resolvent(b, params.mu, dt, solver)
    p_next = p_n + (1.0 / dt) * (phi1 + phi2)
    p_next = ScalarField._wrap(p_next.grid, p_next.values - p_next.values.mean())
    return v_next, p_next


# ---------------------------------------------------------------------------
# diagnostics

def chemical_potential(u: ScalarField) -> ScalarField:
    return -ops.laplace_cc(u) + u.map(ops.double_well_deriv)


def energy(s: Snapshot, params: PhysParams) -> float:
    """Kinetic plus capillary free energy of a snapshot."""
    gu = ops.grad_cc(s.u)
    Fu = s.u.map(ops.double_well)
    return (0.5 * ops.inner_face(s.v, s.v)
            + 0.5 * params.lam * ops.inner_face(gu, gu)
            + params.lam * float(Fu.values.sum()) * s.u.grid.cell_area)


def _diagnostic_row(n, t, s, params):
    return {
        "step": n,
        "time": t,
        "energy": energy(s, params),
        "mean_u": ops.mean_cc(s.u),
        "div_inf": ops.div_fc(s.v).max_abs(),
    }


def solve_forward(u0: ScalarField, v0: VectorField, theta, grid: GridSpec,
                  params: PhysParams, timegrid: TimeGrid, solver=None,
                  memory_budget=MEMORY_BUDGET) -> Trajectory:
    """Integrate the coupled system from ``(u0, v0)`` under the control ``theta``.

    ``theta`` is a list of ``nt`` face fields (``theta[n]`` drives step
    ``n -> n+1``) or ``None`` for no control.
    """
    nt, dt = timegrid.nt, timegrid.dt
    check_memory_budget(grid, nt, memory_budget)
    if u0.grid != grid or v0.grid != grid:
        raise ConfigurationError("initial data live on a different grid")
    if not (u0.is_finite() and v0.is_finite()):
        raise NumericalBreakdown("non-finite initial data")
    check_no_slip(v0)
    if theta is None:
        theta = zero_controls(grid, nt)
    theta = list(theta)
    if len(theta) != nt:
        raise ConfigurationError(f"control has {len(theta)} steps, expected {nt}")

    s = Snapshot(v0.copy(), u0.copy(), chemical_potential(u0), ScalarField(grid))
    snaps = [s]
    diags = [_diagnostic_row(0, 0.0, s, params)]
    for n in range(nt):
        try:
            u1, w1 = step_cho(s.u, s.v, params, dt, solver)
            v1, p1 = step_stokes(s.v, s.p, u1, w1, theta[n], params, dt, solver)
        except (SolverFailure, NumericalBreakdown) as exc:
            raise SolverFailure(str(exc), step=n) from exc
        s = Snapshot(v1, u1, w1, p1)
        if not (u1.is_finite() and v1.is_finite()):
            raise SolverFailure("non-finite state", step=n)
        snaps.append(s)
        diags.append(_diagnostic_row(n + 1, (n + 1) * dt, s, params))
    return Trajectory(grid, params, timegrid, snaps, theta, diags)


# ---------------------------------------------------------------------------
# stability probe

def l2l2_norm_face(seq, dt, start=0) -> float:
    return math.sqrt(sum(dt * ops.inner_face(a, a) for a in seq[start:]))


def h1_norm_cc(a: ScalarField) -> float:
    g = ops.grad_cc(a)
    return math.sqrt(ops.inner_cc(a, a) + ops.inner_face(g, g))


def lipschitz_probe(theta1, theta2, u0, v0, grid, params, timegrid, solver=None):
    """Stability ratio of the control-to-state map between two controls.

    Returns ``(ratio, identical)`` where ``ratio`` is
    ``(||v1 - v2||_{L2 L2} + max_n ||u1 - u2||_{H1}) / ||theta1 - theta2||_{L2 L2}``.
    Identical controls give ``(0.0, True)``.
    """
    dt = timegrid.dt
    dtheta = [a - b for a, b in zip(theta1, theta2)]
    den = l2l2_norm_face(dtheta, dt)
    if den == 0.0:
        return 0.0, True
    t1 = solve_forward(u0, v0, theta1, grid, params, timegrid, solver)
    t2 = solve_forward(u0, v0, theta2, grid, params, timegrid, solver)
    dv = [a.v - b.v for a, b in zip(t1.snapshots, t2.snapshots)]
    num_v = l2l2_norm_face(dv, dt, start=1)
    num_u = max(h1_norm_cc(a.u - b.u) for a, b in zip(t1.snapshots, t2.snapshots))
    return (num_v + num_u) / den, False
