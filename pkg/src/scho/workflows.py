"""Assemble runs from a :class:`RunConfig` and produce report rows.

Random draws come from child streams of the config seed in a fixed order
(initial data first, then derivative-check directions), so a seed
determines every output bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import control as ctl
from . import operators as ops
from .config import RunConfig
from .fieldio import read_field, read_sequence
from .grid import ScalarField, VectorField
from .linearized import solve_linearized
from .adjoint import solve_adjoint
from .random_fields import random_scalar, smooth_direction, rough_direction
from .rng import SplitMix64
from .state import solve_forward


def bump_profile(nt: int):
    """Time weight ``sin^2(pi n / nt)``: zero at the start, peak mid-run."""
    return lambda n: math.sin(math.pi * n / nt) ** 2


def _profile(name, nt):
    return bump_profile(nt) if name == "bump" else None


@dataclass
class Problem:
    cfg: RunConfig
    grid: object
    params: object
    timegrid: object
    solver: object
    u0: ScalarField
    v0: VectorField
    theta: list
    cost: ctl.CostParams
    rng: SplitMix64

    def forward(self, theta=None):
        return solve_forward(self.u0, self.v0, self.theta if theta is None else theta,
                             self.grid, self.params, self.timegrid, self.solver)


def initial_data(cfg: RunConfig, grid, rng: SplitMix64):
    mode = cfg["init.u0"]
    if mode == "random":
        u0 = random_scalar(grid, rng, cfg["init.u0_low"], cfg["init.u0_high"])
    elif mode == "constant":
        u0 = ScalarField.constant(grid, cfg["init.u0_value"])
    elif mode == "disk":
        cx, cy = cfg["init.disk_x"], cfg["init.disk_y"]
        r, w = cfg["init.disk_r"], cfg["init.disk_width"]
        u0 = ScalarField.from_function(
            grid, lambda X, Y: -np.tanh((np.hypot(X - cx, Y - cy) - r) / w))
    else:
        u0 = read_field(cfg["init.u0_path"], grid)[0]
    if cfg["init.v0"] == "zero":
        v0 = VectorField(grid)
    else:
        v0 = read_field(cfg["init.v0_path"], grid)[0]
    return u0, v0


def control_from_config(cfg: RunConfig, grid, nt: int) -> list:
    mode = cfg["control.theta"]
    if mode == "zero":
        return [VectorField(grid) for _ in range(nt)]
    if mode == "vortex":
        return ctl.vortex_control(grid, nt, cfg["control.theta_amplitude"],
                                  _profile(cfg["control.theta_profile"], nt))
    return read_sequence(cfg["control.theta_path"], "theta", nt, grid)


def targets_from_config(cfg, grid, params, timegrid, u0, v0, solver):
    """Target sequences of length ``nt + 1``."""
    nt = timegrid.nt
    preset = cfg["targets.preset"]
    if preset == "zero":
        return ctl.constant_targets(grid, nt)
    if preset == "constant":
        return ctl.constant_targets(grid, nt, cfg["targets.u_value"], cfg["targets.v_value"])
    if preset == "file":
        path = cfg["targets.path"]
        return (read_sequence(path, "v_d", nt + 1, grid),
                read_sequence(path, "u_d", nt + 1, grid))
    star = ctl.vortex_control(grid, nt, cfg["targets.amplitude"],
                              _profile(cfg["targets.profile"], nt))
    return ctl.synthetic_targets(u0, v0, star, grid, params, timegrid, solver)


def build_problem(cfg: RunConfig) -> Problem:
    grid, params, tg, solver = cfg.grid(), cfg.physics(), cfg.timegrid(), cfg.solver()
    rng = SplitMix64(cfg.seed)
    u0, v0 = initial_data(cfg, grid, rng.spawn())
    theta = control_from_config(cfg, grid, tg.nt)
    v_d, u_d = targets_from_config(cfg, grid, params, tg, u0, v0, solver)
    cp = ctl.CostParams(cfg["control.beta"], v_d, u_d,
                        cfg["control.theta_min"], cfg["control.theta_max"])
    return Problem(cfg, grid, params, tg, solver, u0, v0, theta, cp, rng)


def opt_config(cfg: RunConfig) -> ctl.OptConfig:
    return ctl.OptConfig(max_iters=cfg["opt.max_iters"], tol=cfg["opt.tol"],
                         c1=cfg["opt.c1"], rho=cfg["opt.rho"], s0=cfg["opt.s0"],
                         residual_step=cfg["opt.residual_step"],
                         mode=cfg["control.projection"])


# ---------------------------------------------------------------------------
# report rows

def diagnostics_rows(traj, theta, cp: ctl.CostParams) -> list:
    """Per-step diagnostics plus each step's share of the cost.

    The cost columns hold the rectangle-rule contributions of step ``n``;
    they sum to the cost terms, and the final row (outside the quadrature)
    carries zeros.
    """
    nt, dt = traj.timegrid.nt, traj.timegrid.dt
    rows = []
    for n, d in enumerate(traj.diagnostics):
        row = dict(d)
        if n < nt:
            s = traj.snapshots[n]
            dv, du = s.v - cp.v_d[n], s.u - cp.u_d[n]
            row["J_track_v"] = 0.5 * dt * ops.inner_face(dv, dv)
            row["J_track_u"] = 0.5 * dt * ops.inner_cc(du, du)
            row["J_reg"] = 0.5 * cp.beta * dt * ops.inner_face(theta[n], theta[n])
        else:
            row["J_track_v"] = row["J_track_u"] = row["J_reg"] = 0.0
        rows.append(row)
    return rows


def directions(prob: Problem, count: int, smooth: bool = True) -> list:
    """``count`` seeded control directions from a stream separate from the data."""
    rng = prob.rng.spawn()
    nt = prob.timegrid.nt
    make = smooth_direction if smooth else rough_direction
    return [make(prob.grid, nt, rng) for _ in range(count)]


def gradcheck_report(prob: Problem):
    """Rows ``(direction, eps, fd, predicted, rel_error)`` and the worst best-error."""
    rows, worst = [], 0.0
    for k, h in enumerate(directions(prob, prob.cfg["check.directions"])):
        gc = ctl.gradient_check(prob.theta, h, prob.u0, prob.v0, prob.grid, prob.params,
                                prob.timegrid, prob.cost, solver=prob.solver)
        rows += [(k, e, f, gc.predicted, r) for e, f, r in zip(gc.eps, gc.fd, gc.rel_errors)]
        worst = max(worst, gc.best_error)
    return rows, worst


def taylor_report(prob: Problem):
    """Rows ``(direction, eps, remainder, order)`` and the smallest asymptotic order.

    The asymptotic orders are the two from the finest ``eps`` pairs.
    """
    rows, lowest = [], math.inf
    for k, h in enumerate(directions(prob, prob.cfg["check.directions"])):
        tr = ctl.taylor_test(prob.theta, h, prob.u0, prob.v0, prob.grid, prob.params,
                             prob.timegrid, prob.cost, solver=prob.solver)
        orders = [math.nan] + tr.orders
        rows += [(k, e, r, o) for e, r, o in zip(tr.eps, tr.remainders, orders)]
        if not tr.exact:
            lowest = min(lowest, min(tr.orders[-2:]))
    return rows, lowest


def linearized_report(prob: Problem, eps=None):
    """Superposition error and Taylor remainders of the control-to-state map.

    The default sweep is the Taylor sweep times ``check.state_eps_scale``:
    over short horizons the map is so close to linear that unit-size
    perturbations leave remainders at the rounding level.

    Returns ``(rows, linearity_error, lowest_order)`` with rows
    ``(quantity, eps, value, order)``.
    """
    if eps is None:
        eps = tuple(prob.cfg["check.state_eps_scale"] * e for e in ctl.TAYLOR_EPS)
    base = prob.forward()
    h1, h2 = directions(prob, 2)
    a, b = 0.7, -1.3
    l1 = solve_linearized(base, h1, prob.solver)
    l2 = solve_linearized(base, h2, prob.solver)
    l12 = solve_linearized(base, ctl.axpy(a, h1, [b * x for x in h2]), prob.solver)
    dt = prob.timegrid.dt
    num = den = 0.0
    for n in range(len(l12.phi1)):
        ev = l12.phi1[n] - (a * l1.phi1[n] + b * l2.phi1[n])
        eu = l12.phi2[n] - (a * l1.phi2[n] + b * l2.phi2[n])
        num += dt * (ops.inner_face(ev, ev) + ops.inner_cc(eu, eu))
        den += dt * (ops.inner_face(l12.phi1[n], l12.phi1[n]) + ops.inner_cc(l12.phi2[n], l12.phi2[n]))
    lin_err = math.sqrt(num / den) if den > 0 else 0.0
    rows = [("superposition", math.nan, lin_err, math.nan)]
    rem = []
    for e in eps:
        pert = prob.forward(ctl.axpy(e, h1, prob.theta))
        total = 0.0
        for n in range(1, len(pert.snapshots)):
            dv = pert.snapshots[n].v - base.snapshots[n].v - e * l1.phi1[n]
            du = pert.snapshots[n].u - base.snapshots[n].u - e * l1.phi2[n]
            total += dt * (ops.inner_face(dv, dv) + ops.inner_cc(du, du))
        rem.append(math.sqrt(total))
    orders = [math.nan] + ctl._orders(eps, rem)
    rows += [("remainder", e, r, o) for e, r, o in zip(eps, rem, orders)]
    finite = [o for o in orders[-2:] if not math.isnan(o)]
    return rows, lin_err, (min(finite) if finite else math.inf)


def duality_report(prob: Problem):
    """Rows ``(direction, lhs, rhs, rel_error)`` for rough random directions."""
    base = prob.forward()
    adj = solve_adjoint(base, prob.cost.v_d, prob.cost.u_d, prob.solver)
    rows, worst = [], 0.0
    for k, h in enumerate(directions(prob, prob.cfg["check.directions"], smooth=False)):
        lin = solve_linearized(base, h, prob.solver)
        lhs, rhs = ctl.duality_gap(base, lin, adj, h, prob.cost)
        rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
        rows.append((k, lhs, rhs, rel))
        worst = max(worst, rel)
    return rows, worst
