"""Backward sweep for the adjoint state (gamma1, gamma2, gamma3, q).

The sweep runs the forward splitting in reverse: within each backward step
the Stokes-adjoint update comes first and the Cahn-Hilliard-Oono adjoint
second.  Term by term:

* ``gamma1^n = P H^-1 P (gamma1^{n+1} + dt [u^ grad gamma2^{n+1} + (v^ - v_d)])``
  -- backward Euler for the adjoint Stokes system; ``u^ grad gamma2`` differs
  from ``-gamma2 grad u^`` by a gradient, which the projection removes.
* ``A gamma2^n = (carried load) - lam dt (grad w^ . gamma1^n)
  + dt (S - L) lam div(u^ gamma1^n)`` with the carried load
  ``gamma2^{n+1} + dt [v^ . grad gamma2^{n+1} + (f'(u^) - S) L gamma2^{n+1}
  + (f'(u^) - S) lam div(u^ gamma1^{n+1}) + (u^ - u_d)]`` -- the adjoint
  Cahn-Hilliard-Oono equation with the same stabilised operator ``A`` as
  the forward step; the ``div(u^ gamma1)`` pieces realise
  ``-lam grad u^ . gamma1`` inside ``gamma3``.
* ``gamma3^n = -L gamma2^n - lam div(u^ gamma1^n)`` is reconstructed for output.

With this arrangement every operation is the exact transpose of the
corresponding tangent operation, so the pairing
``sum dt <gamma1, h> = sum dt [<u^ - u_d, phi2> + <v^ - v_d, phi1>]`` holds
to linear-solver tolerance, and ``gamma1 + beta theta`` is the gradient
of the discrete cost.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import operators as ops
from .errors import ConfigurationError, NumericalBreakdown, SolverFailure
from .grid import ScalarField, VectorField
from .state import Trajectory, cho_solve, stokes_resolvent


@dataclass
class AdjTrajectory:
    gamma1: list
    gamma2: list
    gamma3: list
    q: list


def _check_targets(seq, nt, kind, name):
    if seq is None or len(seq) < nt:
        got = 0 if seq is None else len(seq)
        raise ConfigurationError(f"target {name} needs at least {nt} steps, got {got}")
    for n in range(nt):
        if not isinstance(seq[n], kind):
            raise ConfigurationError(f"target {name}[{n}] is missing or has the wrong type")


def solve_adjoint(base: Trajectory, v_d, u_d, solver=None) -> AdjTrajectory:
    """Adjoint fields along ``base`` for the tracking targets ``v_d`` and ``u_d``.

    Targets are indexed like the snapshots; entries ``0 .. nt-1`` are used.
    ``gamma1[n]`` pairs with the control of step ``n``.
    """
    grid, params = base.grid, base.params
    nt, dt = base.timegrid.nt, base.timegrid.dt
    _check_targets(v_d, nt, VectorField, "v_d")
    _check_targets(u_d, nt, ScalarField, "u_d")
    S, lam = params.stab_S, params.lam

    gamma1 = [None] * (nt + 1)
    gamma2 = [None] * (nt + 1)
    gamma3 = [None] * (nt + 1)
    q = [None] * (nt + 1)
    gamma1[nt], gamma2[nt] = VectorField(grid), ScalarField(grid)
    gamma3[nt], q[nt] = ScalarField(grid), ScalarField(grid)

    load_u = ScalarField(grid)  # sensitivity of the cost-to-go to u^{n+1}
    load_v = VectorField(grid)  # ... and to v^{n+1}
    for n in range(nt - 1, -1, -1):
        s0, s1 = base.snapshots[n], base.snapshots[n + 1]
        try:
            g1, psi1, psi2 = stokes_resolvent(load_v, params.mu, dt, solver)
            wbar = lam * dt * ops.div_fc(ops.interp_to_faces(s1.u) * g1)
            rhs = (load_u
                   - lam * dt * ops.interp_to_faces_adjoint(ops.grad_cc(s1.w) * g1)
                   + S * wbar - ops.laplace_cc(wbar))
            g2 = cho_solve(rhs, params, dt, solver)
        except (SolverFailure, NumericalBreakdown) as exc:
            raise SolverFailure(f"backward sweep: {exc}", step=n) from exc
        gamma1[n], gamma2[n] = g1, g2
        gamma3[n] = -ops.laplace_cc(g2) - (1.0 / dt) * wbar
        q[n] = (1.0 / dt) * (psi1 + psi2)

        coef = s0.u.map(ops.double_well_deriv2) - ScalarField.constant(grid, S)
        grad_g2 = ops.grad_cc(g2)
        load_u = (g2 + dt * ops.interp_to_faces_adjoint(s0.v * grad_g2)
                  + dt * (coef * ops.laplace_cc(g2)) + coef * wbar
                  + dt * (s0.u - u_d[n]))
        load_v = g1 + dt * (ops.interp_to_faces(s0.u) * grad_g2) + dt * (s0.v - v_d[n])
    return AdjTrajectory(gamma1, gamma2, gamma3, q)
