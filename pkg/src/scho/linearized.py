"""Sensitivity (tangent) system around a stored forward trajectory.

The scheme is the forward step with the nonlinear terms replaced by their
derivatives at the stored state, so ``solve_linearized(base, h)`` is the
derivative of the discrete control-to-state map in direction ``h``::

    A phi2+ = phi2 - dt [div(v^ phi2) + div(phi1 u^)] + dt L((f'(u^) - S) phi2)
    phi3+   = -L phi2+ + (f'(u^) - S) phi2 + S phi2+
    phi1+   = P H^-1 P (phi1 + dt [-lam phi2+ grad w^+ - lam u^+ grad phi3+ + h])
"""

from __future__ import annotations

from dataclasses import dataclass

from . import operators as ops
from .errors import ConfigurationError, NumericalBreakdown, SolverFailure
from .grid import ScalarField, VectorField
from .state import Trajectory, cho_solve, stokes_resolvent


@dataclass
class LinTrajectory:
    phi1: list
    phi2: list
    phi3: list
    pressure: list


def solve_linearized(base: Trajectory, h, solver=None) -> LinTrajectory:
    """Directional derivative of the state along the control direction ``h``."""
    grid, params = base.grid, base.params
    nt, dt = base.timegrid.nt, base.timegrid.dt
    h = list(h)
    if len(h) != nt:
        raise ConfigurationError(f"direction has {len(h)} steps, expected {nt}")
    S, lam = params.stab_S, params.lam

    phi1 = [VectorField(grid)]
    phi2 = [ScalarField(grid)]
    phi3 = [ScalarField(grid)]
    pres = [ScalarField(grid)]
    for n in range(nt):
        s0, s1 = base.snapshots[n], base.snapshots[n + 1]
        a, b = phi1[n], phi2[n]
        coef = s0.u.map(ops.double_well_deriv2) - ScalarField.constant(grid, S)
        try:
            rhs = (b - dt * (ops.advect(s0.v, b) + ops.advect(a, s0.u))
                   + dt * ops.laplace_cc(coef * b))
            b1 = cho_solve(rhs, params, dt, solver)
            c1 = -ops.laplace_cc(b1) + coef * b + S * b1
            force = (ops.surface_force(b1, s1.w, lam) + ops.surface_force(s1.u, c1, lam)
                     + h[n].with_zero_boundary_normal())
            a1, psi1, psi2 = stokes_resolvent(a + dt * force, params.mu, dt, solver)
        except (SolverFailure, NumericalBreakdown) as exc:
            raise SolverFailure(str(exc), step=n) from exc
        phi1.append(a1)
        phi2.append(b1)
        phi3.append(c1)
        pres.append(pres[n] + (1.0 / dt) * (psi1 + psi2))
    return LinTrajectory(phi1, phi2, phi3, pres)
