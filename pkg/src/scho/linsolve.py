"""Jacobi-preconditioned conjugate gradients on grid fields."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .errors import ConfigurationError, NumericalBreakdown, PreconditionError
from .grid import ScalarField, VectorField

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool


def default_maxiter(grid) -> int:
    return 10 * grid.nx * grid.ny


def _zero_mean(x: ScalarField) -> ScalarField:
    return ScalarField._wrap(x.grid, x.values - x.values.mean())


def _zeros_like(x):
    if isinstance(x, ScalarField):
        return ScalarField(x.grid)
    return VectorField(x.grid)


def _jacobi(diag):
    if diag is None:
        return lambda r: r
    if isinstance(diag, ScalarField):
        inv = 1.0 / diag.values
        return lambda r: ScalarField._wrap(r.grid, r.values * inv)
    invx = 1.0 / diag.xvals
    invy = 1.0 / diag.yvals
    return lambda r: VectorField._wrap(r.grid, r.xvals * invx, r.yvals * invy)


def cg_solve(apply, rhs, tol=DEFAULT_TOL, maxiter=None, nullspace_mean=False,
             x0=None, diag=None, precond=None):
    """Solve ``apply(x) = rhs`` for a symmetric positive definite ``apply``.

    Parameters
    ----------
    apply : callable
        Linear map taking and returning fields of the same type as ``rhs``.
    rhs : ScalarField or VectorField
    tol : float
        Relative residual target ``||rhs - apply(x)|| <= tol * ||rhs||``.
    maxiter : int, optional
        Defaults to ``10 * nx * ny``.
    nullspace_mean : bool
        Treat constants as the nullspace: the right-hand side is projected to
        zero mean and the returned solution has zero mean.  Scalar fields only.
    x0 : field, optional
        Initial guess.
    diag : field, optional
        Diagonal of the operator, used as a Jacobi preconditioner.
    precond : callable, optional
        Symmetric positive definite preconditioner; takes precedence over
        ``diag``.

    Returns
    -------
    x, SolveReport
        Exhausting ``maxiter`` returns ``converged=False``; non-finite values
        raise :class:`NumericalBreakdown`.
    """
    if maxiter is None:
        maxiter = default_maxiter(rhs.grid)
    if nullspace_mean and not isinstance(rhs, ScalarField):
        raise PreconditionError("nullspace_mean only applies to scalar fields")
    if not rhs.is_finite():
        raise NumericalBreakdown("non-finite right-hand side")

    proj = _zero_mean if nullspace_mean else (lambda r: r)
    if precond is None:
        precond = _jacobi(diag)

    b = proj(rhs)
    bnorm = math.sqrt(b.dot(b))
    if bnorm == 0.0:
        return _zeros_like(rhs), SolveReport(0, 0.0, True)

    x = _zeros_like(rhs) if x0 is None else proj(x0.copy())
    r = b - apply(x) if x0 is not None else b.copy()
    r = proj(r)
    it = 0
    rel = math.sqrt(r.dot(r)) / bnorm
    restarts = 0
    while True:
        # restart loop: recompute the true residual after each apparent convergence
        z = proj(precond(r))
        p = z
        rz = r.dot(z)
        while rel > tol and it < maxiter:
            Ap = apply(p)
            if nullspace_mean:
                Ap = proj(Ap)
            pAp = p.dot(Ap)
            if not math.isfinite(pAp):
                raise NumericalBreakdown(f"non-finite curvature at CG iteration {it}")
            if pAp <= 0.0:
                raise NumericalBreakdown(f"operator not positive definite (p.Ap = {pAp:.3e})")
            a = rz / pAp
            x = x + a * p
            r = r - a * Ap
            it += 1
            rel = math.sqrt(r.dot(r)) / bnorm
            if not math.isfinite(rel):
                raise NumericalBreakdown(f"non-finite residual at CG iteration {it}")
            if rel <= tol:
                break
            z = proj(precond(r))
            rz_new = r.dot(z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        true_r = proj(b - apply(x))
        rel = math.sqrt(true_r.dot(true_r)) / bnorm
        if rel <= tol or it >= maxiter or restarts >= 5:
            break
        restarts += 1
        r = true_r
    if nullspace_mean:
        x = proj(x)
    return x, SolveReport(it, rel, rel <= tol)


@dataclass(frozen=True)
class SolverOptions:
    """CG settings used by every time-step solve."""

    tol: float = DEFAULT_TOL
    maxiter: int | None = None
    precond: str = "spectral"

    def __post_init__(self):
        if self.precond not in ("spectral", "jacobi"):
            raise ConfigurationError(f"unknown preconditioner {self.precond!r}")
        if not (self.tol > 0):
            raise ConfigurationError(f"solver.cg_tol must be positive, got {self.tol}")
        if self.maxiter is not None and self.maxiter < 1:
            raise ConfigurationError(f"solver.cg_maxiter must be >= 1, got {self.maxiter}")


def neumann_laplacian_eigenvalues(grid) -> np.ndarray:
    """Eigenvalues of the Neumann 5-point Laplacian in the DCT-II basis."""
    kx = np.arange(grid.nx)
    ky = np.arange(grid.ny)
    lx = -4.0 / grid.hx**2 * np.sin(np.pi * kx / (2 * grid.nx)) ** 2
    ly = -4.0 / grid.hy**2 * np.sin(np.pi * ky / (2 * grid.ny)) ** 2
    return lx[:, None] + ly[None, :]


def spectral_preconditioner(grid, symbol):
    """Preconditioner applying ``1 / symbol(lap_eigs)`` in the DCT-II basis.

    For a polynomial in the Neumann Laplacian this is its exact inverse.
    Zero symbol entries (the constant mode of a singular operator) are mapped
    to zero.
    """
    s = symbol(neumann_laplacian_eigenvalues(grid))
    inv = np.zeros_like(s)
    nz = s != 0
    inv[nz] = 1.0 / s[nz]

    def apply(r: ScalarField) -> ScalarField:
        c = fft.dctn(r.values, type=2, norm="ortho")
        return ScalarField._wrap(r.grid, fft.idctn(c * inv, type=2, norm="ortho"))

    return apply


def _noslip_component_eigenvalues(n_normal, n_tan, h_normal, h_tan):
    kn = np.arange(1, n_normal)
    kt = np.arange(1, n_tan + 1)
    ln = -4.0 / h_normal**2 * np.sin(np.pi * kn / (2 * n_normal)) ** 2
    lt = -4.0 / h_tan**2 * np.sin(np.pi * kt / (2 * n_tan)) ** 2
    return ln[:, None] + lt[None, :]


def face_spectral_preconditioner(grid, symbol):
    """Preconditioner applying ``1 / symbol(lap_eigs)`` to no-slip face fields.

    Interior entries of each component diagonalize in a DST-I basis along the
    normal direction (Dirichlet walls) and a DST-II basis along the tangential
    one (odd reflection).  Wall-normal entries pass through unchanged.
    """
    inv_x = 1.0 / symbol(_noslip_component_eigenvalues(grid.nx, grid.ny, grid.hx, grid.hy))
    inv_y = 1.0 / symbol(_noslip_component_eigenvalues(grid.ny, grid.nx, grid.hy, grid.hx))

    def solve_component(a, inv):
        c = fft.dst(fft.dst(a, type=1, axis=0, norm="ortho"), type=2, axis=1, norm="ortho")
        c *= inv
        return fft.idst(fft.idst(c, type=2, axis=1, norm="ortho"), type=1, axis=0, norm="ortho")

    def apply(r):
        xo = r.xvals.copy()
        yo = r.yvals.copy()
        xo[1:-1, :] = solve_component(r.xvals[1:-1, :], inv_x)
        yo[:, 1:-1] = solve_component(r.yvals[:, 1:-1].T, inv_y).T
        return type(r)._wrap(r.grid, xo, yo)

    return apply
