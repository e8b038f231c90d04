"""Finite-difference operators on the MAC grid.

Boundary conditions are built in: scalar operators use homogeneous
Neumann conditions (zero flux through every wall), the face Laplacian
uses no-slip Dirichlet conditions.  With the quadrature weights of
:func:`inner_cc` and :func:`inner_face` the discrete gradient and
divergence are exact negative adjoints of each other for face fields
whose boundary-normal entries vanish, so ``laplace_cc`` is symmetric
negative semi-definite and ``laplace_face`` is symmetric negative
definite.
"""

from __future__ import annotations

import numpy as np

from .grid import ScalarField, VectorField, check_no_slip, _check_same_grid


# double-well potential F(s) = (s^2 - 1)^2 / 4 and its derivatives

def double_well(s):
    return 0.25 * (s * s - 1.0) ** 2


def double_well_deriv(s):
    return s * s * s - s


def double_well_deriv2(s):
    return 3.0 * s * s - 1.0


def double_well_deriv3(s):
    return 6.0 * s


# array kernels, shared by the field-level wrappers and the solvers

def _grad(u, hx, hy):
    nx, ny = u.shape
    gx = np.zeros((nx + 1, ny))
    gy = np.zeros((nx, ny + 1))
    gx[1:-1, :] = (u[1:, :] - u[:-1, :]) / hx
    gy[:, 1:-1] = (u[:, 1:] - u[:, :-1]) / hy
    return gx, gy


def _div(vx, vy, hx, hy):
    return (vx[1:, :] - vx[:-1, :]) / hx + (vy[:, 1:] - vy[:, :-1]) / hy


def _lap_cc(u, hx, hy):
    out = np.zeros_like(u)
    dx = (u[1:, :] - u[:-1, :]) / (hx * hx)
    dy = (u[:, 1:] - u[:, :-1]) / (hy * hy)
    out[:-1, :] += dx
    out[1:, :] -= dx
    out[:, :-1] += dy
    out[:, 1:] -= dy
    return out


def _lap_xface(a, hx, hy):
    # normal direction: wall entries are the Dirichlet values themselves (zero)
    out = np.zeros_like(a)
    inner = a[1:-1, :]
    padded = np.zeros((a.shape[0], a.shape[1]))
    padded[1:-1, :] = inner
    out[1:-1, :] = (padded[2:, :] - 2.0 * inner + padded[:-2, :]) / (hx * hx)
    # tangential direction: odd reflection puts zero on the wall
    ext = np.concatenate([-inner[:, :1], inner, -inner[:, -1:]], axis=1)
    out[1:-1, :] += (ext[:, 2:] - 2.0 * inner + ext[:, :-2]) / (hy * hy)
    return out


def _lap_face(vx, vy, hx, hy):
    lx = _lap_xface(vx, hx, hy)
    ly = _lap_xface(vy.T, hy, hx).T
    return lx, ly


def _interp(u):
    """Cell-to-face averaging; boundary faces copy the adjacent cell."""
    nx, ny = u.shape
    ux = np.empty((nx + 1, ny))
    uy = np.empty((nx, ny + 1))
    ux[1:-1, :] = 0.5 * (u[1:, :] + u[:-1, :])
    ux[0, :] = u[0, :]
    ux[-1, :] = u[-1, :]
    uy[:, 1:-1] = 0.5 * (u[:, 1:] + u[:, :-1])
    uy[:, 0] = u[:, 0]
    uy[:, -1] = u[:, -1]
    return ux, uy


def _interp_T(px, py):
    """Adjoint of ``_interp`` for face fields with zero boundary-normal entries."""
    px = px.copy()
    py = py.copy()
    px[[0, -1], :] = 0.0
    py[:, [0, -1]] = 0.0
    return 0.5 * (px[:-1, :] + px[1:, :]) + 0.5 * (py[:, :-1] + py[:, 1:])


def lap_cc_diagonal(grid):
    """Diagonal of the Neumann 5-point Laplacian, and the diagonal of its square."""
    nx, ny = grid.nx, grid.ny
    cx = np.full(nx, 2.0)
    cx[[0, -1]] = 1.0
    cy = np.full(ny, 2.0)
    cy[[0, -1]] = 1.0
    ax = 1.0 / grid.hx**2
    ay = 1.0 / grid.hy**2
    d = -(cx[:, None] * ax + cy[None, :] * ay)
    d2 = d * d + cx[:, None] * ax * ax + cy[None, :] * ay * ay
    return d, d2


def lap_face_diagonal(grid):
    """Diagonals of the x- and y-face Laplacians (zero on boundary-normal rows)."""
    nx, ny = grid.nx, grid.ny
    ax = 1.0 / grid.hx**2
    ay = 1.0 / grid.hy**2
    dx = np.full((nx + 1, ny), -2.0 * ax - 2.0 * ay)
    dx[:, [0, -1]] -= ay
    dx[[0, -1], :] = 0.0
    dy = np.full((nx, ny + 1), -2.0 * ax - 2.0 * ay)
    dy[[0, -1], :] -= ax
    dy[:, [0, -1]] = 0.0
    return dx, dy


# field-level operators

def grad_cc(u: ScalarField) -> VectorField:
    """Face gradient of a cell field; boundary-normal entries are zero (Neumann)."""
    g = u.grid
    gx, gy = _grad(u.values, g.hx, g.hy)
    return VectorField._wrap(g, gx, gy)


def div_fc(v: VectorField) -> ScalarField:
    """MAC divergence, using every face including the boundary-normal ones."""
    g = v.grid
    return ScalarField._wrap(g, _div(v.xvals, v.yvals, g.hx, g.hy))


def laplace_cc(u: ScalarField) -> ScalarField:
    """Neumann 5-point Laplacian; equals ``div_fc(grad_cc(u))``."""
    g = u.grid
    return ScalarField._wrap(g, _lap_cc(u.values, g.hx, g.hy))


def laplace_face(v: VectorField) -> VectorField:
    """Componentwise 5-point Laplacian with no-slip walls.

    Boundary-normal entries are treated as the (zero) wall values and the
    result there is zero.
    """
    g = v.grid
    lx, ly = _lap_face(v.xvals, v.yvals, g.hx, g.hy)
    return VectorField._wrap(g, lx, ly)


def interp_to_faces(u: ScalarField) -> VectorField:
    ux, uy = _interp(u.values)
    return VectorField._wrap(u.grid, ux, uy)


def interp_to_faces_adjoint(psi: VectorField) -> ScalarField:
    """Transpose of :func:`interp_to_faces` in the quadrature inner products.

    Only valid for face fields with vanishing boundary-normal entries, which
    is the only way it is used.
    """
    return ScalarField._wrap(psi.grid, _interp_T(psi.xvals, psi.yvals))


def advect(v: VectorField, u: ScalarField) -> ScalarField:
    """Conservative advection ``div(v u)`` with centred face values of ``u``.

    Raises :class:`PreconditionError` if ``v`` does not vanish through the walls.
    """
    _check_same_grid(v, u)
    check_no_slip(v)
    g = u.grid
    ux, uy = _interp(u.values)
    return ScalarField._wrap(g, _div(v.xvals * ux, v.yvals * uy, g.hx, g.hy))


def surface_force(u: ScalarField, w: ScalarField, lam: float) -> VectorField:
    """Capillary forcing ``-lam * u * grad(w)`` on faces."""
    _check_same_grid(u, w)
    g = u.grid
    ux, uy = _interp(u.values)
    gx, gy = _grad(w.values, g.hx, g.hy)
    return VectorField._wrap(g, -lam * ux * gx, -lam * uy * gy)


def face_weights(grid):
    """Quadrature weights of the face inner product (half cells on the walls)."""
    wx = np.full((grid.nx + 1, grid.ny), grid.cell_area)
    wx[[0, -1], :] *= 0.5
    wy = np.full((grid.nx, grid.ny + 1), grid.cell_area)
    wy[:, [0, -1]] *= 0.5
    return wx, wy


def inner_cc(a: ScalarField, b: ScalarField) -> float:
    _check_same_grid(a, b)
    return float(np.vdot(a.values, b.values)) * a.grid.cell_area


def inner_face(a: VectorField, b: VectorField) -> float:
    _check_same_grid(a, b)
    g = a.grid
    ax = a.xvals * b.xvals
    ay = a.yvals * b.yvals
    interior = ax[1:-1, :].sum() + ay[:, 1:-1].sum()
    walls = 0.5 * (ax[[0, -1], :].sum() + ay[:, [0, -1]].sum())
    return float(interior + walls) * g.cell_area


def mean_cc(a: ScalarField) -> float:
    return float(a.values.sum()) * a.grid.cell_area / a.grid.area


def norm_cc(a: ScalarField) -> float:
    return float(np.sqrt(inner_cc(a, a)))


def norm_face(a: VectorField) -> float:
    return float(np.sqrt(inner_face(a, a)))
