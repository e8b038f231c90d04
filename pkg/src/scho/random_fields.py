"""Seeded random fields and control directions."""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, ScalarField, VectorField
from .rng import SplitMix64


def random_scalar(grid: GridSpec, rng: SplitMix64, low=-1.0, high=1.0) -> ScalarField:
    return ScalarField(grid, rng.uniform((grid.nx, grid.ny), low, high))


def random_face(grid: GridSpec, rng: SplitMix64, low=-1.0, high=1.0,
                no_slip=True) -> VectorField:
    """Independent uniform face values; wall-normal entries zeroed if ``no_slip``."""
    v = VectorField(grid, rng.uniform((grid.nx + 1, grid.ny), low, high),
                    rng.uniform((grid.nx, grid.ny + 1), low, high))
    return v.with_zero_boundary_normal() if no_slip else v


def curl_of_nodal(grid: GridSpec, psi: np.ndarray) -> VectorField:
    """Face field ``(d psi/dy, -d psi/dx)`` from nodal values ``psi``.

    Discretely divergence free; wall-normal flux vanishes when ``psi`` is
    constant along the boundary.
    """
    tx = (psi[:, 1:] - psi[:, :-1]) / grid.hy
    ty = -(psi[1:, :] - psi[:-1, :]) / grid.hx
    return VectorField(grid, tx, ty)


def wall_sine(x, k=1):
    """``sin(k pi x)`` on nodes in [0, 1] with exact zeros at both ends."""
    s = np.sin(np.pi * k * x)
    s[0] = s[-1] = 0.0
    return s


def _sine_modes(grid, modes):
    xn = grid.xf() / grid.Lx
    yn = grid.yf() / grid.Ly
    sx = [wall_sine(xn, j) for j in range(1, modes + 1)]
    sy = [wall_sine(yn, k) for k in range(1, modes + 1)]
    return sx, sy


def smooth_solenoidal(grid: GridSpec, rng: SplitMix64, modes=3) -> VectorField:
    """Curl of a random low-mode sine stream function, scaled to unit max."""
    sx, sy = _sine_modes(grid, modes)
    a = rng.uniform((modes, modes), -1.0, 1.0)
    psi = sum(a[j, k] * np.outer(sx[j], sy[k]) for j in range(modes) for k in range(modes))
    v = curl_of_nodal(grid, psi)
    return (1.0 / max(v.max_abs(), 1e-300)) * v


def smooth_direction(grid: GridSpec, nt: int, rng: SplitMix64, modes=3) -> list:
    """Control direction smooth in space and time: ``a + b sin(pi t / T)``."""
    a = smooth_solenoidal(grid, rng, modes)
    b = smooth_solenoidal(grid, rng, modes)
    return [a + np.sin(np.pi * (n + 0.5) / nt) * b for n in range(nt)]


def rough_direction(grid: GridSpec, nt: int, rng: SplitMix64) -> list:
    """Uniform random face values at every step."""
    return [random_face(grid, rng) for _ in range(nt)]
