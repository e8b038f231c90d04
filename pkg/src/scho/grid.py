"""Rectangular cell-centred grid and the two staggered field layouts.

Scalars (order parameter, chemical potential, pressure) live at cell
centres in an ``(nx, ny)`` array.  Vectors use the MAC layout: the
x-component sits on vertical faces, shape ``(nx + 1, ny)``, the
y-component on horizontal faces, shape ``(nx, ny + 1)``.  Index ``i``
always runs along x.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, PreconditionError


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0
    hx: float = field(init=False)
    hy: float = field(init=False)

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ConfigurationError("grid.nx and grid.ny must be integers")
        if self.nx < 4:
            raise ConfigurationError(f"grid.nx must be >= 4, got {self.nx}")
        if self.ny < 4:
            raise ConfigurationError(f"grid.ny must be >= 4, got {self.ny}")
        if not (np.isfinite(self.Lx) and self.Lx > 0):
            raise ConfigurationError(f"grid.Lx must be positive, got {self.Lx}")
        if not (np.isfinite(self.Ly) and self.Ly > 0):
            raise ConfigurationError(f"grid.Ly must be positive, got {self.Ly}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "Lx", float(self.Lx))
        object.__setattr__(self, "Ly", float(self.Ly))
        object.__setattr__(self, "hx", self.Lx / self.nx)
        object.__setattr__(self, "hy", self.Ly / self.ny)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    def xc(self) -> np.ndarray:
        """Cell-centre abscissae, length ``nx``."""
        return (np.arange(self.nx) + 0.5) * self.hx

    def yc(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.hy

    def xf(self) -> np.ndarray:
        """Abscissae of vertical faces, length ``nx + 1``."""
        return np.arange(self.nx + 1) * self.hx

    def yf(self) -> np.ndarray:
        return np.arange(self.ny + 1) * self.hy

    def cell_coords(self):
        return np.meshgrid(self.xc(), self.yc(), indexing="ij")

    def xface_coords(self):
        return np.meshgrid(self.xf(), self.yc(), indexing="ij")

    def yface_coords(self):
        return np.meshgrid(self.xc(), self.yf(), indexing="ij")


def make_grid(nx: int, ny: int, Lx: float = 1.0, Ly: float = 1.0) -> GridSpec:
    return GridSpec(nx, ny, Lx, Ly)


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise PreconditionError(f"grid mismatch: {a.grid} vs {b.grid}")


def _as_array(values, shape, what):
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise PreconditionError(f"{what} must have shape {shape}, got {arr.shape}")
    return arr


class ScalarField:
    """Cell-centred scalar.  Supports ``+``, ``-`` and scalar ``*``."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values=None):
        self.grid = grid
        shape = (grid.nx, grid.ny)
        if values is None:
            self.values = np.zeros(shape)
        else:
            self.values = _as_array(values, shape, "ScalarField values")

    @classmethod
    def _wrap(cls, grid, arr):
        obj = cls.__new__(cls)
        obj.grid = grid
        obj.values = arr
        return obj

    @classmethod
    def constant(cls, grid, c):
        return cls._wrap(grid, np.full((grid.nx, grid.ny), float(c)))

    @classmethod
    def from_function(cls, grid, fn):
        X, Y = grid.cell_coords()
        return cls(grid, np.broadcast_to(fn(X, Y), (grid.nx, grid.ny)))

    def copy(self):
        return ScalarField._wrap(self.grid, self.values.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def dot(self, other) -> float:
        """Plain Euclidean dot product of the coefficient arrays."""
        return float(np.vdot(self.values, other.values))

    def map(self, fn):
        return ScalarField._wrap(self.grid, fn(self.values))

    def __add__(self, other):
        _check_same_grid(self, other)
        return ScalarField._wrap(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return ScalarField._wrap(self.grid, self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            _check_same_grid(self, c)
            return ScalarField._wrap(self.grid, self.values * c.values)
        return ScalarField._wrap(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField._wrap(self.grid, -self.values)

    def __repr__(self):
        return f"ScalarField(nx={self.grid.nx}, ny={self.grid.ny})"


class VectorField:
    """Face-centred (MAC) vector field.

    ``xvals[0, :]``, ``xvals[nx, :]``, ``yvals[:, 0]`` and ``yvals[:, ny]``
    are the boundary-normal entries.
    """

    __slots__ = ("grid", "xvals", "yvals")

    def __init__(self, grid: GridSpec, xvals=None, yvals=None):
        self.grid = grid
        xs, ys = (grid.nx + 1, grid.ny), (grid.nx, grid.ny + 1)
        self.xvals = np.zeros(xs) if xvals is None else _as_array(xvals, xs, "xvals")
        self.yvals = np.zeros(ys) if yvals is None else _as_array(yvals, ys, "yvals")

    @classmethod
    def _wrap(cls, grid, xa, ya):
        obj = cls.__new__(cls)
        obj.grid = grid
        obj.xvals = xa
        obj.yvals = ya
        return obj

    @classmethod
    def constant(cls, grid, cx, cy=None):
        cy = cx if cy is None else cy
        return cls._wrap(grid, np.full((grid.nx + 1, grid.ny), float(cx)),
                         np.full((grid.nx, grid.ny + 1), float(cy)))

    @classmethod
    def from_function(cls, grid, fx, fy):
        """Sample ``fx`` on vertical faces and ``fy`` on horizontal faces."""
        Xx, Yx = grid.xface_coords()
        Xy, Yy = grid.yface_coords()
        return cls(grid, np.broadcast_to(fx(Xx, Yx), Xx.shape),
                   np.broadcast_to(fy(Xy, Yy), Xy.shape))

    def copy(self):
        return VectorField._wrap(self.grid, self.xvals.copy(), self.yvals.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.xvals)) and np.all(np.isfinite(self.yvals)))

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.xvals)), np.max(np.abs(self.yvals))))

    def boundary_normal_max(self) -> float:
        """Largest magnitude among the wall-normal entries."""
        return float(max(np.max(np.abs(self.xvals[[0, -1], :])),
                         np.max(np.abs(self.yvals[:, [0, -1]]))))

    def with_zero_boundary_normal(self):
        out = self.copy()
        out.xvals[[0, -1], :] = 0.0
        out.yvals[:, [0, -1]] = 0.0
        return out

    def dot(self, other) -> float:
        return float(np.vdot(self.xvals, other.xvals) + np.vdot(self.yvals, other.yvals))

    def map(self, fn):
        return VectorField._wrap(self.grid, fn(self.xvals), fn(self.yvals))

    def __add__(self, other):
        _check_same_grid(self, other)
        return VectorField._wrap(self.grid, self.xvals + other.xvals, self.yvals + other.yvals)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return VectorField._wrap(self.grid, self.xvals - other.xvals, self.yvals - other.yvals)

    def __mul__(self, c):
        if isinstance(c, VectorField):
            _check_same_grid(self, c)
            return VectorField._wrap(self.grid, self.xvals * c.xvals, self.yvals * c.yvals)
        c = float(c)
        return VectorField._wrap(self.grid, self.xvals * c, self.yvals * c)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField._wrap(self.grid, -self.xvals, -self.yvals)

    def __repr__(self):
        return f"VectorField(nx={self.grid.nx}, ny={self.grid.ny})"


def check_no_slip(v: VectorField, tol: float = 1e-14) -> None:
    """Raise unless every boundary-normal entry of ``v`` is below ``tol``."""
    bn = v.boundary_normal_max()
    if bn > tol:
        raise PreconditionError(f"boundary-normal velocity {bn:.3e} exceeds {tol:g}")
