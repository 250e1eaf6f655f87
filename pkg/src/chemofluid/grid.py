"""Uniform Cartesian MAC grid, field storage and discrete differential operators.

Scalar fields are plain ``numpy`` arrays of shape ``(nx, ny)`` indexed ``f[i, j]``
with ``i`` along x.  Velocities live on faces: ``ux`` has shape ``(nx + 1, ny)``
(vertical faces) and ``uy`` has shape ``(nx, ny + 1)`` (horizontal faces).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class BcKind(enum.Enum):
    NEUMANN_ZERO = "neumann"
    DIRICHLET_ZERO = "dirichlet"


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx and ny must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid needs at least 4 cells per direction, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def cell_centers(self):
        """Return ``(X, Y)`` arrays of cell-center coordinates, ``ij`` indexing."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def x_faces(self):
        """Coordinates of the vertical faces that carry ``ux``."""
        x = np.arange(self.nx + 1) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def y_faces(self):
        """Coordinates of the horizontal faces that carry ``uy``."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def corners(self):
        x = np.arange(self.nx + 1) * self.hx
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))


@dataclass
class StaggeredVectorField:
    grid: GridSpec
    ux: np.ndarray
    uy: np.ndarray

    def __post_init__(self):
        self.ux = np.asarray(self.ux, dtype=float)
        self.uy = np.asarray(self.uy, dtype=float)
        g = self.grid
        if self.ux.shape != (g.nx + 1, g.ny) or self.uy.shape != (g.nx, g.ny + 1):
            raise ValueError(
                f"face arrays have shapes {self.ux.shape}, {self.uy.shape}; "
                f"expected {(g.nx + 1, g.ny)}, {(g.nx, g.ny + 1)}"
            )

    @classmethod
    def zeros(cls, grid: GridSpec) -> "StaggeredVectorField":
        return cls(grid, np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    def copy(self) -> "StaggeredVectorField":
        return StaggeredVectorField(self.grid, self.ux.copy(), self.uy.copy())

    def pin_boundary(self) -> "StaggeredVectorField":
        """Set the wall-normal boundary faces to the no-slip value in place."""
        self.ux[0, :] = 0.0
        self.ux[-1, :] = 0.0
        self.uy[:, 0] = 0.0
        self.uy[:, -1] = 0.0
        return self

    def boundary_max(self) -> float:
        return float(max(np.abs(self.ux[[0, -1], :]).max(), np.abs(self.uy[:, [0, -1]]).max()))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.ux).all() and np.isfinite(self.uy).all())

    def at_centers(self):
        """Face values averaged to cell centers (lossy)."""
        return 0.5 * (self.ux[1:, :] + self.ux[:-1, :]), 0.5 * (self.uy[:, 1:] + self.uy[:, :-1])

    def __add__(self, other):
        return StaggeredVectorField(self.grid, self.ux + other.ux, self.uy + other.uy)

    def __sub__(self, other):
        return StaggeredVectorField(self.grid, self.ux - other.ux, self.uy - other.uy)

    def __mul__(self, s):
        return StaggeredVectorField(self.grid, self.ux * s, self.uy * s)

    __rmul__ = __mul__


def grad_to_faces(grid: GridSpec, f: np.ndarray, bc: BcKind = BcKind.NEUMANN_ZERO) -> StaggeredVectorField:
    """Centered face differences of a cell field.

    Boundary faces get 0 for ``NEUMANN_ZERO`` (reflected ghost) and the
    one-sided value ``+-2 f / h`` for ``DIRICHLET_ZERO`` (odd ghost).
    """
    hx, hy = grid.hx, grid.hy
    gx = np.zeros((grid.nx + 1, grid.ny))
    gy = np.zeros((grid.nx, grid.ny + 1))
    gx[1:-1, :] = (f[1:, :] - f[:-1, :]) / hx
    gy[:, 1:-1] = (f[:, 1:] - f[:, :-1]) / hy
    if bc is BcKind.DIRICHLET_ZERO:
        gx[0, :] = 2.0 * f[0, :] / hx
        gx[-1, :] = -2.0 * f[-1, :] / hx
        gy[:, 0] = 2.0 * f[:, 0] / hy
        gy[:, -1] = -2.0 * f[:, -1] / hy
    return StaggeredVectorField(grid, gx, gy)


def divergence(F: StaggeredVectorField) -> np.ndarray:
    g = F.grid
    return (F.ux[1:, :] - F.ux[:-1, :]) / g.hx + (F.uy[:, 1:] - F.uy[:, :-1]) / g.hy


def laplacian(grid: GridSpec, f: np.ndarray, bc: BcKind = BcKind.NEUMANN_ZERO) -> np.ndarray:
    # Defined as the composition so that divergence(grad_to_faces(f)) == laplacian(f) exactly.
    return divergence(grad_to_faces(grid, f, bc))


def integrate(grid: GridSpec, f: np.ndarray) -> float:
    """Midpoint quadrature with a fixed row-major accumulation order."""
    return float(np.sum(np.ravel(f, order="C"))) * grid.hx * grid.hy


def upwind_fluxes(f: np.ndarray, a: StaggeredVectorField) -> StaggeredVectorField:
    """Face fluxes ``a * f_upwind``; wall faces carry whatever ``a`` holds there (normally 0)."""
    fx = np.zeros_like(a.ux)
    fy = np.zeros_like(a.uy)
    ax = a.ux[1:-1, :]
    fx[1:-1, :] = ax * np.where(ax > 0.0, f[:-1, :], f[1:, :])
    ay = a.uy[:, 1:-1]
    fy[:, 1:-1] = ay * np.where(ay > 0.0, f[:, :-1], f[:, 1:])
    return StaggeredVectorField(a.grid, fx, fy)


def advect_conservative(grid: GridSpec, f: np.ndarray, u: StaggeredVectorField) -> np.ndarray:
    """First-order upwind flux divergence ``div(u f)``.

    Wall faces contribute no flux, so the result sums to zero (up to round-off)
    for any ``f``; for discretely solenoidal ``u`` it annihilates constants.
    """
    return divergence(upwind_fluxes(f, u))


def outflow_rate(a: StaggeredVectorField) -> np.ndarray:
    """Per-cell sum of outgoing face speeds over cell width (1/time).

    An explicit upwind update with ``dt * rate <= 1`` keeps every cell nonnegative.
    """
    g = a.grid
    ux = a.ux.copy()
    uy = a.uy.copy()
    ux[[0, -1], :] = 0.0
    uy[:, [0, -1]] = 0.0
    out_x = np.maximum(ux[1:, :], 0.0) + np.maximum(-ux[:-1, :], 0.0)
    out_y = np.maximum(uy[:, 1:], 0.0) + np.maximum(-uy[:, :-1], 0.0)
    return out_x / g.hx + out_y / g.hy
