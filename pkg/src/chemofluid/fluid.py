"""Incompressible Navier-Stokes step on the MAC grid with buoyancy ``n grad(Phi)``.

One step: explicit upwind momentum convection (switched by ``kappa``),
implicit viscosity per component with no-slip ghosts, buoyancy, then a
Chorin projection onto discretely solenoidal fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DomainError
from .grid import BcKind, GridSpec, StaggeredVectorField, divergence, grad_to_faces, integrate


@dataclass
class FluidParams:
    kappa: int = 1
    phi_potential: np.ndarray = field(default=None, repr=False)
    poisson_tol: float = 1e-10
    poisson_max_iter: int = 20_000

    def __post_init__(self):
        if self.kappa not in (0, 1):
            raise ValueError("kappa must be 0 (Stokes) or 1 (Navier-Stokes)")
        if self.phi_potential is not None and not np.isfinite(self.phi_potential).all():
            raise ValueError("gravitational potential must be finite")
        if not (self.poisson_tol > 0 and self.poisson_max_iter > 0):
            raise ValueError("poisson_tol and poisson_max_iter must be positive")


def gravity_potential(grid: GridSpec, g: float = 1.0) -> np.ndarray:
    """Default potential ``Phi(x, y) = -g y`` at cell centers."""
    _, Y = grid.cell_centers()
    return -g * Y


def momentum_advection(u: StaggeredVectorField):
    """Upwind flux divergence of ``u (x) u`` on the staggered control volumes.

    Returns arrays for the interior x-faces ``(nx-1, ny)`` and interior
    y-faces ``(nx, ny-1)``.  Advecting speeds on control-volume faces are
    averages of cell-face speeds, so each control volume inherits the
    discrete divergence of its two neighbouring cells.
    """
    g = u.grid
    ux, uy = u.ux, u.uy
    # x-momentum: fluxes through cell centers (x-direction) and corners (y-direction)
    a = 0.5 * (ux[:-1, :] + ux[1:, :])
    fc = a * np.where(a > 0, ux[:-1, :], ux[1:, :])
    b = 0.5 * (uy[:-1, :] + uy[1:, :])  # (nx-1, ny+1) at corners of interior x-faces
    uxi = ux[1:-1, :]
    gy = np.zeros_like(b)
    bi = b[:, 1:-1]
    gy[:, 1:-1] = bi * np.where(bi > 0, uxi[:, :-1], uxi[:, 1:])
    cx = (fc[1:, :] - fc[:-1, :]) / g.hx + (gy[:, 1:] - gy[:, :-1]) / g.hy
    # y-momentum, same construction with the roles of x and y swapped
    a = 0.5 * (uy[:, :-1] + uy[:, 1:])
    fc = a * np.where(a > 0, uy[:, :-1], uy[:, 1:])
    b = 0.5 * (ux[:, :-1] + ux[:, 1:])  # (nx+1, ny-1)
    uyi = uy[:, 1:-1]
    gx = np.zeros_like(b)
    bi = b[1:-1, :]
    gx[1:-1, :] = bi * np.where(bi > 0, uyi[:-1, :], uyi[1:, :])
    cy = (fc[:, 1:] - fc[:, :-1]) / g.hy + (gx[1:, :] - gx[:-1, :]) / g.hx
    return cx, cy


def momentum_outflow_rate(u: StaggeredVectorField) -> float:
    """Largest outflow rate over the momentum control volumes."""
    g = u.grid
    ux, uy = u.ux, u.uy
    a = 0.5 * (ux[:-1, :] + ux[1:, :])
    b = 0.5 * (uy[:-1, :] + uy[1:, :])
    b[:, [0, -1]] = 0.0
    rx = (np.maximum(a[1:, :], 0) + np.maximum(-a[:-1, :], 0)) / g.hx + (
        np.maximum(b[:, 1:], 0) + np.maximum(-b[:, :-1], 0)
    ) / g.hy
    a = 0.5 * (uy[:, :-1] + uy[:, 1:])
    b = 0.5 * (ux[:, :-1] + ux[:, 1:])
    b[[0, -1], :] = 0.0
    ry = (np.maximum(a[:, 1:], 0) + np.maximum(-a[:, :-1], 0)) / g.hy + (
        np.maximum(b[1:, :], 0) + np.maximum(-b[:-1, :], 0)
    ) / g.hx
    return float(max(rx.max(), ry.max()))


def face_laplacian_operators(grid: GridSpec):
    """Sparse Laplacians for interior ``ux`` and ``uy`` unknowns with no-slip walls."""
    hx2, hy2 = grid.hx**2, grid.hy**2
    nx, ny = grid.nx, grid.ny
    extra = np.zeros((nx - 1, ny))
    extra[0, :] += 1.0 / hx2  # neighbouring wall face carries 0
    extra[-1, :] += 1.0 / hx2
    extra[:, 0] += 2.0 / hy2  # odd ghost across the wall
    extra[:, -1] += 2.0 / hy2
    Lx = linalg.assemble_diffusion(
        (nx - 1, ny), np.full((nx - 2, ny), 1.0 / hx2), np.full((nx - 1, ny - 1), 1.0 / hy2), extra
    )
    extra = np.zeros((nx, ny - 1))
    extra[:, 0] += 1.0 / hy2
    extra[:, -1] += 1.0 / hy2
    extra[0, :] += 2.0 / hx2
    extra[-1, :] += 2.0 / hx2
    Ly = linalg.assemble_diffusion(
        (nx, ny - 1), np.full((nx - 1, ny - 1), 1.0 / hx2), np.full((nx, ny - 2), 1.0 / hy2), extra
    )
    return Lx, Ly


def face_laplacian(u: StaggeredVectorField) -> StaggeredVectorField:
    """Apply the no-slip face Laplacian; wall-normal faces get 0."""
    Lx, Ly = _face_ops(u.grid)
    out = StaggeredVectorField.zeros(u.grid)
    out.ux[1:-1, :] = (Lx @ u.ux[1:-1, :].ravel()).reshape(u.ux[1:-1, :].shape)
    out.uy[:, 1:-1] = (Ly @ u.uy[:, 1:-1].ravel()).reshape(u.uy[:, 1:-1].shape)
    return out


def _face_ops(grid):
    return linalg.factor_cache.get(("faceops", grid), lambda: face_laplacian_operators(grid))


def _viscous_solvers(grid, dt):
    def build():
        Lx, Ly = _face_ops(grid)
        return linalg.MMatrixSolver(Lx, dt), linalg.MMatrixSolver(Ly, dt)

    return linalg.factor_cache.get(("viscous", grid, dt), build)


def _poisson_matrix(grid):
    return linalg.factor_cache.get(("poisson", grid), lambda: -linalg.neumann_operator(grid))


def buoyancy(grid: GridSpec, n: np.ndarray, Phi: np.ndarray) -> StaggeredVectorField:
    """``n grad(Phi)`` on interior faces: averaged ``n`` times face difference of ``Phi``."""
    f = grad_to_faces(grid, Phi, BcKind.NEUMANN_ZERO)
    f.ux[1:-1, :] *= 0.5 * (n[1:, :] + n[:-1, :])
    f.uy[:, 1:-1] *= 0.5 * (n[:, 1:] + n[:, :-1])
    return f


def poisson_solve(grid: GridSpec, rhs: np.ndarray, tol: float = 1e-10, max_iter: int = 20_000, x0=None):
    """Mean-zero ``q`` with ``laplacian(q) = rhs`` under homogeneous Neumann conditions."""
    scale = float(np.abs(rhs).max())
    if abs(integrate(grid, rhs)) > 1e-8 * scale * grid.area:
        raise DomainError("Neumann Poisson right-hand side is not compatible (nonzero integral)")
    if scale == 0.0:
        return np.zeros(grid.shape)
    q, _, _ = linalg.conjugate_gradient(
        _poisson_matrix(grid), -rhs, x0=x0, tol=tol, max_iter=max_iter, singular=True
    )
    return q.reshape(grid.shape)


def pressure_project(u_star: StaggeredVectorField, dt: float, params: FluidParams, q0=None):
    """Return ``(u, P)``: the solenoidal part of ``u_star`` and the pressure ``P = q``."""
    grid = u_star.grid
    rhs = divergence(u_star) / dt
    # the divergence of a no-slip field telescopes to zero; only round-off remains in its mean
    rhs -= rhs.mean()
    q = poisson_solve(grid, rhs, params.poisson_tol, params.poisson_max_iter, x0=q0)
    u = u_star - dt * grad_to_faces(grid, q, BcKind.NEUMANN_ZERO)
    u.pin_boundary()
    return u, q


def step_u(u: StaggeredVectorField, n: np.ndarray, params: FluidParams, dt: float, q0=None):
    grid = u.grid
    if not dt > 0:
        raise ValueError("dt must be positive")
    rx = u.ux[1:-1, :].copy()
    ry = u.uy[:, 1:-1].copy()
    if params.kappa:
        cx, cy = momentum_advection(u)
        rx -= dt * cx
        ry -= dt * cy
    sx, sy = _viscous_solvers(grid, dt)
    u_star = StaggeredVectorField.zeros(grid)
    u_star.ux[1:-1, :] = sx.solve(rx)
    u_star.uy[:, 1:-1] = sy.solve(ry)
    # buoyancy after the viscous solve so a gradient force stays an exact discrete gradient
    if params.phi_potential is not None:
        f = buoyancy(grid, n, params.phi_potential)
        u_star.ux[1:-1, :] += dt * f.ux[1:-1, :]
        u_star.uy[:, 1:-1] += dt * f.uy[:, 1:-1]
    return pressure_project(u_star, dt, params, q0=q0)
