"""Positivity-preserving steps for the cell density ``n`` and the signal ``v``.

Within a step the operators are applied in the order
advection -> cross-diffusion -> implicit diffusion -> reaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import StateCorruptionError
from .grid import (
    GridSpec,
    StaggeredVectorField,
    advect_conservative,
    divergence,
    grad_to_faces,
    outflow_rate,
    upwind_fluxes,
)
from .motility import MotilitySpec, phi, phi_prime

RATE_EPS = 1e-12


@dataclass(frozen=True)
class ChemoStepParams:
    mu: float = 0.0
    positivity_floor: float = 1e-300
    linear_solve_tol: float = 1e-10
    # "direct": sign-preserving LU; "cg": conjugate gradient to linear_solve_tol
    linear_solver: str = "direct"
    max_iter: int = 10_000

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError("mu must be >= 0")
        if not (self.positivity_floor > 0 and self.linear_solve_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.linear_solver not in ("direct", "cg"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")


def _check_fields(n, v, allow_zero_n=True):
    if not np.isfinite(n).all() or not np.isfinite(v).all():
        raise StateCorruptionError("non-finite values in n or v")
    if (n < 0).any() if allow_zero_n else (n <= 0).any():
        raise StateCorruptionError(f"cell density lost positivity (min n = {n.min():.3e})")
    if (v <= 0).any():
        raise StateCorruptionError(f"signal lost positivity (min v = {v.min():.3e})")


def face_average(grid: GridSpec, c: np.ndarray) -> StaggeredVectorField:
    """Arithmetic mean of a cell field on interior faces; wall faces set to 0."""
    F = StaggeredVectorField.zeros(grid)
    F.ux[1:-1, :] = 0.5 * (c[1:, :] + c[:-1, :])
    F.uy[:, 1:-1] = 0.5 * (c[:, 1:] + c[:, :-1])
    return F


def drift_velocity(grid: GridSpec, v: np.ndarray, spec: MotilitySpec) -> StaggeredVectorField:
    """Face velocity ``-phi'(v) grad v`` carrying ``n`` in the cross-diffusive flux."""
    g = grad_to_faces(grid, v)
    dphi = face_average(grid, phi_prime(spec, v))
    return StaggeredVectorField(grid, -dphi.ux * g.ux, -dphi.uy * g.uy)


def diffusion_operator(grid: GridSpec, v: np.ndarray, spec: MotilitySpec, dt=None):
    """Sparse ``div(phi(v) grad .)`` with phi averaged from cell values to faces.

    With ``dt`` the implicit matrix ``I - dt div(phi(v) grad .)`` is returned.
    """
    pf = face_average(grid, phi(spec, v))
    return linalg.neumann_operator(grid, pf.ux[1:-1, :], pf.uy[:, 1:-1], dt=dt)


def _implicit_diffusion(grid, L, b, dt, p: ChemoStepParams):
    if p.linear_solver == "direct":
        return linalg.MMatrixSolver(L, dt).solve(b)
    A = sp.identity(L.shape[0], format="csr") - dt * L
    scale = max(float(np.abs(b).max()), p.positivity_floor)
    x, _, _ = linalg.conjugate_gradient(
        A, b, x0=b, tol=p.linear_solve_tol * scale, max_iter=p.max_iter, jacobi=True
    )
    # flux-form reconstruction: the update telescopes, so the integral is kept to round-off
    return (b.ravel() + dt * (L @ x)).reshape(b.shape)


def logistic_update(n: np.ndarray, mu: float, dt: float) -> np.ndarray:
    """Exact solution of ``n' = mu n (1 - n)`` over ``dt``, cellwise."""
    if mu == 0.0:
        return n.copy()
    g = math.expm1(mu * dt)
    return n * (1.0 + g) / (1.0 + n * g)


def step_n(grid, n, v, u, spec, p: ChemoStepParams, dt):
    _check_fields(n, v)
    if not dt > 0:
        raise ValueError("dt must be positive")
    n1 = n - dt * advect_conservative(grid, n, u)
    w = drift_velocity(grid, v, spec)
    n2 = n1 - dt * divergence(upwind_fluxes(n1, w))
    if p.linear_solver == "direct":
        n3 = linalg.MMatrixSolver(diffusion_operator(grid, v, spec, dt=dt)).solve(n2)
    else:
        n3 = _implicit_diffusion(grid, diffusion_operator(grid, v, spec), n2, dt, p)
    n4 = logistic_update(n3, p.mu, dt)
    if not np.isfinite(n4).all() or (n4 < 0).any():
        raise StateCorruptionError(
            f"step_n produced a negative density (min {np.nanmin(n4):.3e}); dt exceeds the stable bound?"
        )
    return n4


def _heat_solver(grid, dt):
    return linalg.factor_cache.get(
        ("heat", grid, dt), lambda: linalg.MMatrixSolver(linalg.neumann_operator(grid, dt=dt))
    )


def step_v(grid, n, v, u, p: ChemoStepParams, dt):
    _check_fields(n, v)
    if not dt > 0:
        raise ValueError("dt must be positive")
    v1 = v - dt * advect_conservative(grid, v, u)
    if p.linear_solver == "direct":
        v2 = _heat_solver(grid, dt).solve(v1)
    else:
        v2 = _implicit_diffusion(grid, linalg.neumann_operator(grid), v1, dt, p)
    v3 = v2 * np.exp(-n * dt)
    if not np.isfinite(v3).all() or (v3 <= 0).any():
        raise StateCorruptionError(f"step_v produced a non-positive signal (min {np.nanmin(v3):.3e})")
    return v3


def stable_dt(grid, n, v, u, spec, cfl=0.5, explicit_diffusion=False):
    """Largest step for which the explicit parts of the scheme stay positive.

    Candidates are ``cfl / rate`` for the cell outflow rates of the fluid
    velocity (including the staggered momentum control volumes) and of the
    cross-diffusive drift.  With ``explicit_diffusion=True`` the diffusive
    bound ``h^2 / (4 max diffusivity)`` is included as well.
    """
    from .fluid import momentum_outflow_rate

    if not 0 < cfl <= 1:
        raise ValueError("cfl must lie in (0, 1]")
    adv = max(float(outflow_rate(u).max()), momentum_outflow_rate(u))
    cross = float(outflow_rate(drift_velocity(grid, v, spec)).max())
    dt = min(cfl / (adv + RATE_EPS), cfl / (cross + RATE_EPS))
    if explicit_diffusion:
        h2 = min(grid.hx, grid.hy) ** 2
        diff = max(1.0, float(np.max(phi(spec, v))))
        dt = min(dt, cfl * h2 / (4.0 * diff))
    return dt
