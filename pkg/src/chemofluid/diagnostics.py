"""Functionals, norms and running dissipation integrals of a simulation state."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .grid import BcKind, GridSpec, StaggeredVectorField, divergence, grad_to_faces, integrate
from .motility import MotilitySpec, motility_bounds

V_GUARD = 1e-14
N_FLOOR = 1e-300


@dataclass(frozen=True)
class EnergyWeights:
    C_f1: float = 1.0
    C_f2_grad: float = 0.5
    C_f2_u: float = 1.0

    def __post_init__(self):
        if not (self.C_f1 > 0 and self.C_f2_grad > 0 and self.C_f2_u > 0):
            raise ValueError("energy weights must be positive")


def weights_from_bounds(spec: MotilitySpec, K: float, C_f1: float = 1.0, u_multiplier: float = 1.0) -> EnergyWeights:
    lam, Lam = motility_bounds(spec, K)
    return EnergyWeights(C_f1=C_f1, C_f2_grad=Lam**2 / (2.0 * lam), C_f2_u=u_multiplier * Lam**2 / lam)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass_n: float
    mass_v: float
    entropy: float
    fisher_v: float
    quartic_v: float
    kinetic: float
    enstrophy: float
    grad_n_weighted: float
    F1: float
    F2: float
    l2_dist_n: float
    w1inf_v: float
    w12_u: float
    min_n: float
    max_n: float
    min_v: float
    max_v: float
    div_u_inf: float
    cum_quartic_v: float
    cum_enstrophy: float
    cum_grad_n: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_dict(self):
        return asdict(self)


def squared_gradient(grid: GridSpec, f: np.ndarray) -> tuple[np.ndarray, StaggeredVectorField]:
    """``|grad f|^2`` at cell centers (face squares averaged) and the face gradient."""
    g = grad_to_faces(grid, f, BcKind.NEUMANN_ZERO)
    sq = 0.5 * (g.ux[1:, :] ** 2 + g.ux[:-1, :] ** 2) + 0.5 * (g.uy[:, 1:] ** 2 + g.uy[:, :-1] ** 2)
    return sq, g


def kinetic_density(u: StaggeredVectorField) -> np.ndarray:
    return 0.5 * (u.ux[1:, :] ** 2 + u.ux[:-1, :] ** 2) + 0.5 * (u.uy[:, 1:] ** 2 + u.uy[:, :-1] ** 2)


def velocity_gradient_density(u: StaggeredVectorField) -> np.ndarray:
    """``|grad u|^2`` at cell centers.

    Normal derivatives are cell-centered already; shear derivatives live on
    cell corners (with odd ghosts across no-slip walls) and are averaged from
    the four corners of each cell.
    """
    g = u.grid
    dxx = (u.ux[1:, :] - u.ux[:-1, :]) / g.hx
    dyy = (u.uy[:, 1:] - u.uy[:, :-1]) / g.hy
    dxy = np.zeros((g.nx + 1, g.ny + 1))  # d ux / dy at corners
    dxy[:, 1:-1] = (u.ux[:, 1:] - u.ux[:, :-1]) / g.hy
    dxy[:, 0] = 2.0 * u.ux[:, 0] / g.hy
    dxy[:, -1] = -2.0 * u.ux[:, -1] / g.hy
    dyx = np.zeros((g.nx + 1, g.ny + 1))  # d uy / dx at corners
    dyx[1:-1, :] = (u.uy[1:, :] - u.uy[:-1, :]) / g.hx
    dyx[0, :] = 2.0 * u.uy[0, :] / g.hx
    dyx[-1, :] = -2.0 * u.uy[-1, :] / g.hx
    shear = dxy**2 + dyx**2
    shear_c = 0.25 * (shear[:-1, :-1] + shear[1:, :-1] + shear[:-1, 1:] + shear[1:, 1:])
    return dxx**2 + dyy**2 + shear_c


def _nlogn(n):
    safe = np.where(n > N_FLOOR, n, 1.0)
    return np.where(n > N_FLOOR, n * np.log(safe), 0.0)


def record(grid, n, v, u, t, w: EnergyWeights, prev: DiagnosticsRecord | None = None, dt: float = 0.0):
    """One diagnostics sample.

    Running integrals use the left-endpoint rule: the increment over the
    last interval is ``dt`` times the integrand stored in ``prev``.
    """
    I = lambda f: integrate(grid, f)  # noqa: E731
    vg = np.maximum(v, V_GUARD)
    ng = np.maximum(n, N_FLOOR)
    gv2, gv = squared_gradient(grid, v)
    gn2, _ = squared_gradient(grid, n)
    entropy = I(_nlogn(n))
    fisher = I(gv2 / vg)
    quartic = I(gv2**2 / vg**3)
    kinetic = I(kinetic_density(u))
    enstrophy = I(velocity_gradient_density(u))
    # |grad n|^2 / n -> 0 where a nonnegative n vanishes
    grad_n = I(np.where(n > N_FLOOR, v / ng * gn2, 0.0))
    grad_inf = float(max(np.abs(gv.ux).max(), np.abs(gv.uy).max()))
    if prev is None:
        cq = ce = cg = 0.0
    else:
        cq = prev.cum_quartic_v + dt * prev.quartic_v
        ce = prev.cum_enstrophy + dt * prev.enstrophy
        cg = prev.cum_grad_n + dt * prev.grad_n_weighted
    return DiagnosticsRecord(
        t=float(t),
        mass_n=I(n),
        mass_v=I(v),
        entropy=entropy,
        fisher_v=fisher,
        quartic_v=quartic,
        kinetic=kinetic,
        enstrophy=enstrophy,
        grad_n_weighted=grad_n,
        F1=entropy + fisher + w.C_f1 * kinetic,
        F2=entropy + w.C_f2_grad * fisher + w.C_f2_u * kinetic,
        l2_dist_n=math.sqrt(I((n - 1.0) ** 2)),
        w1inf_v=max(float(np.abs(v).max()), grad_inf),
        w12_u=math.sqrt(kinetic + enstrophy),
        min_n=float(n.min()),
        max_n=float(n.max()),
        min_v=float(v.min()),
        max_v=float(v.max()),
        div_u_inf=float(np.abs(divergence(u)).max()),
        cum_quartic_v=cq,
        cum_enstrophy=ce,
        cum_grad_n=cg,
    )
