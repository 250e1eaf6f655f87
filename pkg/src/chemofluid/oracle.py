"""Independent reference computations for certifying the production solver.

Closed-form homogeneous solutions, a forward-Euler reference stepper built
on the same spatial stencils, and log-log convergence-order fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fluid import buoyancy, face_laplacian, momentum_advection, pressure_project
from .grid import GridSpec, StaggeredVectorField, advect_conservative, divergence, grad_to_faces, laplacian, upwind_fluxes
from .motility import MotilitySpec, phi
from .simulation import SimConfig, SimState, coupled_step, solver_params
from .transport import ChemoStepParams, drift_velocity, face_average, step_v


def uniform_state_solution(n0, v0, mu, t, lib=math):
    """Spatially homogeneous solution: logistic ``n`` and consumed ``v``.

    ``lib`` supplies ``exp``, ``expm1`` and ``log1p``; pass ``mpmath`` to
    evaluate the same closed form in extended precision.
    """
    if not (n0 > 0 and v0 > 0):
        raise DomainError("n0 and v0 must be positive")
    if mu < 0 or t < 0:
        raise DomainError("mu and t must be nonnegative")
    cast = float if lib is math else (lambda x: x)
    if mu == 0:
        return cast(n0), cast(v0 * lib.exp(-n0 * t))
    growth = lib.expm1(mu * t)
    n = n0 * (1 + growth) / (1 + n0 * growth)
    # integral of n over [0, t] is log(1 + n0 (e^{mu t} - 1)) / mu
    v = v0 * lib.exp(-lib.log1p(n0 * growth) / mu)
    return cast(n), cast(v)


def explicit_stability_bound(grid: GridSpec, v: np.ndarray, spec: MotilitySpec) -> float:
    """``h^2 / (4 max diffusivity)``; the signal diffuses with coefficient 1."""
    h2 = min(grid.hx, grid.hy) ** 2
    return h2 / (4.0 * max(1.0, float(np.max(phi(spec, v)))))


def explicit_reference_step(state: SimState, config: SimConfig, dt: float) -> SimState:
    """Forward Euler for every term, reusing the production spatial stencils.

    The fluid update is explicit (convection, viscosity, buoyancy) followed by
    the same projection; ``n`` and ``v`` are transported by the projected
    velocity, mirroring the production splitting order.
    """
    grid = config.grid
    n, v, u = state.n, state.v, state.u
    bound = explicit_stability_bound(grid, v, config.motility)
    if not 0 < dt <= bound:
        raise DomainError(f"dt={dt:g} exceeds the explicit stability bound {bound:g}")
    fparams, cparams = solver_params(config)

    rhs = face_laplacian(u)
    if config.kappa:
        cx, cy = momentum_advection(u)
        rhs.ux[1:-1, :] -= cx
        rhs.uy[:, 1:-1] -= cy
    rhs = rhs + buoyancy(grid, n, fparams.phi_potential)
    u_star = u + dt * rhs
    u_star.pin_boundary()
    u_new, P = pressure_project(u_star, dt, fparams, q0=state.P)

    w = drift_velocity(grid, v, config.motility)
    pf = face_average(grid, phi(config.motility, v))
    gn = grad_to_faces(grid, n)
    flux = StaggeredVectorField(grid, pf.ux * gn.ux, pf.uy * gn.uy)
    dn = -advect_conservative(grid, n, u_new) - divergence(upwind_fluxes(n, w)) + divergence(flux)
    dn = dn + cparams.mu * n * (1.0 - n)
    dv = -advect_conservative(grid, v, u_new) + laplacian(grid, v) - n * v
    return SimState(state.t + dt, n + dt * dn, v + dt * dv, P, u_new, state.step_count + 1)


@dataclass
class ConvergenceReport:
    problem: str
    levels: list
    errors: list
    order: float
    target: float
    passed: bool
    diagnostic: str = ""

    def __post_init__(self):
        if len(self.levels) < 3 or len(self.levels) != len(self.errors):
            raise ValueError("a convergence report needs >= 3 levels with one error each")


def fitted_order(sizes, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(size)``."""
    return float(np.polyfit(np.log(sizes), np.log(errors), 1)[0])


def _norm(a: np.ndarray, norm: str, cell_area: float) -> float:
    if norm == "Linf":
        return float(np.abs(a).max())
    return float(math.sqrt(np.sum(a**2) * cell_area))


def _uniform_error(dt, norm):
    # logistic growth with consumption, n0 = 2, v0 = 1, mu = 1, up to T = 1
    grid = GridSpec(4, 4)
    config = SimConfig(grid=grid, mu=1.0, gravity=0.0, t_end=1.0)
    steps = int(round(1.0 / dt))
    state = SimState(0.0, grid.full(2.0), grid.full(1.0), np.zeros(grid.shape), StaggeredVectorField.zeros(grid))
    fp, cp = solver_params(config)
    for _ in range(steps):
        state = coupled_step(state, config, dt, fp, cp)
    n_ex, v_ex = uniform_state_solution(2.0, 1.0, 1.0, steps * dt)
    return max(_norm(state.n - n_ex, norm, grid.hx * grid.hy), _norm(state.v - v_ex, norm, grid.hx * grid.hy))


def _heat_error(N, norm, T=0.02):
    # v_t = lap v with n at the floor: v = 2 + cos(pi x) cos(pi y) exp(-2 pi^2 t)
    grid = GridSpec(N, N)
    X, Y = grid.cell_centers()
    mode = np.cos(np.pi * X) * np.cos(np.pi * Y)
    steps = int(math.ceil(T / (0.25 * grid.hx**2)))
    dt = T / steps
    v = 2.0 + mode
    n = np.full(grid.shape, 1e-300)
    u = StaggeredVectorField.zeros(grid)
    p = ChemoStepParams()
    for _ in range(steps):
        v = step_v(grid, n, v, u, p, dt)
    exact = 2.0 + mode * math.exp(-2.0 * math.pi**2 * T)
    return _norm(v - exact, norm, grid.hx * grid.hy)


def random_positive_state(grid: GridSpec, seed: int = 0, velocity_scale: float = 0.05) -> SimState:
    """Smooth-ish random state with ``n, v > 0`` and a solenoidal no-slip velocity."""
    rng = np.random.default_rng(seed)
    n = 1.0 + 0.5 * rng.random(grid.shape)
    v = 0.5 + 0.5 * rng.random(grid.shape)
    psi = np.zeros((grid.nx + 1, grid.ny + 1))
    psi[1:-1, 1:-1] = velocity_scale * grid.hx * rng.standard_normal((grid.nx - 1, grid.ny - 1))
    u = StaggeredVectorField.zeros(grid)
    u.ux[:] = (psi[:, 1:] - psi[:, :-1]) / grid.hy
    u.uy[:] = -(psi[1:, :] - psi[:-1, :]) / grid.hx
    return SimState(0.0, n, v, np.zeros(grid.shape), u)


def _state_gap(a: SimState, b: SimState, norm: str, cell_area: float) -> float:
    return max(
        _norm(a.n - b.n, norm, cell_area),
        _norm(a.v - b.v, norm, cell_area),
        _norm(a.u.ux - b.u.ux, norm, cell_area),
        _norm(a.u.uy - b.u.uy, norm, cell_area),
    )


def reference_gap(dt: float, steps: int = 10, N: int = 16, seed: int = 0, norm: str = "Linf", mu: float = 0.0) -> float:
    """Gap between production and explicit reference after ``steps`` steps of size ``dt``."""
    grid = GridSpec(N, N)
    config = SimConfig(grid=grid, mu=mu)
    fp, cp = solver_params(config)
    a = b = random_positive_state(grid, seed)
    for _ in range(steps):
        a = coupled_step(a, config, dt, fp, cp)
        b = explicit_reference_step(b, config, dt)
    return _state_gap(a, b, norm, grid.hx * grid.hy)


# name -> (error function, target order, whether levels are grid counts)
PROBLEMS = {
    "uniform": (_uniform_error, 0.9, False),
    "heat": (_heat_error, 1.8, True),
    "reference": (lambda dt, norm: reference_gap(dt, norm=norm), 1.0, False),
}
DEFAULT_LEVELS = {
    "uniform": [4e-3, 2e-3, 1e-3],
    "heat": [16, 32, 64],
    "reference": [4e-5, 2e-5, 1e-5],
}


def convergence_order(problem: str, levels=None, norm: str = "Linf") -> ConvergenceReport:
    """Run a named study and fit the observed order.

    ``levels`` are time steps for ``uniform`` and ``reference`` and cell
    counts per side for ``heat``.  They must be strictly monotone.
    """
    if problem not in PROBLEMS:
        raise ValueError(f"unknown convergence problem {problem!r}; choose from {', '.join(PROBLEMS)}")
    if norm not in ("Linf", "L2"):
        raise ValueError("norm must be 'Linf' or 'L2'")
    fn, target, by_cells = PROBLEMS[problem]
    levels = list(DEFAULT_LEVELS[problem] if levels is None else levels)
    if len(levels) < 3:
        raise ValueError("need at least 3 levels")
    d = np.diff(levels)
    if not ((d > 0).all() or (d < 0).all()):
        raise ValueError("levels must be strictly monotone")
    errors = [fn(lv, norm) for lv in levels]
    sizes = [1.0 / lv for lv in levels] if by_cells else levels
    order_idx = np.argsort(sizes)[::-1]  # coarse to fine
    errs = np.asarray(errors)[order_idx]
    diagnostic = ""
    if not (errs > 0).all():
        diagnostic = "zero error at some level; order undefined"
        return ConvergenceReport(problem, levels, errors, float("nan"), target, False, diagnostic)
    order = fitted_order(sizes, errors)
    monotone = bool((np.diff(errs) < 0).all())
    if not monotone:
        diagnostic = "errors do not decrease under refinement"
    passed = monotone and order >= target
    if monotone and not passed:
        diagnostic = f"observed order {order:.3f} below target {target}"
    return ConvergenceReport(problem, levels, errors, order, target, passed, diagnostic)
