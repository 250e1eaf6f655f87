"""Run orchestration: configuration, initial data, time loop and termination."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .diagnostics import DiagnosticsRecord, EnergyWeights, record, weights_from_bounds
from .errors import ChemoFluidError, ConfigError, SimulationError
from .fluid import FluidParams, gravity_potential, step_u
from .grid import GridSpec, StaggeredVectorField, divergence, integrate, outflow_rate
from .motility import MotilitySpec
from .transport import ChemoStepParams, step_n, step_v, stable_dt

log = logging.getLogger(__name__)

PRESETS = ("uniform", "perturbed", "bump", "vortex")
_V_DEFAULT = {"uniform": 1.0, "perturbed": 0.02, "bump": 1.0, "vortex": 1.0}


@dataclass(frozen=True)
class InitialSpec:
    preset: str = "uniform"
    n_mean: float = 1.0
    v_mean: Optional[float] = None
    amplitude: float = 0.1
    n_mass: float = 0.05
    radius: float = 0.25
    strength: float = 0.1
    n0_file: Optional[str] = None
    v0_file: Optional[str] = None

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown initial preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        if self.v_mean is None:
            object.__setattr__(self, "v_mean", _V_DEFAULT[self.preset])


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec = field(default_factory=lambda: GridSpec(64, 64))
    motility: MotilitySpec = field(default_factory=MotilitySpec)
    mu: float = 0.0
    kappa: int = 1
    gravity: float = 1.0
    initial: InitialSpec = field(default_factory=InitialSpec)
    t_end: float = 1.0
    cfl: float = 0.5
    dt_max: float = 0.01
    output_every: float = 0.1
    poisson_tol: float = 1e-10
    poisson_max_iter: int = 20_000
    linear_solve_tol: float = 1e-10
    linear_solver: str = "direct"
    delta_n: Optional[float] = None
    delta_v: Optional[float] = None
    c_f1: float = 1.0
    c_f2_u_multiplier: float = 1.0
    conv_l2_n: float = 0.05
    conv_w1inf_v: float = 1e-3
    conv_w12_u: float = 1e-3
    stop_on_convergence: bool = True
    snapshots: bool = False
    plots: bool = True

    def __post_init__(self):
        if not self.mu >= 0:
            raise ConfigError("mu must be >= 0")
        if self.kappa not in (0, 1):
            raise ConfigError("kappa must be 0 or 1")
        if not math.isfinite(self.gravity):
            raise ConfigError("gravity must be finite")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]")
        if not (self.dt_max > 0 and self.output_every > 0):
            raise ConfigError("dt_max and output_every must be positive")
        for name in ("poisson_tol", "linear_solve_tol", "c_f1", "c_f2_u_multiplier"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.linear_solver not in ("direct", "cg"):
            raise ConfigError("linear_solver must be 'direct' or 'cg'")
        if self.delta_n is None:
            object.__setattr__(self, "delta_n", 0.1 * self.grid.area)
        if self.delta_v is None:
            object.__setattr__(self, "delta_v", 0.05 * self.grid.area)

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@dataclass
class SimState:
    t: float
    n: np.ndarray
    v: np.ndarray
    P: np.ndarray
    u: StaggeredVectorField
    step_count: int = 0

    def copy(self) -> "SimState":
        return SimState(self.t, self.n.copy(), self.v.copy(), self.P.copy(), self.u.copy(), self.step_count)


@dataclass
class SmallnessReport:
    mass_n0: float
    mass_v0: float
    K: float
    delta_n: float
    delta_v: float
    passes_n_mass: bool
    passes_v_mass: bool


@dataclass
class RunSummary:
    state: SimState
    series: list
    wall_time: float
    reason: str
    step_log: dict
    smallness: SmallnessReport
    weights: EnergyWeights

    @property
    def f1_excess(self) -> float:
        """Run-reported constant: ``max_t F1(t) - F1(0)``."""
        return max(r.F1 for r in self.series) - self.series[0].F1


def initial_presets(name: str, grid: GridSpec, init: InitialSpec | None = None):
    """Return ``(n0, v0, u0)`` for a named preset."""
    init = InitialSpec(preset=name) if init is None else replace(init, preset=name)
    X, Y = grid.cell_centers()
    v0 = grid.full(init.v_mean)
    u0 = StaggeredVectorField.zeros(grid)
    if name == "uniform":
        n0 = grid.full(init.n_mean)
    elif name == "perturbed":
        n0 = init.n_mean * (1.0 + init.amplitude * np.cos(np.pi * X / grid.lx) * np.cos(np.pi * Y / grid.ly))
    elif name == "bump":
        R = init.radius * min(grid.lx, grid.ly)
        r = np.hypot(X - 0.5 * grid.lx, Y - 0.5 * grid.ly)
        shape = np.where(r < R, np.cos(0.5 * np.pi * r / R) ** 2, 0.0)
        n0 = shape * (init.n_mass / integrate(grid, shape))
    else:  # vortex: discrete curl of a stream function vanishing on the walls
        n0 = grid.full(init.n_mean)
        Xc, Yc = grid.corners()
        psi = init.strength * np.sin(np.pi * Xc / grid.lx) ** 2 * np.sin(np.pi * Yc / grid.ly) ** 2
        psi[[0, -1], :] = 0.0
        psi[:, [0, -1]] = 0.0
        u0.ux[:] = (psi[:, 1:] - psi[:, :-1]) / grid.hy
        u0.uy[:] = -(psi[1:, :] - psi[:-1, :]) / grid.hx
    return n0, v0, u0


def _load_field(path, grid, what):
    try:
        f = np.loadtxt(path, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read {what} file {path}: {exc}") from exc
    if f.shape != grid.shape:
        raise ConfigError(f"{what} file {path} has shape {f.shape}, grid needs {grid.shape}")
    return f


def load_initial(config: SimConfig):
    """Build and validate ``(n0, v0, u0)`` against the initial-data hypotheses."""
    init, grid = config.initial, config.grid
    n0, v0, u0 = initial_presets(init.preset, grid, init)
    if init.n0_file:
        n0 = _load_field(init.n0_file, grid, "n0")
    if init.v0_file:
        v0 = _load_field(init.v0_file, grid, "v0")
    if not (np.isfinite(n0).all() and np.isfinite(v0).all()):
        raise ConfigError("initial data must be finite")
    if (n0 < 0).any() or not (n0 > 0).any():
        raise ConfigError("n0 must be nonnegative and not identically zero")
    if (v0 <= 0).any():
        raise ConfigError("v0 must be strictly positive on the closed domain")
    if np.abs(divergence(u0)).max() > 1e-8 or u0.boundary_max() != 0.0:
        raise ConfigError("u0 must be discretely divergence-free (to 1e-8) and vanish on the walls")
    return n0, v0, u0


def check_smallness(config: SimConfig) -> SmallnessReport:
    """Compare initial masses with the configured smallness thresholds (report only)."""
    n0, v0, _ = load_initial(config)
    g = config.grid
    mn, mv = integrate(g, n0), integrate(g, v0)
    return SmallnessReport(
        mass_n0=mn,
        mass_v0=mv,
        K=float(np.abs(v0).max()),
        delta_n=config.delta_n,
        delta_v=config.delta_v,
        passes_n_mass=mn < config.delta_n,
        passes_v_mass=mv < config.delta_v,
    )


def energy_weights(config: SimConfig, K: float) -> EnergyWeights:
    return weights_from_bounds(config.motility, K, C_f1=config.c_f1, u_multiplier=config.c_f2_u_multiplier)


def _converged(rec: DiagnosticsRecord, c: SimConfig) -> bool:
    return rec.l2_dist_n <= c.conv_l2_n and rec.w1inf_v <= c.conv_w1inf_v and rec.w12_u <= c.conv_w12_u


def solver_params(config: SimConfig):
    """``(FluidParams, ChemoStepParams)`` derived from a configuration."""
    grid = config.grid
    fparams = FluidParams(config.kappa, gravity_potential(grid, config.gravity), config.poisson_tol, config.poisson_max_iter)
    cparams = ChemoStepParams(mu=config.mu, linear_solve_tol=config.linear_solve_tol, linear_solver=config.linear_solver)
    return fparams, cparams


def coupled_step(state: SimState, config: SimConfig, dt: float, fparams=None, cparams=None) -> SimState:
    """One production step: fluid, then ``n``, then ``v`` (Lie splitting)."""
    if fparams is None or cparams is None:
        fparams, cparams = solver_params(config)
    grid = config.grid
    u_new, P = step_u(state.u, state.n, fparams, dt, q0=state.P)
    n_new = step_n(grid, state.n, state.v, u_new, config.motility, cparams, dt)
    v_new = step_v(grid, n_new, state.v, u_new, cparams, dt)
    return SimState(state.t + dt, n_new, v_new, P, u_new, state.step_count + 1)


def run(config: SimConfig, on_output: Callable[[SimState, DiagnosticsRecord], None] | None = None) -> RunSummary:
    """Advance the coupled system from ``t = 0`` to ``config.t_end``.

    Each step updates the fluid first, then ``n``, then ``v`` (the latter two
    transported by the freshly projected velocity).  Diagnostics are computed
    every step so running integrals are accurate; the returned series holds the
    samples at ``t = 0``, each output time and the final time.
    """
    t0 = time.perf_counter()
    grid = config.grid
    n, v, u = load_initial(config)
    smallness = check_smallness(config)
    weights = energy_weights(config, smallness.K)
    fparams, cparams = solver_params(config)

    state = SimState(0.0, n, v, np.zeros(grid.shape), u, 0)
    rec = record(grid, n, v, u, 0.0, weights)
    series = [rec]
    if on_output:
        on_output(state, rec)
    steps = {k: [] for k in ("t", "dt", "max_v", "min_v", "min_n", "div_u_inf", "mass_n", "F1")}
    k_out = 1
    reason = "t_end"
    eps_t = 1e-12 * max(1.0, config.t_end)

    while config.t_end - state.t > eps_t:
        t_out = min(k_out * config.output_every, config.t_end)
        dt = min(
            stable_dt(grid, state.n, state.v, state.u, config.motility, config.cfl),
            config.dt_max,
            t_out - state.t,
        )
        try:
            for _ in range(30):
                new = coupled_step(state, config, dt, fparams, cparams)
                # the transport CFL must hold for the velocity that actually advects
                if dt * float(outflow_rate(new.u).max()) <= 1.0:
                    break
                dt *= 0.5
        except ChemoFluidError as exc:
            raise SimulationError(f"step {state.step_count + 1} at t={state.t:.6g} failed: {exc}", state.copy(), exc) from exc

        new.t = t_out if t_out - (state.t + dt) <= eps_t else state.t + dt
        state = new
        rec = record(grid, state.n, state.v, state.u, state.t, weights, prev=rec, dt=dt)
        for key, val in (
            ("t", state.t), ("dt", dt), ("max_v", rec.max_v), ("min_v", rec.min_v),
            ("min_n", rec.min_n), ("div_u_inf", rec.div_u_inf), ("mass_n", rec.mass_n), ("F1", rec.F1),
        ):
            steps[key].append(val)

        if state.t == t_out:
            series.append(rec)
            k_out += 1
            if on_output:
                on_output(state, rec)
            if config.stop_on_convergence and _converged(rec, config):
                reason = "converged"
                break

    if series[-1].t != state.t:
        series.append(rec)
    wall = time.perf_counter() - t0
    log.info("run finished: t=%.6g steps=%d reason=%s wall=%.2fs", state.t, state.step_count, reason, wall)
    return RunSummary(
        state=state,
        series=series,
        wall_time=wall,
        reason=reason,
        step_log={k: np.asarray(val) for k, val in steps.items()},
        smallness=smallness,
        weights=weights,
    )
