import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chemofluid.errors import SolverError, StateCorruptionError
from chemofluid.grid import GridSpec, StaggeredVectorField, integrate
from chemofluid.motility import MotilitySpec
from chemofluid.transport import ChemoStepParams, logistic_update, stable_dt, step_n, step_v

from test_grid import random_solenoidal

LIN = MotilitySpec.linear(1.0)


def logistic_ode_oracle(n0, mu, t):
    """High-precision ODE integration of n' = mu n (1 - n)."""
    mpmath.mp.dps = 30
    sol = mpmath.odefun(lambda s, y: mu * y * (1 - y), 0, n0)
    return float(sol(t))


def test_uniform_state_is_steady():
    g = GridSpec(8, 8)
    u = StaggeredVectorField.zeros(g)
    out = step_n(g, g.full(1.0), g.full(0.3), u, LIN, ChemoStepParams(), 0.1)
    assert np.allclose(out, 1.0, rtol=0, atol=1e-15)


def test_logistic_step_matches_ode_oracle():
    g = GridSpec(4, 4)
    out = step_n(g, g.full(2.0), g.full(1.0), StaggeredVectorField.zeros(g), LIN, ChemoStepParams(mu=1.0), 1.0)
    ref = logistic_ode_oracle(2.0, 1.0, 1.0)
    assert ref == pytest.approx(1.225399, abs=1e-6)
    assert np.allclose(out, ref, rtol=1e-13)
    assert np.allclose(out, 2 * math.e / (2 * math.e - 1), rtol=1e-13)


def test_logistic_update_identity_without_growth():
    n = np.array([0.0, 0.5, 3.0])
    assert np.array_equal(logistic_update(n, 0.0, 1.0), n)
    assert logistic_update(np.array([0.0]), 2.0, 1.0)[0] == 0.0


def test_consumption_step_uniform():
    g = GridSpec(6, 6)
    out = step_v(g, g.full(1.0), g.full(1.0), StaggeredVectorField.zeros(g), ChemoStepParams(), 1.0)
    assert np.allclose(out, math.exp(-1), rtol=1e-14)


def test_heat_step_maximum_principle():
    g = GridSpec(16, 16)
    v = 0.1 + np.random.default_rng(0).random(g.shape)
    out = step_v(g, np.full(g.shape, 1e-300), v, StaggeredVectorField.zeros(g), ChemoStepParams(), 0.01)
    assert out.max() <= v.max() and out.min() >= v.min()


def _random_case(seed, N=12):
    g = GridSpec(N, N)
    rng = np.random.default_rng(seed)
    n = 0.1 + rng.random(g.shape)
    v = 0.05 + rng.random(g.shape)
    u = random_solenoidal(g, rng, 0.02)
    return g, n, v, u


SPECS = [MotilitySpec.linear(1.0), MotilitySpec.saturating(2.0), MotilitySpec.exponential(1.0)]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(SPECS), st.floats(0.1, 1.0))
def test_step_n_conserves_mass_and_positivity(seed, spec, cfl):
    g, n, v, u = _random_case(seed)
    dt = stable_dt(g, n, v, u, spec, cfl)
    out = step_n(g, n, v, u, spec, ChemoStepParams(), dt)
    assert out.min() > 0
    assert abs(integrate(g, out) - integrate(g, n)) <= 1e-9 * integrate(g, n)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 1.0))
def test_step_v_bounded_and_positive(seed, cfl):
    g, n, v, u = _random_case(seed)
    dt = stable_dt(g, n, v, u, LIN, cfl)
    out = step_v(g, n, v, u, ChemoStepParams(), dt)
    assert out.min() > 0
    assert out.max() <= v.max() * (1 + 1e-12)
    assert integrate(g, out) <= integrate(g, v)


def test_mass_bound_with_growth():
    g, n, v, u = _random_case(7)
    n = 3.0 * n
    p = ChemoStepParams(mu=1.0)
    bound = max(integrate(g, n), g.area) * (1 + 1e-8)
    for _ in range(20):
        dt = stable_dt(g, n, v, u, LIN, 0.5)
        n_new = step_n(g, n, v, u, LIN, p, dt)
        v = step_v(g, n_new, v, u, p, dt)
        n = n_new
        assert integrate(g, n) <= bound


def test_compact_support_density_stays_nonnegative():
    g = GridSpec(32, 32)
    X, Y = g.cell_centers()
    n = np.where(np.hypot(X - 0.5, Y - 0.5) < 0.2, 1.0, 0.0)
    v = g.full(1.0) + 0.2 * X
    u = StaggeredVectorField.zeros(g)
    dt = stable_dt(g, n, v, u, LIN)
    out = step_n(g, n, v, u, LIN, ChemoStepParams(), dt)
    assert out.min() >= 0.0
    assert integrate(g, out) == pytest.approx(integrate(g, n), rel=1e-13)


def test_cg_solver_option_conserves_mass():
    g, n, v, u = _random_case(11)
    dt = stable_dt(g, n, v, u, LIN)
    p = ChemoStepParams(linear_solver="cg", linear_solve_tol=1e-12)
    out = step_n(g, n, v, u, LIN, p, dt)
    ref = step_n(g, n, v, u, LIN, ChemoStepParams(), dt)
    assert abs(integrate(g, out) - integrate(g, n)) <= 1e-11 * integrate(g, n)
    assert np.abs(out - ref).max() < 1e-9


def test_cg_solver_error_carries_residual():
    g, n, v, u = _random_case(5)
    p = ChemoStepParams(linear_solver="cg", linear_solve_tol=1e-15, max_iter=1)
    with pytest.raises(SolverError) as info:
        step_n(g, n, v, u, LIN, p, 0.01)
    assert info.value.residual > 0


def test_invalid_inputs_rejected():
    g = GridSpec(4, 4)
    u = StaggeredVectorField.zeros(g)
    with pytest.raises(StateCorruptionError):
        step_n(g, g.full(-1.0), g.full(1.0), u, LIN, ChemoStepParams(), 0.1)
    with pytest.raises(StateCorruptionError):
        step_v(g, g.full(1.0), g.full(0.0), u, ChemoStepParams(), 0.1)
    with pytest.raises(StateCorruptionError):
        step_n(g, g.full(np.nan), g.full(1.0), u, LIN, ChemoStepParams(), 0.1)
    with pytest.raises(ValueError):
        ChemoStepParams(mu=-1.0)


def test_stable_dt_examples():
    g = GridSpec(100, 100)
    u = StaggeredVectorField.zeros(g)
    dt0 = stable_dt(g, g.full(1.0), g.full(1e-300), u, LIN, 0.5)
    assert math.isfinite(dt0) and dt0 > 0
    u.ux[1:-1, :] = 1.0
    dt = stable_dt(g, g.full(1.0), g.full(1.0), u, LIN, 0.5)
    assert dt == pytest.approx(0.005, rel=1e-9)
    dt2 = stable_dt(g, g.full(1.0), g.full(1.0), u * 2.0, LIN, 0.5)
    assert dt2 == pytest.approx(dt / 2, rel=1e-9)


def test_stable_dt_explicit_diffusion_bound():
    g = GridSpec(16, 16)
    u = StaggeredVectorField.zeros(g)
    dt = stable_dt(g, g.full(1.0), g.full(2.0), u, LIN, 1.0, explicit_diffusion=True)
    assert dt == pytest.approx(g.hx**2 / 8.0)
