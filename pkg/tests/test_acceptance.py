"""Acceptance criteria 1-11.

Each test records one ``PASS``/``FAIL`` line (shown in the pytest terminal
summary, or printed when this file is run as a script) and then asserts.
Runs shared between criteria are computed once per module.
"""

import hashlib
import math
import time

import numpy as np
import pytest
from scipy.integrate import trapezoid

from chemofluid.cli import main as cli_main
from chemofluid.config import serialize_config
from chemofluid.fluid import FluidParams, gravity_potential, step_u
from chemofluid.grid import GridSpec, StaggeredVectorField
from chemofluid.motility import MotilitySpec
from chemofluid.oracle import convergence_order
from chemofluid.simulation import InitialSpec, SimConfig, run

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # running as a script without the tests directory on the path
    ACCEPTANCE_LINES = {}

GRID = GridSpec(64, 64)
LINEAR = MotilitySpec.linear(1.0)
EXACT_N, EXACT_V = 1.225399, 0.225399


def report(num, ok, detail):
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)
    assert ok, line


def timed_run(config):
    t0 = time.perf_counter()
    s = run(config)
    return s, time.perf_counter() - t0


CONFIGS = {
    "mass": SimConfig(grid=GRID, motility=LINEAR, mu=0.0, initial=InitialSpec("perturbed"), t_end=1.0),
    "ceiling": SimConfig(
        grid=GRID, motility=LINEAR, mu=1.0, initial=InitialSpec("perturbed", n_mean=3.0), t_end=1.0
    ),
    "homogeneous": SimConfig(
        grid=GridSpec(8, 8), motility=LINEAR, mu=1.0, initial=InitialSpec("uniform", n_mean=2.0, v_mean=1.0),
        t_end=1.0, dt_max=1e-4, output_every=0.1,
    ),
    "entropy": SimConfig(
        grid=GRID, motility=LINEAR, mu=0.0, initial=InitialSpec("bump", n_mass=0.05, v_mean=1.0),
        t_end=5.0, output_every=0.05,
    ),
    "longtime": SimConfig(
        grid=GRID, motility=LINEAR, mu=1.0, initial=InitialSpec("perturbed", v_mean=0.02),
        t_end=50.0, output_every=0.5, stop_on_convergence=False,
    ),
}
BUDGET = {"mass": 60, "ceiling": 60, "homogeneous": 30, "entropy": 300, "longtime": 600}


@pytest.fixture(scope="module")
def runs():
    return {}


def get_run(runs, name):
    if name not in runs:
        runs[name] = timed_run(CONFIGS[name])
    return runs[name]


def signal_bounds_ok(s):
    """Stepwise max v nonincreasing to 1e-12 and min v > 0."""
    max_v = np.concatenate([[s.series[0].max_v], s.step_log["max_v"]])
    rise = float(np.max(np.diff(max_v))) if max_v.size > 1 else 0.0
    return rise <= 1e-12 and float(s.step_log["min_v"].min()) > 0, rise, float(s.step_log["min_v"].min())


def test_criterion_01_mass_conservation(runs):
    s, wall = get_run(runs, "mass")
    m0 = s.series[0].mass_n
    drift = float(np.max(np.abs(s.step_log["mass_n"] - m0)) / m0)
    ok = drift <= 1e-9 and wall <= BUDGET["mass"] and s.state.t == 1.0
    report(1, ok, f"relative mass drift {drift:.3e} (tol 1e-9), runtime {wall:.1f}s (limit 60s)")


def test_criterion_02_mass_ceiling(runs):
    s, wall = get_run(runs, "ceiling")
    bound = max(s.series[0].mass_n, GRID.area) * (1 + 1e-8)
    worst = max(r.mass_n for r in s.series)
    ok = worst <= bound and wall <= BUDGET["ceiling"] and s.series[0].mass_n == pytest.approx(3.0)
    report(2, ok, f"max mass {worst:.12g} vs ceiling {bound:.12g}, runtime {wall:.1f}s (limit 60s)")


def test_criterion_03_signal_maximum_principle(runs):
    results = []
    for name in CONFIGS:
        s, _ = get_run(runs, name)
        results.append((name, *signal_bounds_ok(s)))
    ok = all(r[1] for r in results)
    worst_rise = max(r[2] for r in results)
    min_v = min(r[3] for r in results)
    report(3, ok, f"largest stepwise rise of max v {worst_rise:.2e} (tol 1e-12), min v {min_v:.3e} > 0 over {len(results)} runs")


def test_criterion_04_homogeneous_match(runs):
    s, wall = get_run(runs, "homogeneous")
    en = float(np.abs(s.state.n - EXACT_N).max())
    ev = float(np.abs(s.state.v - EXACT_V).max())
    ok = en <= 1e-4 and ev <= 1e-4 and wall <= BUDGET["homogeneous"] and s.state.t == 1.0
    report(4, ok, f"|n-1.225399| {en:.2e}, |v-0.225399| {ev:.2e} (tol 1e-4), runtime {wall:.1f}s (limit 30s)")


def test_criterion_05_convergence_orders():
    t0 = time.perf_counter()
    temporal = convergence_order("uniform", [4e-3, 2e-3, 1e-3])
    spatial = convergence_order("heat", [16, 32, 64])
    wall = time.perf_counter() - t0
    ok = temporal.passed and spatial.passed and temporal.order >= 0.9 and spatial.order >= 1.8 and wall <= 120
    report(5, ok, f"temporal order {temporal.order:.3f} (>= 0.9), spatial order {spatial.order:.3f} (>= 1.8), runtime {wall:.1f}s (limit 120s)")


def test_criterion_06_projection_quality(runs):
    worst_div = max(float(get_run(runs, name)[0].step_log["div_u_inf"].max()) for name in CONFIGS)
    g = GRID
    params = FluidParams(phi_potential=gravity_potential(g, 1.0))
    u, P = StaggeredVectorField.zeros(g), None
    for _ in range(20):
        u, P = step_u(u, g.full(1.0), params, 0.01, q0=P)
    hydro = max(float(np.abs(u.ux).max()), float(np.abs(u.uy).max()))
    s, _ = get_run(runs, "homogeneous")
    hydro_run = max(float(np.abs(s.state.u.ux).max()), float(np.abs(s.state.u.uy).max()))
    ok = worst_div <= 1e-8 and hydro <= 1e-8 and hydro_run <= 1e-8
    report(6, ok, f"max |div u| {worst_div:.2e} (tol 1e-8), hydrostatic |u| {max(hydro, hydro_run):.2e} (tol 1e-8)")


def _value_at(series, name, t):
    for r in series:
        if abs(r.t - t) < 1e-9:
            return getattr(r, name)
    raise KeyError(t)


def test_criterion_07_quasi_entropy(runs):
    s, wall = get_run(runs, "entropy")
    f0 = s.series[0].F1
    f_max = float(max(s.step_log["F1"].max(), f0))
    T = CONFIGS["entropy"].t_end
    fractions = {}
    for name in ("cum_quartic_v", "cum_enstrophy", "cum_grad_n"):
        final = getattr(s.series[-1], name)
        half = _value_at(s.series, name, T / 2)
        fractions[name] = (final - half) / final if final > 0 else 0.0
    ok = f_max <= f0 + 10 and all(0 <= fr <= 0.2 for fr in fractions.values()) and wall <= BUDGET["entropy"]
    growth = ", ".join(f"{k[4:]} {v:.3f}" for k, v in fractions.items())
    report(7, ok, f"max F1 - F1(0) = {f_max - f0:.3e} (<= 10); late growth fraction {growth} (<= 0.2); runtime {wall:.1f}s (limit 300s)")


def test_criterion_08_long_time_convergence(runs):
    s, wall = get_run(runs, "longtime")
    last = s.series[-1]
    T = CONFIGS["longtime"].t_end
    quartic = np.array([r.quartic_v for r in s.series])
    t = np.array([r.t for r in s.series])
    bounded = bool(np.isfinite(quartic).all()) and quartic[t >= T / 2].max() <= quartic[t <= T / 2].max()
    ok = (
        last.t == T and last.l2_dist_n <= 0.05 and last.w1inf_v <= 1e-3 and last.w12_u <= 1e-3
        and bounded and wall <= BUDGET["longtime"]
    )
    report(
        8, ok,
        f"at T=50: ||n-1||_L2 {last.l2_dist_n:.2e} (<= 0.05), ||v||_W1inf {last.w1inf_v:.2e} (<= 1e-3), "
        f"||u||_W12 {last.w12_u:.2e} (<= 1e-3), sup quartic_v {quartic.max():.3e}; runtime {wall:.1f}s (limit 600s)",
    )


def test_criterion_09_time_averaged_mass(runs):
    s, _ = get_run(runs, "longtime")
    T = CONFIGS["longtime"].t_end
    t = np.concatenate([[0.0], s.step_log["t"]])
    m = np.concatenate([[s.series[0].mass_n], s.step_log["mass_n"]])
    sel = t >= 1.0
    avg = float(trapezoid(m[sel], t[sel]) / T)
    ok = avg >= GRID.area / 3
    report(9, ok, f"(1/T) int_1^T mass_n = {avg:.6f} (>= {GRID.area / 3:.6f})")


def test_criterion_10_oracle_equivalence():
    t0 = time.perf_counter()
    rep = convergence_order("reference", [4e-5, 2e-5, 1e-5])
    wall = time.perf_counter() - t0
    gaps = ", ".join(f"{e:.3e}" for e in rep.errors)
    ok = rep.passed and rep.order >= 1.0 and wall <= 30
    report(10, ok, f"gaps {gaps} at dt 4e-5/2e-5/1e-5, order {rep.order:.3f} (>= 1), runtime {wall:.1f}s (limit 30s)")


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "entropy.ini"
    cfg.write_text(serialize_config(CONFIGS["entropy"].with_(plots=False)))
    digests = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli_main(["run", str(cfg), "--out", str(out)]) == 0
        digests.append(hashlib.sha256((out / "diagnostics.csv").read_bytes()).hexdigest())
    report(11, digests[0] == digests[1], f"sha256 {digests[0][:16]} vs {digests[1][:16]}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
