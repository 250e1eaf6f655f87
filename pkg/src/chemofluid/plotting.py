"""Static figures of diagnostics time series and field snapshots (Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PANELS = (
    ("mass", ("mass_n", "mass_v")),
    ("functionals", ("F1", "F2")),
    ("distance to equilibrium", ("l2_dist_n", "w1inf_v", "w12_u")),
    ("dissipation integrals", ("cum_quartic_v", "cum_enstrophy", "cum_grad_n")),
)


def plot_diagnostics(series, path):
    """Four-panel overview of a diagnostics series."""
    t = np.array([r.t for r in series])
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), constrained_layout=True)
    for ax, (title, cols) in zip(axes.flat, _PANELS):
        for c in cols:
            y = np.array([getattr(r, c) for r in series])
            ax.plot(t, y, marker=".", label=c)
        if title == "distance to equilibrium" and all(getattr(r, c) > 0 for r in series for c in cols):
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel("t")
        ax.legend(fontsize="small")
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_fields(state, path):
    """Density, signal and speed maps with velocity arrows."""
    g = state.u.grid
    ux, uy = state.u.at_centers()
    X, Y = g.cell_centers()
    ext = (0.0, g.lx, 0.0, g.ly)
    fig, axes = plt.subplots(1, 3, figsize=(13, 4), constrained_layout=True)
    for ax, (name, f) in zip(axes, (("n", state.n), ("v", state.v), ("|u|", np.hypot(ux, uy)))):
        im = ax.imshow(f.T, origin="lower", extent=ext, cmap="viridis")
        fig.colorbar(im, ax=ax, shrink=0.8)
        ax.set_title(f"{name}, t={state.t:.4g}")
    stride = max(1, g.nx // 16)
    s = (slice(None, None, stride), slice(None, None, stride))
    axes[2].quiver(X[s], Y[s], ux[s], uy[s], color="w")
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_convergence(report, path):
    """Log-log error plot of a ``ConvergenceReport``."""
    fig, ax = plt.subplots(figsize=(5, 4), constrained_layout=True)
    ax.loglog(report.levels, report.errors, "o-", label=f"observed order {report.order:.2f}")
    ax.set_xlabel("level")
    ax.set_ylabel("error")
    ax.set_title(report.problem)
    ax.legend()
    fig.savefig(path, dpi=100)
    plt.close(fig)
