"""Deterministic emission of diagnostics CSV and legacy-VTK field snapshots."""

from __future__ import annotations

import numpy as np

from .diagnostics import DiagnosticsRecord
from .grid import GridSpec


def _num(x) -> str:
    return "%.17g" % x


def write_diagnostics_csv(series, path):
    """Write records with a fixed header; 17 significant digits, ``\\n`` line ends."""
    if not series:
        raise ValueError("diagnostics series is empty")
    cols = DiagnosticsRecord.columns()
    lines = [",".join(cols)]
    for rec in series:
        d = rec.as_dict()
        lines.append(",".join(_num(d[c]) for c in cols))
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_diagnostics_csv(path):
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        rows = [list(map(float, line.split(","))) for line in fh if line.strip()]
    return [DiagnosticsRecord(**dict(zip(header, r))) for r in rows]


def _block(a: np.ndarray) -> str:
    # VTK point order: x varies fastest
    return "\n".join(_num(x) for x in np.asarray(a).T.ravel())


def write_snapshot(state, path, grid: GridSpec | None = None):
    """Legacy VTK STRUCTURED_POINTS (ASCII) with scalars n, v, P and vector u.

    Velocity is averaged from faces to cell centers, so the staggering and
    the discrete divergence are not recoverable from the file.
    """
    g = grid or state.u.grid
    ux, uy = state.u.at_centers()
    npts = g.nx * g.ny
    out = [
        "# vtk DataFile Version 3.0",
        f"chemofluid snapshot t={_num(state.t)} step={state.step_count}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {g.nx} {g.ny} 1",
        f"ORIGIN {_num(0.5 * g.hx)} {_num(0.5 * g.hy)} 0",
        f"SPACING {_num(g.hx)} {_num(g.hy)} 1",
        f"POINT_DATA {npts}",
    ]
    for name, f in (("n", state.n), ("v", state.v), ("P", state.P)):
        out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default", _block(f)]
    out.append("VECTORS u double")
    out += [f"{_num(a)} {_num(b)} 0" for a, b in zip(ux.T.ravel(), uy.T.ravel())]
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(out) + "\n")


def read_snapshot(path) -> dict:
    """Inverse of ``write_snapshot``; arrays come back with shape ``(nx, ny)``."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().split("\n")
    title = lines[1].split()
    meta = dict(tok.split("=", 1) for tok in title if "=" in tok)
    nx, ny, _ = map(int, lines[4].split()[1:])
    npts = nx * ny
    out = {"t": float(meta["t"]), "step": int(meta["step"]), "nx": nx, "ny": ny,
           "spacing": tuple(map(float, lines[6].split()[1:3]))}
    i = 8
    while i < len(lines) and lines[i]:
        head = lines[i].split()
        if head[0] == "SCALARS":
            vals = np.array(lines[i + 2 : i + 2 + npts], dtype=float)
            out[head[1]] = vals.reshape(ny, nx).T
            i += 2 + npts
        elif head[0] == "VECTORS":
            vec = np.array([ln.split() for ln in lines[i + 1 : i + 1 + npts]], dtype=float)
            out["ux"] = vec[:, 0].reshape(ny, nx).T
            out["uy"] = vec[:, 1].reshape(ny, nx).T
            i += 1 + npts
        else:
            raise ValueError(f"unexpected VTK line {lines[i]!r}")
    return out
