"""Sparse operator assembly and the two linear solvers used by the steppers.

``MMatrixSolver`` factors ``I - dt L`` for a diffusion operator ``L`` without
pivoting.  For an M-matrix this keeps every elimination step sign-definite, so
a nonnegative right-hand side yields a nonnegative solution in floating point
and the discrete maximum principle holds to round-off.

``conjugate_gradient`` is a plain (optionally Jacobi-preconditioned) CG with
a max-norm stopping test, used for the singular Neumann pressure problem.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError


def assemble_diffusion(shape, wx, wy, diag_extra=None, dt=None):
    """Matrix of ``(L f)_p = sum_q w_pq (f_q - f_p) - diag_extra_p f_p``.

    ``wx`` has shape ``(mx - 1, my)`` (coupling of x-neighbours), ``wy`` has
    shape ``(mx, my - 1)``.  Unknowns are flattened in C order.  With ``dt``
    given, returns the symmetric matrix ``I - dt L`` in CSC form instead.
    """
    mx, my = shape
    idx = np.arange(mx * my).reshape(shape)
    vals = np.zeros((mx, my, 5))
    cols = np.zeros((mx, my, 5), dtype=np.int32)
    mask = np.zeros((mx, my, 5), dtype=bool)
    # slots in ascending column order: x-1, y-1, diagonal, y+1, x+1
    vals[1:, :, 0], cols[1:, :, 0], mask[1:, :, 0] = wx, idx[:-1, :], True
    vals[:, 1:, 1], cols[:, 1:, 1], mask[:, 1:, 1] = wy, idx[:, :-1], True
    vals[:, :-1, 3], cols[:, :-1, 3], mask[:, :-1, 3] = wy, idx[:, 1:], True
    vals[:-1, :, 4], cols[:-1, :, 4], mask[:-1, :, 4] = wx, idx[1:, :], True
    diag = -vals.sum(axis=2)
    if diag_extra is not None:
        diag = diag - diag_extra
    vals[:, :, 2], cols[:, :, 2], mask[:, :, 2] = diag, idx, True
    if dt is not None:
        vals *= -dt
        vals[:, :, 2] += 1.0
    indptr = np.concatenate(([0], np.cumsum(mask.sum(axis=2).ravel()))).astype(np.int32)
    n = mx * my
    cls = sp.csr_matrix if dt is None else sp.csc_matrix
    return cls((vals[mask], cols[mask], indptr), shape=(n, n))


def neumann_operator(grid, cx=None, cy=None, dt=None):
    """``div(c grad .)`` on cell centers with zero-flux walls.

    ``cx``/``cy`` are interior face coefficients of shapes ``(nx-1, ny)`` and
    ``(nx, ny-1)``; ``None`` means 1.
    """
    wx = (np.ones((grid.nx - 1, grid.ny)) if cx is None else cx) / grid.hx**2
    wy = (np.ones((grid.nx, grid.ny - 1)) if cy is None else cy) / grid.hy**2
    return assemble_diffusion(grid.shape, wx, wy, dt=dt)


class MMatrixSolver:
    """Direct solver for ``A x = b`` with ``A = I - dt L`` an M-matrix.

    Pass either a diffusion operator ``L`` with ``dt``, or ``A`` itself.
    """

    def __init__(self, L, dt=None):
        A = L if dt is None else (sp.identity(L.shape[0], format="csc") - dt * L).tocsc()
        self._lu = spla.splu(
            A,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
        self.A = A

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self._lu.solve(np.ravel(b)).reshape(np.shape(b))


class _SolverCache:
    """Small LRU cache for factorizations of fixed operators (keyed by dt)."""

    def __init__(self, maxsize=8):
        self._d: OrderedDict = OrderedDict()
        self.maxsize = maxsize

    def get(self, key, build):
        if key in self._d:
            self._d.move_to_end(key)
            return self._d[key]
        val = build()
        self._d[key] = val
        if len(self._d) > self.maxsize:
            self._d.popitem(last=False)
        return val


factor_cache = _SolverCache()


def conjugate_gradient(A, b, x0=None, tol=1e-10, max_iter=10_000, singular=False, jacobi=False):
    """Solve ``A x = b`` for symmetric semi-definite ``A`` (negated Laplacians welcome).

    Stops when the max-norm of the residual is ``<= tol``.  With
    ``singular=True`` the problem is the pure-Neumann one: ``b`` and the
    iterates are kept mean-zero and the returned solution has zero mean.
    Returns ``(x, iterations, residual_inf)``; raises ``SolverError`` at the cap.
    """
    b = np.asarray(b, dtype=float).ravel()
    n = b.size
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float).ravel()
    if singular:
        b = b - b.mean()
        x -= x.mean()
    dinv = None
    if jacobi:
        d = A.diagonal()
        dinv = np.where(d != 0, 1.0 / np.where(d != 0, d, 1.0), 1.0)

    def true_residual(x):
        r = b - A @ x
        if singular:
            r -= r.mean()
        return r

    r = true_residual(x)
    it = 0
    res = float(np.abs(r).max()) if n else 0.0
    # restarts refresh the recursive residual against round-off drift
    for _restart in range(4):
        if res <= tol:
            break
        z = r * dinv if dinv is not None else r
        p = z.copy()
        rz = float(np.dot(r, z))
        while it < max_iter:
            Ap = A @ p
            pAp = float(np.dot(p, Ap))
            if pAp == 0.0:
                break
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            if singular:
                r -= r.mean()
            it += 1
            if float(np.abs(r).max()) <= tol:
                break
            z = r * dinv if dinv is not None else r
            rz_new = float(np.dot(r, z))
            p = z + (rz_new / rz) * p
            rz = rz_new
        r = true_residual(x)
        res = float(np.abs(r).max())
        if it >= max_iter:
            break
    if singular:
        x -= x.mean()
    if res > tol:
        raise SolverError("conjugate gradient did not reach tolerance", res, it)
    return x, it, res
