import numpy as np
import pytest
import scipy.sparse as sp

from chemofluid.errors import SolverError
from chemofluid.grid import GridSpec, laplacian
from chemofluid.linalg import MMatrixSolver, assemble_diffusion, conjugate_gradient, neumann_operator


def test_neumann_operator_matches_stencil():
    g = GridSpec(9, 7, 1.0, 2.0)
    f = np.random.default_rng(0).random(g.shape)
    L = neumann_operator(g)
    assert np.abs((L @ f.ravel()).reshape(g.shape) - laplacian(g, f)).max() < 1e-11


def test_implicit_matrix_form():
    g = GridSpec(6, 5)
    L = neumann_operator(g)
    A = neumann_operator(g, dt=0.1)
    ref = sp.identity(30) - 0.1 * L
    assert abs(A - ref).max() < 1e-13
    assert sp.isspmatrix_csc(A)


def test_diag_extra_and_symmetry():
    wx = np.full((3, 4), 2.0)
    wy = np.full((4, 3), 3.0)
    L = assemble_diffusion((4, 4), wx, wy, diag_extra=np.ones((4, 4)))
    assert abs(L - L.T).max() == 0
    assert np.allclose(L @ np.ones(16), -1.0)


def test_mmatrix_solver_positivity_and_max_principle():
    g = GridSpec(32, 32)
    rng = np.random.default_rng(3)
    c = rng.random((31, 32)) + 1e-3, rng.random((32, 31)) + 1e-3
    solver = MMatrixSolver(neumann_operator(g, *c), dt=0.5)
    b = np.zeros(g.shape)
    b[5:8, 5:8] = 1e-20
    x = solver.solve(b)
    assert x.shape == b.shape
    assert (x >= 0).all() and x.max() <= b.max()
    # column sums of I - dt L are 1, so the total is conserved
    assert x.sum() == pytest.approx(b.sum(), rel=1e-12)


def test_cg_singular_neumann():
    g = GridSpec(16, 16)
    A = -neumann_operator(g)
    b = np.random.default_rng(1).standard_normal(g.nx * g.ny)
    b -= b.mean()
    x, it, res = conjugate_gradient(A, b, tol=1e-10, singular=True)
    assert res <= 1e-10 and abs(x.mean()) < 1e-14
    r = b - A @ x
    assert np.abs(r - r.mean()).max() <= 1e-10


def test_cg_iteration_cap_raises_with_residual():
    g = GridSpec(16, 16)
    A = sp.identity(256) - 0.1 * neumann_operator(g)
    b = np.random.default_rng(2).random(256)
    with pytest.raises(SolverError) as info:
        conjugate_gradient(A, b, tol=1e-14, max_iter=2)
    assert info.value.residual > 1e-14 and info.value.iterations == 2
