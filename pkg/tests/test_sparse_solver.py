"""Sparse storage and the direct/iterative linear solve paths."""

import numpy as np
import pytest
import scipy.sparse as sp

from rugocell.errors import NonFinite, SingularSystem
from rugocell.sparse_solver import SparseMatrix, solve


def laplacian_1d(n):
    main = 2.0 * np.ones(n)
    off = -np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1]).tocsr()


def laplacian_2d(n):
    one = laplacian_1d(n)
    eye = sp.identity(n)
    return (sp.kron(one, eye) + sp.kron(eye, one)).tocsr()


class TestSparseMatrix:
    def test_from_coo_sums_duplicates(self):
        m = SparseMatrix.from_coo([0, 0, 1], [0, 0, 1], [1.0, 2.0, 5.0], (2, 2))
        assert m.nnz == 2
        assert np.allclose(m.matvec([1.0, 1.0]), [3.0, 5.0])
        m.check()

    def test_roundtrip_scipy(self):
        a = laplacian_1d(5)
        m = SparseMatrix.from_scipy(a)
        assert (m.to_scipy() != a).nnz == 0
        m.check()


class TestDirectSolve:
    def test_identity(self):
        m = SparseMatrix.from_scipy(sp.identity(3, format="csr"))
        x, rep = solve(m, np.array([1.0, 2.0, 3.0]))
        assert np.allclose(x, [1.0, 2.0, 3.0], atol=1e-14)
        assert rep.method == "direct"
        assert rep.residual <= 1e-10

    def test_dirichlet_laplacian_hand_oracle(self):
        # tridiag(-1, 2, -1), size 4, rhs ones: forward elimination gives
        # x = (2, 3, 3, 2)
        x, _ = solve(SparseMatrix.from_scipy(laplacian_1d(4)), np.ones(4))
        assert np.allclose(x, [2.0, 3.0, 3.0, 2.0], atol=1e-12)

    def test_zero_matrix(self):
        zero = sp.csr_matrix((3, 3))
        with pytest.raises(SingularSystem):
            solve(SparseMatrix.from_scipy(zero), np.ones(3))

    def test_nonfinite_rhs(self):
        m = SparseMatrix.from_scipy(sp.identity(3, format="csr"))
        with pytest.raises(NonFinite):
            solve(m, np.array([1.0, np.nan, 0.0]))

    def test_shape_guard(self):
        with pytest.raises(SingularSystem):
            solve(SparseMatrix.from_scipy(sp.csr_matrix(np.ones((2, 3)))),
                  np.ones(2))
        with pytest.raises(SingularSystem):
            solve(SparseMatrix.from_scipy(sp.identity(3, format="csr")),
                  np.ones(4))

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        a = laplacian_2d(12)
        b = rng.normal(size=a.shape[0])
        x1, _ = solve(SparseMatrix.from_scipy(a), b)
        x2, _ = solve(SparseMatrix.from_scipy(a), b)
        assert np.array_equal(x1, x2)

    def test_zero_rhs_shortcut(self):
        x, rep = solve(SparseMatrix.from_scipy(laplacian_1d(6)), np.zeros(6))
        assert np.array_equal(x, np.zeros(6))
        assert rep.iterations == 0


class TestIterativeSolve:
    def test_spd_monotone_history(self):
        a = laplacian_2d(40)         # 1600 unknowns, SPD
        rng = np.random.default_rng(5)
        b = rng.normal(size=a.shape[0])
        x, rep = solve(SparseMatrix.from_scipy(a), b, method="iterative")
        assert rep.method == "iterative"
        assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-10
        hist = rep.residual_history
        assert len(hist) >= 1
        assert all(later <= earlier * (1 + 1e-12)
                   for earlier, later in zip(hist, hist[1:]))

    def test_auto_threshold_picks_iterative(self):
        a = laplacian_2d(20)
        b = np.ones(a.shape[0])
        x, rep = solve(SparseMatrix.from_scipy(a), b, max_unknowns=100)
        assert rep.method == "iterative"
        assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-10
