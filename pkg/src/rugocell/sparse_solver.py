"""Sparse assembly and deterministic linear solves for the cell systems.

Storage is compressed-row (CSR).  Systems up to ``max_unknowns`` go to a
sparse direct LU with one iterative-refinement pass; larger systems use
restarted GMRES with an incomplete-LU preconditioner and an explicit outer
loop so the true residual history is available to callers.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonFinite, SingularSystem

DEFAULT_TOL = 1e-10
DEFAULT_MAX_DIRECT_UNKNOWNS = 200_000

_GMRES_RESTART = 150
_GMRES_MAX_CYCLES = 400


@dataclass(frozen=True)
class SparseMatrix:
    """Square sparse matrix in CSR form (row offsets, column indices, values)."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple

    @classmethod
    def from_coo(cls, rows, cols, vals, shape) -> "SparseMatrix":
        """Assemble from triplets; duplicates are summed, indices sorted."""
        m = sp.coo_matrix((np.asarray(vals, dtype=float),
                           (np.asarray(rows), np.asarray(cols))), shape=shape).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.indptr, m.indices, m.data, m.shape)

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.indptr, m.indices, m.data, m.shape)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    @property
    def nnz(self) -> int:
        return len(self.data)

    def matvec(self, x) -> np.ndarray:
        return self.to_scipy() @ np.asarray(x, dtype=float)

    def check(self) -> None:
        """Verify sortedness, bounds, and absence of duplicates per row."""
        n_rows, n_cols = self.shape
        assert len(self.indptr) == n_rows + 1
        for r in range(n_rows):
            cols = self.indices[self.indptr[r]:self.indptr[r + 1]]
            assert np.all(np.diff(cols) > 0), f"row {r} has unsorted or duplicate columns"
            if len(cols):
                assert 0 <= cols[0] and cols[-1] < n_cols, f"row {r} column out of bounds"


@dataclass
class LinearSolveReport:
    """Diagnostics for one linear solve."""

    method: str
    iterations: int
    residual: float
    wall_time: float
    residual_history: list = field(default_factory=list)


def _as_scipy(matrix):
    if isinstance(matrix, SparseMatrix):
        return matrix.to_scipy()
    return sp.csr_matrix(matrix)


def _relative_residual(a, x, b, b_scale):
    return float(np.linalg.norm(b - a @ x) / b_scale)


def _solve_direct(a, b, tol, t0):
    try:
        lu = spla.splu(a.tocsc(), permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystem(f"factorization breakdown: {exc}") from exc
    b_scale = max(1.0, float(np.linalg.norm(b)))
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise NonFinite("direct solve produced a non-finite solution")
    # Always refine once: the constraint rows of saddle systems need it to
    # sit at machine precision.  Repeat only if the target is still missed.
    x = x + lu.solve(b - a @ x)
    refinements = 1
    res = _relative_residual(a, x, b, b_scale)
    while res > tol and refinements < 4:
        x = x + lu.solve(b - a @ x)
        refinements += 1
        res = _relative_residual(a, x, b, b_scale)
    if not np.isfinite(res):
        raise NonFinite("residual is not finite")
    if res > tol:
        raise SingularSystem(
            f"direct solve stagnated at relative residual {res:.3e} (target {tol:.1e})")
    return x, LinearSolveReport("direct", refinements, res, time.perf_counter() - t0)


def _solve_iterative(a, b, tol, t0):
    b_scale = max(1.0, float(np.linalg.norm(b)))
    target = tol * b_scale
    try:
        ilu = spla.spilu(a.tocsc(), drop_tol=1e-6, fill_factor=12)
    except RuntimeError as exc:
        raise SingularSystem(f"preconditioner breakdown: {exc}") from exc
    precond = spla.LinearOperator(a.shape, ilu.solve)
    x = np.zeros_like(b)
    history = []
    inner_count = [0]

    def count_inner(_):
        inner_count[0] += 1

    for _ in range(_GMRES_MAX_CYCLES):
        x, _info = spla.gmres(a, b, x0=x, M=precond, restart=_GMRES_RESTART,
                              maxiter=1, rtol=0.0, atol=target,
                              callback=count_inner, callback_type="pr_norm")
        if not np.all(np.isfinite(x)):
            raise NonFinite("iterative solve produced a non-finite iterate")
        res = float(np.linalg.norm(b - a @ x))
        history.append(res / b_scale)
        if res <= target:
            break
        if len(history) >= 6 and history[-6] - history[-1] <= 1e-15 * history[0]:
            raise SingularSystem(
                f"iteration stagnated at relative residual {history[-1]:.3e}")
    res = history[-1]
    if res * b_scale > target:
        raise SingularSystem(
            f"iterative solve missed target: relative residual {res:.3e} (target {tol:.1e})")
    return x, LinearSolveReport("iterative", inner_count[0], res,
                                time.perf_counter() - t0, history)


def solve(matrix, rhs, tol: float = DEFAULT_TOL, method: str = "auto",
          max_unknowns: int = DEFAULT_MAX_DIRECT_UNKNOWNS):
    """Solve matrix @ x = rhs to a relative residual of tol.

    method "auto" picks direct LU up to max_unknowns unknowns and
    preconditioned restarted GMRES beyond; "direct"/"iterative" force a path.
    Returns (x, LinearSolveReport).  Raises SingularSystem on factorization
    breakdown or stagnation, NonFinite on NaN/Inf anywhere.
    """
    t0 = time.perf_counter()
    a = _as_scipy(matrix)
    n_rows, n_cols = a.shape
    if n_rows != n_cols:
        raise SingularSystem(f"matrix is {n_rows}x{n_cols}, not square")
    b = np.asarray(rhs, dtype=float)
    if b.shape != (n_rows,):
        raise SingularSystem(f"rhs length {b.shape} does not match n={n_rows}")
    if not np.all(np.isfinite(a.data)):
        raise NonFinite("matrix contains NaN/Inf entries")
    if not np.all(np.isfinite(b)):
        raise NonFinite("rhs contains NaN/Inf entries")
    if not np.any(b):
        return np.zeros(n_rows), LinearSolveReport("direct", 0, 0.0,
                                                   time.perf_counter() - t0)
    if method == "direct" or (method == "auto" and n_rows <= max_unknowns):
        return _solve_direct(a, b, tol, t0)
    if method in ("iterative", "auto"):
        return _solve_iterative(a, b, tol, t0)
    raise SingularSystem(f"unknown solve method {method!r}")
