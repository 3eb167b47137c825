"""Stokes cell problem: unit forcing along z1, no-slip walls, periodic sides.

The solve returns the mobility coefficient a_lambda = integral of the squared
scaled velocity gradient.  Testing the weak form with the solution itself
gives the identity a_lambda = integral of u1, which holds here to linear-
solver precision because the stiffness matrix, the energy, and the load
vector are all built from the same quadrature rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import operators as ops
from . import sparse_solver
from .errors import DegenerateLambda, NonFinite, SingularSystem, SolverFailure
from .geometry import CellMesh, cell_quadrature
from .sparse_solver import LinearSolveReport


@dataclass
class StokesCellSolution:
    """Velocity (u1, u2), pressure pi, and derived integrals on the cell."""

    u1: np.ndarray            # (n1, n2) at (xi_node, eta_cent); walls by ghosts
    u2: np.ndarray            # (n1, n2-1) at (xi_cent, interior eta_node)
    pi: np.ndarray            # (n1, n2) at cell centers, zero mean
    lam: float
    a_lambda: float
    energy: float             # integral of |scaled gradient|^2
    mean_u1: float            # integral of u1 over the cell
    divergence_residual: float
    int_u2: float             # integral of u2, not imposed, checked after
    pi_integral: float
    solve_report: LinearSolveReport
    mesh: CellMesh


def _check_lambda(lam):
    if not (isinstance(lam, (int, float)) and math.isfinite(lam) and lam > 0.0):
        raise DegenerateLambda(f"lambda must be positive and finite, got {lam!r}")


def assemble_stokes_system(mesh: CellMesh, lam: float):
    """Bordered saddle system for (u1, u2, pi, gamma); gamma pins the mean."""
    g1 = ops.build_edge_gradient(mesh, lam)
    g2 = ops.build_interior_edge_gradient(mesh, lam)
    div = ops.build_divergence(mesh, lam)
    n_u1 = mesh.n1 * mesh.n2
    n_u2 = mesh.n1 * (mesh.n2 - 1)
    n_p = mesh.n1 * mesh.n2
    a = sp.block_diag([g1.matrix(), g2.matrix()], format="csr")
    cw = ops.cell_weights(mesh)
    c_col = sp.csr_matrix((cw, (np.arange(n_p), np.zeros(n_p, dtype=int))),
                          shape=(n_p, 1))
    k = sp.bmat([[a, -div.T, None],
                 [div, None, c_col],
                 [None, c_col.T, None]], format="csr")
    rhs = np.zeros(n_u1 + n_u2 + n_p + 1)
    rhs[:n_u1] = ops.edge_weights(mesh)
    return k, rhs, g1, g2, div, (n_u1, n_u2, n_p)


def solve_stokes_cell(mesh: CellMesh, lam: float, tol: float = 1e-10,
                      max_unknowns: int = sparse_solver.DEFAULT_MAX_DIRECT_UNKNOWNS
                      ) -> StokesCellSolution:
    """Solve the cell flow problem for one value of lambda.

    Raises DegenerateLambda for non-positive or non-finite lambda and
    SolverFailure when the linear solve breaks down.
    """
    _check_lambda(lam)
    k, rhs, g1, g2, div, (n_u1, n_u2, n_p) = assemble_stokes_system(mesh, lam)
    try:
        x, report = sparse_solver.solve(k, rhs, tol=tol, max_unknowns=max_unknowns)
    except (SingularSystem, NonFinite) as exc:
        raise SolverFailure(f"cell flow solve failed: {exc}") from exc

    u = x[:n_u1 + n_u2]
    u1 = x[:n_u1].reshape(mesh.n1, mesh.n2)
    u2 = x[n_u1:n_u1 + n_u2].reshape(mesh.n1, mesh.n2 - 1)
    pi = x[n_u1 + n_u2:n_u1 + n_u2 + n_p].reshape(mesh.n1, mesh.n2)

    energy = g1.energy(u1) + g2.energy(u2)
    mean_u1 = cell_quadrature(mesh, u1)
    # pointwise divergence: flux imbalance over cell volume
    div_point = (div @ u) / ops.cell_weights(mesh)
    cw = ops.cell_weights(mesh)
    return StokesCellSolution(
        u1=u1, u2=u2, pi=pi, lam=float(lam),
        a_lambda=energy, energy=energy, mean_u1=mean_u1,
        divergence_residual=float(np.max(np.abs(div_point))),
        int_u2=cell_quadrature(mesh, u2),
        pi_integral=float(np.dot(cw, pi.ravel())),
        solve_report=report, mesh=mesh,
    )


def energy_identity_check(sol: StokesCellSolution) -> float:
    """Relative gap between the gradient energy and the velocity integral."""
    return abs(sol.energy - sol.mean_u1) / max(sol.energy, np.finfo(float).eps)
