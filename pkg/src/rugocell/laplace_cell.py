"""Scalar cell problem with unit source: the microrotation coefficient.

Same grid family and gradient rows as the u1 velocity component, so the
system is symmetric positive definite and the energy identity
b_lambda = integral of w holds to solver precision.  The angular viscosity
never enters: it is factored out of the cell problem by the limit model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from . import sparse_solver
from .errors import NonFinite, SingularSystem, SolverFailure
from .geometry import CellMesh, cell_quadrature
from .sparse_solver import LinearSolveReport
from .stokes_cell import _check_lambda


@dataclass
class LaplaceCellSolution:
    """Scalar field w and its derived integrals on the cell."""

    w: np.ndarray             # (n1, n2) at (xi_node, eta_cent); walls by ghosts
    lam: float
    b_lambda: float
    energy: float
    mean_w: float
    solve_report: LinearSolveReport
    mesh: CellMesh


def solve_laplace_cell(mesh: CellMesh, lam: float, tol: float = 1e-10,
                       max_unknowns: int = sparse_solver.DEFAULT_MAX_DIRECT_UNKNOWNS
                       ) -> LaplaceCellSolution:
    """Solve -lap_lambda w = 1 with no-slip walls; returns b_lambda."""
    _check_lambda(lam)
    g = ops.build_edge_gradient(mesh, lam)
    rhs = ops.edge_weights(mesh)
    try:
        x, report = sparse_solver.solve(g.matrix(), rhs, tol=tol,
                                        max_unknowns=max_unknowns)
    except (SingularSystem, NonFinite) as exc:
        raise SolverFailure(f"scalar cell solve failed: {exc}") from exc
    w = x.reshape(mesh.n1, mesh.n2)
    energy = g.energy(w)
    return LaplaceCellSolution(
        w=w, lam=float(lam), b_lambda=energy, energy=energy,
        mean_w=cell_quadrature(mesh, w), solve_report=report, mesh=mesh,
    )


def energy_identity_check(sol: LaplaceCellSolution) -> float:
    """Relative gap between the gradient energy and the integral of w."""
    return abs(sol.energy - sol.mean_w) / max(sol.energy, np.finfo(float).eps)
