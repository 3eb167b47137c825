"""Temperature cell problem: diffusion plus a frozen rotational drift.

For each macroscopic sample x1 the problem is linear: the drift field is the
perpendicular gradient of the already-computed scalar cell solution, scaled
by drift_scale = (D/L) g(x1).  The bottom wall is held at zero, the top wall
carries the prescribed flux k G(z1) through the weak-form surface term, and
the side boundaries are periodic.  Advection uses centered differences with
a per-node, per-direction first-order upwind fallback once the local cell
Peclet number exceeds 2 (reported, not fatal).
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import operators as ops
from . import sparse_solver
from .errors import (AdvectionDominatedWarning, NonFinite, ShapeMismatch,
                     SingularSystem, SolverFailure)
from .geometry import CellMesh, cell_quadrature
from .laplace_cell import LaplaceCellSolution
from .sparse_solver import LinearSolveReport
from .stokes_cell import _check_lambda

THREAD_ENV_VAR = "RUGOCELL_HEAT_THREADS"
PECLET_LIMIT = 2.0


@dataclass
class HeatCellSolution:
    """Nodal temperature field and its cell integral for one sample point."""

    T: np.ndarray             # (n1, n2+1) at every node; bottom row is zero
    drift_scale: float
    lam: float
    T_av_contrib: float       # integral of T over the cell
    flux_data: np.ndarray     # k * G at the top nodes
    solve_report: LinearSolveReport
    peclet_max: float
    upwind_nodes: int
    mesh: CellMesh


def drift_at_nodes(mesh: CellMesh, lam: float, w: np.ndarray):
    """Perpendicular scaled gradient (d/dz2 w, -lam d/dz1 w) at the nodes.

    Returns arrays of shape (n1, n2) for node rows j = 1..n2.  Mirror ghosts
    reproduce the wall zeros of w, so the drift is tangential at both walls
    up to truncation error.
    """
    n1, n2 = mesh.n1, mesh.n2
    d1, d2 = mesh.d1, mesh.d2
    # eta-differences on node lines j=0..n2 (ghost rows fold in the walls)
    deta = np.empty((n1, n2 + 1))
    deta[:, 1:n2] = (w[:, 1:] - w[:, :-1]) / d2
    deta[:, 0] = 2.0 * w[:, 0] / d2
    deta[:, n2] = -2.0 * w[:, n2 - 1] / d2
    # xi-differences at cell centers, then 4-point averages onto nodes
    dxi_c = (np.roll(w, -1, axis=0) - w) / d1
    dxi_pad = np.empty((n1, n2 + 2))
    dxi_pad[:, 1:n2 + 1] = dxi_c
    dxi_pad[:, 0] = -dxi_c[:, 0]
    dxi_pad[:, n2 + 1] = -dxi_c[:, n2 - 1]
    dxi_n = 0.25 * (dxi_pad[:, :-1] + dxi_pad[:, 1:]
                    + np.roll(dxi_pad, 1, axis=0)[:, :-1]
                    + np.roll(dxi_pad, 1, axis=0)[:, 1:])
    eta = mesh.eta_node[None, 1:]
    slope = (mesh.dh_node / mesh.h_node)[:, None]
    dz1_w = dxi_n[:, 1:] - eta * slope * deta[:, 1:]
    dz2_w = deta[:, 1:] / mesh.h_node[:, None]
    return dz2_w, -lam * dz1_w


def _advection_matrix(mesh: CellMesh, lam: float, drift1, drift2, s: float):
    """Volume-weighted rows of s * (drift . scaled gradient) at the nodes.

    Also returns (max Peclet, number of upwinded node-directions).
    """
    n1, n2 = mesh.n1, mesh.n2
    d1, d2 = mesh.d1, mesh.d2
    eta = mesh.eta_node[None, 1:]
    slope = (mesh.dh_node / mesh.h_node)[:, None]
    inv_h = (1.0 / mesh.h_node)[:, None]
    c_xi = lam * drift1
    c_eta = -lam * drift1 * eta * slope + drift2 * inv_h

    a_xi = lam * lam
    a_eta = lam * lam * (eta * slope) ** 2 + inv_h ** 2
    pe_xi = np.abs(s * c_xi) * d1 / a_xi
    pe_eta = np.abs(s * c_eta) * d2 / a_eta
    up_xi = pe_xi > PECLET_LIMIT
    up_eta = pe_eta > PECLET_LIMIT
    up_eta[:, -1] = False      # top row keeps its one-sided stencil
    peclet_max = float(max(pe_xi.max(initial=0.0), pe_eta.max(initial=0.0)))

    vol = ops.node_weights(mesh).reshape(n1, n2)
    rows, cols, vals = [], [], []
    idx = np.arange(n1 * n2).reshape(n1, n2)
    ii, jj = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    ip, im = (ii + 1) % n1, (ii - 1) % n1

    def add(r, c, v):
        rows.append(r.ravel()); cols.append(c.ravel()); vals.append(v.ravel())

    coef_xi = s * vol * c_xi
    centered = ~up_xi
    add(idx[centered], idx[ip, jj][centered], (coef_xi / (2 * d1))[centered])
    add(idx[centered], idx[im, jj][centered], (-coef_xi / (2 * d1))[centered])
    # upwind against the effective velocity -s*c
    back = up_xi & (s * c_xi < 0)
    fwd = up_xi & ~(s * c_xi < 0)
    add(idx[back], idx[back], (coef_xi / d1)[back])
    add(idx[back], idx[im, jj][back], (-coef_xi / d1)[back])
    add(idx[fwd], idx[ip, jj][fwd], (coef_xi / d1)[fwd])
    add(idx[fwd], idx[fwd], (-coef_xi / d1)[fwd])

    coef_eta = s * vol * c_eta
    interior = jj < n2 - 1
    centered = interior & ~up_eta
    up = idx[ii, np.minimum(jj + 1, n2 - 1)]   # masked off the top row below
    has_down = jj >= 1            # node row j=1 sits above the zero wall row
    down = idx[ii, np.maximum(jj - 1, 0)]
    add(idx[centered], up[centered], (coef_eta / (2 * d2))[centered])
    pick = centered & has_down
    add(idx[pick], down[pick], (-coef_eta / (2 * d2))[pick])
    back = interior & up_eta & (s * c_eta < 0)
    fwd = interior & up_eta & ~(s * c_eta < 0)
    add(idx[back], idx[back], (coef_eta / d2)[back])
    pick = back & has_down
    add(idx[pick], down[pick], (-coef_eta / d2)[pick])
    add(idx[fwd], up[fwd], (coef_eta / d2)[fwd])
    add(idx[fwd], idx[fwd], (-coef_eta / d2)[fwd])
    # top row: second-order one-sided eta derivative
    top = jj == n2 - 1
    add(idx[top], idx[top], (3.0 * coef_eta / (2 * d2))[top])
    add(idx[top], idx[ii, jj - 1][top], (-4.0 * coef_eta / (2 * d2))[top])
    add(idx[top], idx[ii, jj - 2][top], (coef_eta / (2 * d2))[top])

    c = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n1 * n2, n1 * n2))
    return c, peclet_max, int(up_xi.sum() + up_eta.sum())


def _top_flux_rhs(mesh: CellMesh, k: float, G, surface_measure: str) -> np.ndarray:
    if surface_measure not in ("arclength", "flat"):
        raise ShapeMismatch(f"unknown surface measure {surface_measure!r}")
    measure = np.sqrt(1.0 + mesh.dh_node ** 2) if surface_measure == "arclength" \
        else np.ones(mesh.n1)
    g_vals = np.asarray(G(mesh.xi_node), dtype=float)
    rhs = np.zeros((mesh.n1, mesh.n2))
    rhs[:, -1] = k * g_vals * measure * mesh.d1
    return rhs.ravel()


def solve_heat_cell(mesh: CellMesh, lam: float, w_cell: LaplaceCellSolution,
                    drift_scale: float, k: float, G,
                    tol: float = 1e-10, surface_measure: str = "arclength",
                    max_unknowns: int = sparse_solver.DEFAULT_MAX_DIRECT_UNKNOWNS,
                    _operator_cache: dict | None = None) -> HeatCellSolution:
    """Solve one temperature cell problem for a fixed drift scale."""
    _check_lambda(lam)
    if w_cell.mesh.n1 != mesh.n1 or w_cell.mesh.n2 != mesh.n2:
        raise ShapeMismatch("scalar cell solution was computed on a different mesh")
    if w_cell.lam != lam:
        raise ShapeMismatch(f"scalar cell solution used lambda={w_cell.lam}, not {lam}")
    if k < 0:
        raise ShapeMismatch(f"flux scale k must be >= 0, got {k}")

    cache = _operator_cache if _operator_cache is not None else {}
    if "diffusion" not in cache:
        cache["diffusion"] = ops.build_node_gradient(mesh, lam).matrix()
        cache["drift"] = drift_at_nodes(mesh, lam, w_cell.w)
    diffusion = cache["diffusion"]
    drift1, drift2 = cache["drift"]

    peclet_max, upwind_nodes = 0.0, 0
    system = diffusion
    if drift_scale != 0.0:
        adv, peclet_max, upwind_nodes = _advection_matrix(
            mesh, lam, drift1, drift2, drift_scale)
        system = (diffusion - adv).tocsr()
        if upwind_nodes:
            warnings.warn(
                f"cell Peclet reached {peclet_max:.2f}; upwinding engaged at "
                f"{upwind_nodes} node-directions", AdvectionDominatedWarning,
                stacklevel=2)

    rhs = _top_flux_rhs(mesh, k, G, surface_measure)
    try:
        x, report = sparse_solver.solve(system, rhs, tol=tol,
                                        max_unknowns=max_unknowns)
    except (SingularSystem, NonFinite) as exc:
        raise SolverFailure(f"temperature cell solve failed: {exc}") from exc

    T = np.zeros((mesh.n1, mesh.n2 + 1))
    T[:, 1:] = x.reshape(mesh.n1, mesh.n2)
    return HeatCellSolution(
        T=T, drift_scale=float(drift_scale), lam=float(lam),
        T_av_contrib=cell_quadrature(mesh, T),
        flux_data=k * np.asarray(G(mesh.xi_node), dtype=float),
        solve_report=report, peclet_max=peclet_max,
        upwind_nodes=upwind_nodes, mesh=mesh,
    )


def temperature_profile(mesh: CellMesh, lam: float, w_cell: LaplaceCellSolution,
                        params, g, G, x1_samples,
                        tol: float = 1e-10, surface_measure: str = "arclength",
                        threads: int | None = None):
    """Average temperature at each macroscopic sample point.

    One linear solve per distinct drift scale (D/L) g(x1); degenerate drifts
    (D = 0 or g identically zero on the samples) collapse to a single solve.
    Thread count comes from the RUGOCELL_HEAT_THREADS environment variable
    unless given explicitly; results are ordered by sample index either way.

    Returns (T_av array, list of HeatCellSolution for the distinct scales).
    """
    x1 = np.asarray(x1_samples, dtype=float)
    scales = (params.D / params.L) * np.asarray(g(x1), dtype=float)
    if params.D == 0.0:
        scales = np.zeros_like(x1)
    unique = sorted(set(float(s) for s in scales))
    if threads is None:
        threads = int(os.environ.get(THREAD_ENV_VAR, "1") or "1")
    cache: dict = {}
    # warm the shared operator cache once before any worker threads start
    ops_ready = ops.build_node_gradient(mesh, lam).matrix()
    cache["diffusion"] = ops_ready
    cache["drift"] = drift_at_nodes(mesh, lam, w_cell.w)

    def run(s):
        return solve_heat_cell(mesh, lam, w_cell, s, params.k, G, tol=tol,
                               surface_measure=surface_measure,
                               _operator_cache=cache)

    if threads > 1 and len(unique) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solutions = list(pool.map(run, unique))
    else:
        solutions = [run(s) for s in unique]
    table = {s: sol.T_av_contrib for s, sol in zip(unique, solutions)}
    t_av = np.array([table[float(s)] for s in scales])
    return t_av, solutions
