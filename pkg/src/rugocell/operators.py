"""Discrete gradient and divergence operators on the mapped staggered grid.

Every operator works in the mapped coordinates (xi, eta) of geometry.CellMesh
with the scaled physical derivatives

    d/dz1 = d/dxi - eta * (h'/h) * d/deta,      d/dz2 = (1/h) * d/deta,

and the anisotropy parameter lam multiplying the z1 component.  Gradients are
exposed as explicit quadrature-point operators (rows of a sparse matrix G plus
a positive diagonal weight w per row), so stiffness matrices assemble as
G^T diag(w) G and the discrete energy sum(w * (G v)^2) is algebraically tied
to the linear system.  That tie is what makes the energy identities of the
cell problems hold to solver precision instead of truncation error.

Degree-of-freedom layouts (see geometry for the point sets):

* edge fields (u1, w):       shape (n1, n2)   at (xi_node, eta_cent), flat i*n2+j
* interior edge fields (u2): shape (n1, n2-1) at (xi_cent, interior eta_node)
* cells (pressure):          shape (n1, n2)   at (xi_cent, eta_cent)
* wall-to-top node fields:   shape (n1, n2)   at (xi_node, eta_node[1..n2])

Homogeneous Dirichlet walls are built in: edge fields use mirror ghosts above
and below, interior edge fields have their wall rows eliminated, node fields
have the bottom row eliminated (the top row is free for flux conditions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import CellMesh


@dataclass(frozen=True)
class GradientOperator:
    """Quadrature-point gradient: rows of g are scaled derivative samples."""

    g: sp.csr_matrix
    w: np.ndarray

    def matrix(self) -> sp.csr_matrix:
        return (self.g.T @ sp.diags(self.w) @ self.g).tocsr()

    def energy(self, v) -> float:
        q = self.g @ np.ravel(v)
        return float(np.sum(self.w * q * q))


def _stack(ops):
    g = sp.vstack([op.g for op in ops], format="csr")
    w = np.concatenate([op.w for op in ops])
    return GradientOperator(g, w)


# ---------------------------------------------------------------------------
# weight vectors (physical dual-cell volumes per DOF)

def edge_weights(mesh: CellMesh) -> np.ndarray:
    """Dual volumes of edge-field DOFs, shape (n1, n2) flattened."""
    return np.repeat(mesh.h_node, mesh.n2) * (mesh.d1 * mesh.d2)


def interior_edge_weights(mesh: CellMesh) -> np.ndarray:
    """Dual volumes of interior-edge DOFs, shape (n1, n2-1) flattened."""
    return np.repeat(mesh.h_cent, mesh.n2 - 1) * (mesh.d1 * mesh.d2)


def cell_weights(mesh: CellMesh) -> np.ndarray:
    """Cell volumes, shape (n1, n2) flattened."""
    return np.repeat(mesh.h_cent, mesh.n2) * (mesh.d1 * mesh.d2)


def node_weights(mesh: CellMesh) -> np.ndarray:
    """Dual volumes of node-field DOFs (rows j=1..n2; top row is a half cell)."""
    w = np.tile(np.full(mesh.n2, mesh.d1 * mesh.d2), (mesh.n1, 1))
    w[:, -1] *= 0.5
    return (mesh.h_node[:, None] * w).ravel()


# ---------------------------------------------------------------------------
# building blocks for the edge family (u1, w): shape (n1, n2)

def _edge_deta(mesh: CellMesh) -> sp.csr_matrix:
    """eta-differences of an edge field at every node line (i, j), j=0..n2.

    Mirror ghosts encode the Dirichlet walls: the j=0 row is 2*v[i,0]/d2 and
    the j=n2 row is -2*v[i,n2-1]/d2, the one-sided wall derivatives of the
    interpolant that vanishes on the wall.
    """
    n1, n2, d2 = mesh.n1, mesh.n2, mesh.d2
    rows, cols, vals = [], [], []
    ii = np.arange(n1)

    def q(i, j):
        return i * (n2 + 1) + j

    def dof(i, j):
        return i * n2 + j

    rows.append(q(ii, 0)); cols.append(dof(ii, 0)); vals.append(np.full(n1, 2.0 / d2))
    for j in range(1, n2):
        rows.append(q(ii, j)); cols.append(dof(ii, j)); vals.append(np.full(n1, 1.0 / d2))
        rows.append(q(ii, j)); cols.append(dof(ii, j - 1)); vals.append(np.full(n1, -1.0 / d2))
    rows.append(q(ii, n2)); cols.append(dof(ii, n2 - 1)); vals.append(np.full(n1, -2.0 / d2))
    return sp.csr_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n1 * (n2 + 1), n1 * n2))


def _edge_dxi(mesh: CellMesh) -> sp.csr_matrix:
    """xi-differences of an edge field at cell centers (periodic wrap)."""
    n1, n2, d1 = mesh.n1, mesh.n2, mesh.d1
    idx = np.arange(n1 * n2)
    i, j = np.divmod(idx, n2)
    ip = (i + 1) % n1
    rows = np.concatenate([idx, idx])
    cols = np.concatenate([ip * n2 + j, i * n2 + j])
    vals = np.concatenate([np.full(n1 * n2, 1.0 / d1), np.full(n1 * n2, -1.0 / d1)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n1 * n2, n1 * n2))


def _avg_center_from_node(mesh: CellMesh) -> sp.csr_matrix:
    """Average node-line samples (i, j), j=0..n2 onto cell centers."""
    n1, n2 = mesh.n1, mesh.n2
    idx = np.arange(n1 * n2)
    i, j = np.divmod(idx, n2)
    ip = (i + 1) % n1
    rows = np.tile(idx, 4)
    cols = np.concatenate([i * (n2 + 1) + j, ip * (n2 + 1) + j,
                           i * (n2 + 1) + j + 1, ip * (n2 + 1) + j + 1])
    vals = np.full(4 * n1 * n2, 0.25)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n1 * n2, n1 * (n2 + 1)))


def build_edge_gradient(mesh: CellMesh, lam: float) -> GradientOperator:
    """Scaled gradient of an edge field (u1 or w) with Dirichlet walls.

    Two quadrature families: the z1 component at cell centers (xi-difference
    plus the averaged metric cross term) and the z2 component at node lines
    (half weights on the wall rows).
    """
    n1, n2 = mesh.n1, mesh.n2
    vol = mesh.d1 * mesh.d2
    deta = _edge_deta(mesh)

    cross = (mesh.eta_cent[None, :] * (mesh.dh_cent / mesh.h_cent)[:, None]).ravel()
    g_z1 = lam * (_edge_dxi(mesh) - sp.diags(cross) @ _avg_center_from_node(mesh) @ deta)
    w_z1 = np.repeat(mesh.h_cent, n2) * vol

    inv_h = np.repeat(1.0 / mesh.h_node, n2 + 1)
    g_z2 = sp.diags(inv_h) @ deta
    w_col = np.full(n2 + 1, vol)
    w_col[0] = w_col[-1] = 0.5 * vol
    w_z2 = (mesh.h_node[:, None] * w_col[None, :]).ravel()

    return _stack([GradientOperator(g_z1.tocsr(), w_z1),
                   GradientOperator(g_z2.tocsr(), w_z2)])


# ---------------------------------------------------------------------------
# building blocks for the interior edge family (u2): shape (n1, n2-1)

def _interior_deta(mesh: CellMesh) -> sp.csr_matrix:
    """eta-differences of u2 at cell centers; wall rows of u2 are zero."""
    n1, n2, d2 = mesh.n1, mesh.n2, mesh.d2
    rows, cols, vals = [], [], []
    ii = np.arange(n1)

    def q(i, jc):
        return i * n2 + jc

    def dof(i, j):
        return i * (n2 - 1) + (j - 1)

    for jc in range(n2):
        if jc + 1 <= n2 - 1:
            rows.append(q(ii, jc)); cols.append(dof(ii, jc + 1)); vals.append(np.full(n1, 1.0 / d2))
        if jc >= 1:
            rows.append(q(ii, jc)); cols.append(dof(ii, jc)); vals.append(np.full(n1, -1.0 / d2))
    return sp.csr_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n1 * n2, n1 * (n2 - 1)))


def build_interior_edge_gradient(mesh: CellMesh, lam: float) -> GradientOperator:
    """Scaled gradient of u2 (zero on both walls, eliminated rows).

    The z2 component lives at cell centers.  The z1 component lives at
    interior node points; the top wall gets half-weight one-sided rows
    because the metric cross term does not vanish on a sloped wall, and
    dropping that strip would cost an order of convergence.
    """
    n1, n2 = mesh.n1, mesh.n2
    d1, d2, vol = mesh.d1, mesh.d2, mesh.d1 * mesh.d2
    deta = _interior_deta(mesh)

    inv_h = np.repeat(1.0 / mesh.h_cent, n2)
    g_z2 = sp.diags(inv_h) @ deta
    w_z2 = np.repeat(mesh.h_cent, n2) * vol

    # interior node rows: xi-difference between the two adjacent columns
    n_int = n1 * (n2 - 1)
    idx = np.arange(n_int)
    i, jj = np.divmod(idx, n2 - 1)          # jj = j - 1
    im = (i - 1) % n1
    rows = np.concatenate([idx, idx])
    cols = np.concatenate([i * (n2 - 1) + jj, im * (n2 - 1) + jj])
    vals = np.concatenate([np.full(n_int, 1.0 / d1), np.full(n_int, -1.0 / d1)])
    dxi = sp.csr_matrix((vals, (rows, cols)), shape=(n_int, n1 * (n2 - 1)))

    # average the center eta-differences onto interior nodes
    rows = np.tile(idx, 4)
    cols = np.concatenate([im * n2 + jj, i * n2 + jj, im * n2 + jj + 1, i * n2 + jj + 1])
    avg = sp.csr_matrix((np.full(4 * n_int, 0.25), (rows, cols)),
                        shape=(n_int, n1 * n2))
    cross = (mesh.eta_node[1:-1][None, :] * (mesh.dh_node / mesh.h_node)[:, None]).ravel()
    g_z1 = lam * (dxi - sp.diags(cross) @ avg @ deta)
    w_z1 = np.repeat(mesh.h_node, n2 - 1) * vol

    # top wall rows: d(u2)/dxi vanishes along the wall but the cross term
    # -eta (h'/h) d(u2)/deta does not; one-sided difference to the wall zero.
    ii = np.arange(n1)
    im = (ii - 1) % n1
    coef = lam * mesh.dh_node / (mesh.h_node * 2.0 * d2)
    rows = np.concatenate([ii, ii])
    cols = np.concatenate([im * (n2 - 1) + (n2 - 2), ii * (n2 - 1) + (n2 - 2)])
    vals = np.concatenate([coef, coef])
    g_top = sp.csr_matrix((vals, (rows, cols)), shape=(n1, n1 * (n2 - 1)))
    w_top = mesh.h_node * (0.5 * vol)

    return _stack([GradientOperator(g_z2.tocsr(), w_z2),
                   GradientOperator(g_z1.tocsr(), w_z1),
                   GradientOperator(g_top, w_top)])


# ---------------------------------------------------------------------------
# flux-form divergence

def build_divergence(mesh: CellMesh, lam: float) -> sp.csr_matrix:
    """Volume-scaled divergence: cell rows over combined (u1, u2) columns.

    Each row is the net outward flux of (lam*u1, u2) through the mapped cell
    faces, so the rows telescope exactly: the all-ones vector is a left null
    vector in exact arithmetic, which keeps the pressure system consistent
    and the divergence residual at solver precision.  Sloped-face fluxes use
    the four-point interpolant of u1 whose wall value is exactly zero by the
    mirror ghosts.
    """
    n1, n2 = mesh.n1, mesh.n2
    d1, d2 = mesh.d1, mesh.d2
    n_u1 = n1 * n2
    rows, cols, vals = [], [], []

    idx = np.arange(n1 * n2)
    i, jc = np.divmod(idx, n2)
    ip = (i + 1) % n1

    # vertical faces: lam * d2 * (h u1) difference
    rows += [idx, idx]
    cols += [ip * n2 + jc, i * n2 + jc]
    vals += [lam * d2 * mesh.h_node[ip], -lam * d2 * mesh.h_node[i]]

    # horizontal faces: u2 difference (wall rows are zero and absent)
    def u2col(col_i, j):
        return n_u1 + col_i * (n2 - 1) + (j - 1)

    top = jc + 1 <= n2 - 1
    rows += [idx[top]]
    cols += [u2col(i[top], jc[top] + 1)]
    vals += [np.full(int(top.sum()), d1)]
    bot = jc >= 1
    rows += [idx[bot]]
    cols += [u2col(i[bot], jc[bot])]
    vals += [np.full(int(bot.sum()), -d1)]

    # sloped-face cross flux: -lam * d1 * h'_c * eta * (4-point u1 average),
    # differenced between the cell's top and bottom faces.  eta=0 kills the
    # bottom wall face; the top wall face vanishes through the mirror ghosts.
    for sign, face_j in ((-1.0, jc + 1), (+1.0, jc)):
        live = (face_j >= 1) & (face_j <= n2 - 1)
        if not np.any(live):
            continue
        ci, cj = i[live], face_j[live]
        factor = sign * lam * d1 * mesh.dh_cent[ci] * mesh.eta_node[cj] * 0.25
        for col_i in (ci, (ci + 1) % n1):
            for col_j in (cj - 1, cj):
                rows.append(idx[live])
                cols.append(col_i * n2 + col_j)
                vals.append(factor)

    data = np.concatenate(vals)
    return sp.csr_matrix((data, (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n1 * n2, n_u1 + n1 * (n2 - 1)))


# ---------------------------------------------------------------------------
# node family for the temperature solver: shape (n1, n2), rows j=1..n2

def _node_value_maps(mesh: CellMesh):
    """Column index helpers treating the eliminated bottom row as zero."""
    n2 = mesh.n2

    def dof(i, j):
        return i * n2 + (j - 1)

    return dof


def build_node_gradient(mesh: CellMesh, lam: float) -> GradientOperator:
    """Scaled gradient of a node field with a Dirichlet bottom and free top.

    The z2 component lives on vertical edge midpoints (full eta coverage);
    the z1 component lives on horizontal cell-center lines j=1..n2-1 plus
    half-weight one-sided rows along the top wall, where the field does not
    vanish and both derivative terms survive.
    """
    n1, n2 = mesh.n1, mesh.n2
    d1, d2, vol = mesh.d1, mesh.d2, mesh.d1 * mesh.d2
    dof = _node_value_maps(mesh)
    rows, cols, vals, weights = [], [], [], []
    n_q = 0

    ii = np.arange(n1)

    # z2 family: (T(i,j+1) - T(i,j)) / (h d2) at (xi_node, eta_cent[j]); the
    # j=0 edge touches only T(i,1) because T(i,0) = 0.
    for j in range(n2):
        q = n_q + ii
        coef = 1.0 / (mesh.h_node * d2)
        rows.append(q); cols.append(dof(ii, j + 1)); vals.append(coef)
        if j >= 1:
            rows.append(q); cols.append(dof(ii, j)); vals.append(-coef)
        weights.append(mesh.h_node * vol)
        n_q += n1

    # z1 family, interior rows j=1..n2-1 at (xi_cent, eta_node[j]):
    # lam * [ (T(i+1,j)-T(i,j))/d1 - eta_j (h'c/hc) * centered eta-average ]
    ip = (ii + 1) % n1
    for j in range(1, n2):
        q = n_q + ii
        rows.append(q); cols.append(dof(ip, j)); vals.append(np.full(n1, lam / d1))
        rows.append(q); cols.append(dof(ii, j)); vals.append(np.full(n1, -lam / d1))
        cross = lam * mesh.eta_node[j] * mesh.dh_cent / mesh.h_cent
        quarter = cross / (4.0 * d2)
        for col_i in (ii, ip):
            rows.append(q); cols.append(dof(col_i, j + 1)); vals.append(-quarter)
            if j - 1 >= 1:
                rows.append(q); cols.append(dof(col_i, j - 1)); vals.append(quarter)
        weights.append(mesh.h_cent * vol)
        n_q += n1

    # z1 family, top wall: half weight, one-sided eta difference
    q = n_q + ii
    rows.append(q); cols.append(dof(ip, n2)); vals.append(np.full(n1, lam / d1))
    rows.append(q); cols.append(dof(ii, n2)); vals.append(np.full(n1, -lam / d1))
    cross = lam * 1.0 * mesh.dh_cent / mesh.h_cent
    half = cross / (2.0 * d2)
    for col_i in (ii, ip):
        rows.append(q); cols.append(dof(col_i, n2)); vals.append(-half)
        rows.append(q); cols.append(dof(col_i, n2 - 1)); vals.append(half)
    weights.append(mesh.h_cent * (0.5 * vol))
    n_q += n1

    g = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n_q, n1 * n2))
    return GradientOperator(g, np.concatenate(weights))
