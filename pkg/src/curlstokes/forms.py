"""Assembly of the discrete operators of the weak no-slip formulation.

The velocity block combines the curl-curl form with boundary terms that
impose the tangential data weakly: a symmetric consistency pair and a
penalty scaled by C_w/h. In two dimensions the curl is scalar and the
boundary pairing of curl against tangential traces is realized as

    <gamma_curl(u), gamma_par(v)> = -int_Gamma curl(u) (v . t) ds

with t = rotate90(n) counterclockwise; the sign is pinned by requiring the
integration-by-parts identity (and hence exact consistency) to close.
Triplet accumulation is merged with a fixed (row, col, value) sort so that
assembled matrices do not depend on element processing order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse

from .quadrature import edge_rule, triangle_rule
from .spaces import (DiscreteField, EdgeSpace, NodalSpace,
                     _edge_points_in_triangle, eval_edge_basis,
                     eval_edge_field, eval_nodal_basis)


@dataclass
class SparseOperator:
    """Assembled bilinear form in compressed sparse form."""

    matrix: sparse.csr_array
    symmetric: bool = False

    @property
    def row_count(self) -> int:
        return self.matrix.shape[0]

    @property
    def col_count(self) -> int:
        return self.matrix.shape[1]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class BoundaryData:
    """Boundary velocity data and the penalty configuration.

    ``g(x, y)`` returns the full boundary velocity (both components); the
    assembly pairs it against tangential traces, which selects the
    tangential part automatically. ``h`` is the global mesh size used in
    the C_w/h scaling unless ``per_edge_h`` replaces it by edge lengths.
    """

    g: Callable
    C_w: float
    h: float
    per_edge_h: bool = False

    def __post_init__(self):
        if self.C_w <= 0:
            raise ValueError("penalty constant must be positive")
        if self.h <= 0:
            raise ValueError("mesh size must be positive")


def merge_triplets(rows, cols, vals, shape) -> sparse.csr_array:
    """Sum duplicate triplets in a content-determined order."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    order = np.lexsort((vals, cols, rows))
    r, c, v = rows[order], cols[order], vals[order]
    if r.size == 0:
        return sparse.csr_array(shape)
    new = np.nonzero((r[1:] != r[:-1]) | (c[1:] != c[:-1]))[0] + 1
    starts = np.concatenate([[0], new])
    sums = np.add.reduceat(v, starts)
    return sparse.csr_array((sums, (r[starts], c[starts])), shape=shape)


def _restrict_operator(mat: sparse.csr_array, space: EdgeSpace,
                       cols_space: EdgeSpace | None = None) -> sparse.csr_array:
    if space.essential_bc:
        mat = mat[space.free]
    if cols_space is not None and cols_space.essential_bc:
        mat = mat[:, cols_space.free]
    return mat


def _volume_rule(space: EdgeSpace | NodalSpace):
    return triangle_rule(2 * space.order + 2)


def _boundary_rule(space: EdgeSpace):
    return edge_rule(2 * space.order + 2)


def assemble_mass(V: EdgeSpace) -> SparseOperator:
    """Velocity mass matrix (v_i, v_j)."""
    mesh = V.mesh
    rule = _volume_rule(V)
    areas = mesh.signed_areas()
    nloc = V.local_dof_count
    rows, cols, vals = [], [], []
    for t in range(mesh.triangle_count):
        phi, _ = eval_edge_basis(V, t, rule.points)
        w = 2.0 * areas[t] * rule.weights
        local = np.einsum("k,kid,kjd->ij", w, phi, phi)
        dofs = V.cell_dofs[t]
        rows.append(np.repeat(dofs, nloc))
        cols.append(np.tile(dofs, nloc))
        vals.append(local.ravel())
    mat = merge_triplets(np.concatenate(rows), np.concatenate(cols),
                         np.concatenate(vals), (V.full_dof_count, V.full_dof_count))
    return SparseOperator(_restrict_operator(mat, V, V), symmetric=True)


def assemble_curl_curl(V: EdgeSpace) -> SparseOperator:
    """Curl-curl matrix (curl v_i, curl v_j); discrete gradients lie in its kernel."""
    mesh = V.mesh
    rule = _volume_rule(V)
    areas = mesh.signed_areas()
    nloc = V.local_dof_count
    rows, cols, vals = [], [], []
    for t in range(mesh.triangle_count):
        _, curls = eval_edge_basis(V, t, rule.points)
        w = 2.0 * areas[t] * rule.weights
        local = np.einsum("k,ki,kj->ij", w, curls, curls)
        dofs = V.cell_dofs[t]
        rows.append(np.repeat(dofs, nloc))
        cols.append(np.tile(dofs, nloc))
        vals.append(local.ravel())
    mat = merge_triplets(np.concatenate(rows), np.concatenate(cols),
                         np.concatenate(vals), (V.full_dof_count, V.full_dof_count))
    return SparseOperator(_restrict_operator(mat, V, V), symmetric=True)


def _boundary_edge_data(V: EdgeSpace, rule):
    """Per boundary edge: adjacent triangle, length, tangent, trace and curl values."""
    mesh = V.mesh
    for k, e in enumerate(mesh.boundary_edges):
        t = int(mesh.edge_triangles[e, 0])
        a, b = mesh.edges[e]
        length = float(np.hypot(*(mesh.vertices[b] - mesh.vertices[a])))
        tang = mesh.boundary_tangents[k]
        bary = _edge_points_in_triangle(mesh, e, t, rule.points)
        phi, curls = eval_edge_basis(V, t, bary)
        trace = phi @ tang
        yield k, e, t, length, trace, curls


def assemble_nitsche(V: EdgeSpace, bd: BoundaryData) -> SparseOperator:
    """Boundary part of the velocity form: consistency, symmetry and penalty terms."""
    mesh = V.mesh
    rule = _boundary_rule(V)
    nloc = V.local_dof_count
    rows, cols, vals = [], [], []
    for k, e, t, length, trace, curls in _boundary_edge_data(V, rule):
        w = length * rule.weights
        h_eff = length if bd.per_edge_h else bd.h
        pen = (bd.C_w / h_eff) * np.einsum("k,ki,kj->ij", w, trace, trace)
        cons = -np.einsum("k,ki,kj->ij", w, trace, curls)
        local = pen + cons + cons.T
        dofs = V.cell_dofs[t]
        rows.append(np.repeat(dofs, nloc))
        cols.append(np.tile(dofs, nloc))
        vals.append(local.ravel())
    if rows:
        mat = merge_triplets(np.concatenate(rows), np.concatenate(cols),
                             np.concatenate(vals), (V.full_dof_count, V.full_dof_count))
    else:
        mat = sparse.csr_array((V.full_dof_count, V.full_dof_count))
    return SparseOperator(_restrict_operator(mat, V, V), symmetric=True)


def assemble_b(V: EdgeSpace, Q: NodalSpace) -> SparseOperator:
    """Coupling matrix B[i, j] = (v_i, grad q_j)."""
    if V.mesh is not Q.mesh:
        raise ValueError("velocity and pressure spaces must share a mesh")
    mesh = V.mesh
    rule = triangle_rule(2 * max(V.order, Q.order) + 2)
    areas = mesh.signed_areas()
    rows, cols, vals = [], [], []
    for t in range(mesh.triangle_count):
        phi, _ = eval_edge_basis(V, t, rule.points)
        _, gq = eval_nodal_basis(Q, t, rule.points)
        w = 2.0 * areas[t] * rule.weights
        local = np.einsum("k,kid,kjd->ij", w, phi, gq)
        vd = V.cell_dofs[t]
        qd = Q.cell_dofs[t]
        rows.append(np.repeat(vd, qd.size))
        cols.append(np.tile(qd, vd.size))
        vals.append(local.ravel())
    mat = merge_triplets(np.concatenate(rows), np.concatenate(cols),
                         np.concatenate(vals), (V.full_dof_count, Q.dof_count))
    return SparseOperator(_restrict_operator(mat, V), symmetric=False)


def assemble_mass_nodal(Q: NodalSpace) -> SparseOperator:
    """Pressure mass matrix (q_i, q_j)."""
    mesh = Q.mesh
    rule = _volume_rule(Q)
    areas = mesh.signed_areas()
    nloc = Q.local_dof_count
    rows, cols, vals = [], [], []
    for t in range(mesh.triangle_count):
        q, _ = eval_nodal_basis(Q, t, rule.points)
        w = 2.0 * areas[t] * rule.weights
        local = np.einsum("k,ki,kj->ij", w, q, q)
        dofs = Q.cell_dofs[t]
        rows.append(np.repeat(dofs, nloc))
        cols.append(np.tile(dofs, nloc))
        vals.append(local.ravel())
    mat = merge_triplets(np.concatenate(rows), np.concatenate(cols),
                         np.concatenate(vals), (Q.dof_count, Q.dof_count))
    return SparseOperator(mat, symmetric=True)


def assemble_stiffness(Q: NodalSpace) -> SparseOperator:
    """Pressure stiffness matrix (grad q_i, grad q_j)."""
    mesh = Q.mesh
    rule = _volume_rule(Q)
    areas = mesh.signed_areas()
    nloc = Q.local_dof_count
    rows, cols, vals = [], [], []
    for t in range(mesh.triangle_count):
        _, gq = eval_nodal_basis(Q, t, rule.points)
        w = 2.0 * areas[t] * rule.weights
        local = np.einsum("k,kid,kjd->ij", w, gq, gq)
        dofs = Q.cell_dofs[t]
        rows.append(np.repeat(dofs, nloc))
        cols.append(np.tile(dofs, nloc))
        vals.append(local.ravel())
    mat = merge_triplets(np.concatenate(rows), np.concatenate(cols),
                         np.concatenate(vals), (Q.dof_count, Q.dof_count))
    return SparseOperator(mat, symmetric=True)


def assemble_mean_vector(Q: NodalSpace) -> np.ndarray:
    """Vector of (q_j, 1), used to pin the pressure mean at solve time."""
    mesh = Q.mesh
    rule = _volume_rule(Q)
    areas = mesh.signed_areas()
    m = np.zeros(Q.dof_count)
    for t in range(mesh.triangle_count):
        q, _ = eval_nodal_basis(Q, t, rule.points)
        w = 2.0 * areas[t] * rule.weights
        np.add.at(m, Q.cell_dofs[t], w @ q)
    return m


def assemble_rhs(V: EdgeSpace, f: Callable, bd: BoundaryData) -> np.ndarray:
    """Load vector (f, v) + C_w/h <g, gamma_par(v)> + <g, gamma_curl(v)>."""
    mesh = V.mesh
    rule = _volume_rule(V)
    areas = mesh.signed_areas()
    full = np.zeros(V.full_dof_count)
    for t in range(mesh.triangle_count):
        phi, _ = eval_edge_basis(V, t, rule.points)
        pts = rule.points @ mesh.vertices[mesh.triangles[t]]
        fv = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
        w = 2.0 * areas[t] * rule.weights
        np.add.at(full, V.cell_dofs[t], np.einsum("k,kd,kid->i", w, fv, phi))
    brule = _boundary_rule(V)
    for k, e, t, length, trace, curls in _boundary_edge_data(V, brule):
        a, b = mesh.edges[e]
        pts = mesh.vertices[a][None, :] + brule.points[:, None] * (mesh.vertices[b] - mesh.vertices[a])[None, :]
        gv = np.asarray(bd.g(pts[:, 0], pts[:, 1]), dtype=float)
        gt = gv @ mesh.boundary_tangents[k]
        w = length * brule.weights
        h_eff = length if bd.per_edge_h else bd.h
        np.add.at(full, V.cell_dofs[t],
                  (bd.C_w / h_eff) * np.einsum("k,k,ki->i", w, gt, trace)
                  - np.einsum("k,k,ki->i", w, gt, curls))
    return V.restrict(full)


def assemble_divergence_rhs(Q: NodalSpace, g: Callable) -> np.ndarray:
    """Boundary consistency term <g . n, q_j> for nonzero normal data."""
    mesh = Q.mesh
    rule = edge_rule(2 * Q.order + 2)
    out = np.zeros(Q.dof_count)
    for k, e in enumerate(mesh.boundary_edges):
        t = int(mesh.edge_triangles[e, 0])
        a, b = mesh.edges[e]
        length = float(np.hypot(*(mesh.vertices[b] - mesh.vertices[a])))
        pts = mesh.vertices[a][None, :] + rule.points[:, None] * (mesh.vertices[b] - mesh.vertices[a])[None, :]
        gv = np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float)
        gn = gv @ mesh.boundary_normals[k]
        bary = _edge_points_in_triangle(mesh, e, t, rule.points)
        q, _ = eval_nodal_basis(Q, t, bary)
        w = length * rule.weights
        np.add.at(out, Q.cell_dofs[t], np.einsum("k,k,ki->i", w, gn, q))
    return out


def boundary_trace_norms(field, mesh, curl=None, degree: int = 8) -> tuple[float, float]:
    """L2 norms over the boundary of the tangential trace and of the curl trace.

    ``field`` is either a DiscreteField on an edge space or a callable
    ``field(x, y) -> (k, 2)`` with the matching scalar ``curl(x, y) -> (k,)``.
    """
    rule = edge_rule(degree)
    par_sq = 0.0
    curl_sq = 0.0
    discrete = isinstance(field, DiscreteField)
    if discrete and field.space.mesh is not mesh:
        raise ValueError("field mesh does not match")
    for k, e in enumerate(mesh.boundary_edges):
        t = int(mesh.edge_triangles[e, 0])
        a, b = mesh.edges[e]
        length = float(np.hypot(*(mesh.vertices[b] - mesh.vertices[a])))
        w = length * rule.weights
        if discrete:
            bary = _edge_points_in_triangle(mesh, e, t, rule.points)
            vals, curls = eval_edge_field(field, t, bary)
        else:
            pts = mesh.vertices[a][None, :] + rule.points[:, None] * (mesh.vertices[b] - mesh.vertices[a])[None, :]
            vals = np.asarray(field(pts[:, 0], pts[:, 1]), dtype=float)
            curls = np.zeros(rule.points.size) if curl is None else np.asarray(
                curl(pts[:, 0], pts[:, 1]), dtype=float)
        trace = vals @ mesh.boundary_tangents[k]
        par_sq += float(w @ trace ** 2)
        curl_sq += float(w @ curls ** 2)
    return float(np.sqrt(par_sq)), float(np.sqrt(curl_sq))


def assemble_velocity_block(V: EdgeSpace, bd: BoundaryData | None) -> SparseOperator:
    """Full velocity operator: curl-curl plus the boundary terms (when given)."""
    k = assemble_curl_curl(V)
    if bd is None:
        return k
    n = assemble_nitsche(V, bd)
    return SparseOperator((k.matrix + n.matrix).tocsr(), symmetric=True)
