"""Discrete spaces: Nedelec edge elements (first kind) and Lagrange elements.

Velocity lives in an edge-based space conforming in H(curl): order 1 is the
Whitney 1-form family (one degree of freedom per edge), order 2 adds a second
moment per edge and two interior moments per triangle. Pressure lives in the
standard Lagrange space of matching order. Gradients of pressure functions
are exactly representable in the velocity space, which is the structural
property everything downstream relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.linalg import splu

from .mesh import Mesh
from .quadrature import edge_rule, triangle_rule

BARYCENTRIC_TOL = 1e-10

# cycle-order local edges, matching mesh.triangle_edges
_LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def _barycentric_gradients(mesh: Mesh) -> np.ndarray:
    """Gradients of the three barycentric coordinates per triangle, (F, 3, 2)."""
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    grads = np.empty((mesh.triangle_count, 3, 2))
    grads[:, 1, 0] = (c[:, 1] - a[:, 1]) / det
    grads[:, 1, 1] = -(c[:, 0] - a[:, 0]) / det
    grads[:, 2, 0] = -(b[:, 1] - a[:, 1]) / det
    grads[:, 2, 1] = (b[:, 0] - a[:, 0]) / det
    grads[:, 0] = -grads[:, 1] - grads[:, 2]
    return grads


def _check_barycentric(bary: np.ndarray) -> np.ndarray:
    bary = np.atleast_2d(np.asarray(bary, dtype=float))
    if bary.shape[1] != 3:
        raise ValueError("barycentric points must have three components")
    if bary.min() < -BARYCENTRIC_TOL or np.abs(bary.sum(axis=1) - 1.0).max() > BARYCENTRIC_TOL:
        raise ValueError("point outside the closed triangle")
    return bary


# monomial basis of the local order-2 space in shifted-scaled coordinates:
# (P1)^2 plus the two homogeneous fields orthogonal to the position vector
def _n2_monomials(xh: np.ndarray, yh: np.ndarray) -> np.ndarray:
    k = xh.shape[0]
    m = np.zeros((k, 8, 2))
    m[:, 0, 0] = 1.0
    m[:, 1, 0] = xh
    m[:, 2, 0] = yh
    m[:, 3, 1] = 1.0
    m[:, 4, 1] = xh
    m[:, 5, 1] = yh
    m[:, 6, 0] = xh * yh
    m[:, 6, 1] = -xh * xh
    m[:, 7, 0] = yh * yh
    m[:, 7, 1] = -xh * yh
    return m


def _n2_monomial_curls(xh: np.ndarray, yh: np.ndarray, scale: float) -> np.ndarray:
    k = xh.shape[0]
    c = np.zeros((k, 8))
    c[:, 2] = -1.0
    c[:, 4] = 1.0
    c[:, 6] = -3.0 * xh
    c[:, 7] = -3.0 * yh
    return c / scale


@dataclass(frozen=True)
class EdgeSpace:
    """Degree-of-freedom layout for the H(curl)-conforming velocity space."""

    mesh: Mesh
    order: int
    essential_bc: bool
    full_dof_count: int
    free: np.ndarray          # mask of retained dofs (tangential boundary dofs
                              # are dropped when essential_bc is set)
    cell_dofs: np.ndarray     # (F, nloc) indices into the full layout
    cell_signs: np.ndarray    # (F, nloc) orientation factors
    grads: np.ndarray         # (F, 3, 2) barycentric gradients
    coeff: np.ndarray | None  # (F, 8, 8) order-2 nodal-basis coefficients
    centroids: np.ndarray | None
    scales: np.ndarray | None

    @property
    def dof_count(self) -> int:
        return int(self.free.sum())

    @property
    def local_dof_count(self) -> int:
        return 3 if self.order == 1 else 8

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return full[..., self.free] if full.ndim == 1 else full[self.free]

    def prolong(self, reduced: np.ndarray) -> np.ndarray:
        full = np.zeros(self.full_dof_count)
        full[self.free] = reduced
        return full


@dataclass(frozen=True)
class NodalSpace:
    """Degree-of-freedom layout for the Lagrange pressure space."""

    mesh: Mesh
    order: int
    zero_mean: bool
    dof_count: int
    cell_dofs: np.ndarray
    grads: np.ndarray

    @property
    def local_dof_count(self) -> int:
        return 3 if self.order == 1 else 6


@dataclass
class DiscreteField:
    """Coefficient vector bound to a space."""

    space: Union[EdgeSpace, NodalSpace]
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.dof_count,):
            raise ValueError(
                f"coefficient length {self.coefficients.shape} does not match "
                f"space dof count {self.space.dof_count}")


def build_edge_space(mesh: Mesh, order: int, essential_bc: bool = False) -> EdgeSpace:
    if order not in (1, 2):
        raise ValueError(f"unsupported edge-element order {order}")
    grads = _barycentric_gradients(mesh)
    ne = mesh.edge_count
    nf = mesh.triangle_count
    if order == 1:
        full = ne
        cell_dofs = mesh.triangle_edges.copy()
        cell_signs = mesh.triangle_edge_signs.astype(float)
        coeff = centroids = scales = None
    else:
        full = 2 * ne + 2 * nf
        cell_dofs = np.empty((nf, 8), dtype=np.int64)
        for k in range(3):
            cell_dofs[:, 2 * k] = 2 * mesh.triangle_edges[:, k]
            cell_dofs[:, 2 * k + 1] = 2 * mesh.triangle_edges[:, k] + 1
        cell_dofs[:, 6] = 2 * ne + 2 * np.arange(nf)
        cell_dofs[:, 7] = 2 * ne + 2 * np.arange(nf) + 1
        cell_signs = np.ones((nf, 8))
        coeff, centroids, scales = _build_n2_coefficients(mesh)

    free = np.ones(full, dtype=bool)
    if essential_bc:
        if order == 1:
            free[mesh.boundary_edges] = False
        else:
            free[2 * mesh.boundary_edges] = False
            free[2 * mesh.boundary_edges + 1] = False

    cell_dofs.flags.writeable = False
    cell_signs.flags.writeable = False
    free.flags.writeable = False
    return EdgeSpace(mesh, order, essential_bc, full, free, cell_dofs, cell_signs,
                     grads, coeff, centroids, scales)


def _build_n2_coefficients(mesh: Mesh):
    """Per-triangle coefficients of the order-2 dual basis via moment matrices."""
    erule = edge_rule(4)
    trule = triangle_rule(3)
    areas = mesh.signed_areas()
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    edge_vecs = mesh.vertices[mesh.triangles[:, [1, 2, 0]]] - mesh.vertices[mesh.triangles]
    scales = np.sqrt((edge_vecs ** 2).sum(axis=2)).max(axis=1)
    coeff = np.empty((mesh.triangle_count, 8, 8))
    s = erule.points
    leg = 2.0 * s - 1.0
    for t in range(mesh.triangle_count):
        d = np.empty((8, 8))
        for k in range(3):
            a, b = mesh.edges[mesh.triangle_edges[t, k]]
            xa, xb = mesh.vertices[a], mesh.vertices[b]
            length = float(np.hypot(*(xb - xa)))
            tang = (xb - xa) / length
            pts = xa[None, :] + s[:, None] * (xb - xa)[None, :]
            mono = _n2_monomials((pts[:, 0] - centroids[t, 0]) / scales[t],
                                 (pts[:, 1] - centroids[t, 1]) / scales[t])
            trace = mono @ tang
            d[2 * k] = length * (erule.weights @ trace)
            d[2 * k + 1] = length * ((erule.weights * leg) @ trace)
        pts = trule.points @ mesh.vertices[mesh.triangles[t]]
        mono = _n2_monomials((pts[:, 0] - centroids[t, 0]) / scales[t],
                             (pts[:, 1] - centroids[t, 1]) / scales[t])
        w = 2.0 * areas[t] * trule.weights
        d[6] = w @ mono[:, :, 0]
        d[7] = w @ mono[:, :, 1]
        coeff[t] = np.linalg.inv(d)
    return coeff, centroids, scales


def build_nodal_space(mesh: Mesh, order: int, zero_mean: bool = False) -> NodalSpace:
    if order not in (1, 2):
        raise ValueError(f"unsupported Lagrange order {order}")
    grads = _barycentric_gradients(mesh)
    if order == 1:
        dof = mesh.vertex_count
        cell_dofs = mesh.triangles.copy()
    else:
        dof = mesh.vertex_count + mesh.edge_count
        cell_dofs = np.hstack([mesh.triangles,
                               mesh.vertex_count + mesh.triangle_edges])
    cell_dofs.flags.writeable = False
    return NodalSpace(mesh, order, zero_mean, dof, cell_dofs, grads)


def eval_edge_basis(space: EdgeSpace, triangle: int, points) -> tuple[np.ndarray, np.ndarray]:
    """Local basis fields and curls at barycentric points.

    Returns (values, curls) of shapes (k, nloc, 2) and (k, nloc) in the local
    dof order of ``space.cell_dofs``.
    """
    bary = _check_barycentric(points)
    k = bary.shape[0]
    g = space.grads[triangle]
    if space.order == 1:
        vals = np.empty((k, 3, 2))
        curls = np.empty((k, 3))
        for slot, (p, q) in enumerate(_LOCAL_EDGES):
            sgn = space.cell_signs[triangle, slot]
            vals[:, slot, :] = sgn * (bary[:, p, None] * g[q] - bary[:, q, None] * g[p])
            curls[:, slot] = sgn * 2.0 * (g[p, 0] * g[q, 1] - g[p, 1] * g[q, 0])
        return vals, curls
    pts = bary @ space.mesh.vertices[space.mesh.triangles[triangle]]
    xh = (pts[:, 0] - space.centroids[triangle, 0]) / space.scales[triangle]
    yh = (pts[:, 1] - space.centroids[triangle, 1]) / space.scales[triangle]
    mono = _n2_monomials(xh, yh)
    mcurl = _n2_monomial_curls(xh, yh, space.scales[triangle])
    c = space.coeff[triangle]
    vals = np.einsum("kjd,ji->kid", mono, c)
    curls = mcurl @ c
    return vals, curls


def eval_nodal_basis(space: NodalSpace, triangle: int, points) -> tuple[np.ndarray, np.ndarray]:
    """Local Lagrange basis values and gradients, shapes (k, nloc) and (k, nloc, 2)."""
    bary = _check_barycentric(points)
    k = bary.shape[0]
    g = space.grads[triangle]
    if space.order == 1:
        vals = bary.copy()
        grads = np.broadcast_to(g, (k, 3, 2)).copy()
        return vals, grads
    vals = np.empty((k, 6))
    grads = np.empty((k, 6, 2))
    for i in range(3):
        vals[:, i] = bary[:, i] * (2.0 * bary[:, i] - 1.0)
        grads[:, i, :] = (4.0 * bary[:, i, None] - 1.0) * g[i]
    for slot, (p, q) in enumerate(_LOCAL_EDGES):
        vals[:, 3 + slot] = 4.0 * bary[:, p] * bary[:, q]
        grads[:, 3 + slot, :] = 4.0 * (bary[:, p, None] * g[q] + bary[:, q, None] * g[p])
    return vals, grads


def eval_edge_field(field: DiscreteField, triangle: int, points) -> tuple[np.ndarray, np.ndarray]:
    """Values (k, 2) and curls (k,) of a velocity field on one triangle."""
    space: EdgeSpace = field.space
    full = space.prolong(field.coefficients)
    local = full[space.cell_dofs[triangle]]
    vals, curls = eval_edge_basis(space, triangle, points)
    return np.einsum("kid,i->kd", vals, local), curls @ local


def eval_nodal_field(field: DiscreteField, triangle: int, points) -> tuple[np.ndarray, np.ndarray]:
    """Values (k,) and gradients (k, 2) of a pressure field on one triangle."""
    space: NodalSpace = field.space
    local = field.coefficients[space.cell_dofs[triangle]]
    vals, grads = eval_nodal_basis(space, triangle, points)
    return vals @ local, np.einsum("kid,i->kd", grads, local)


def _edge_points_in_triangle(mesh: Mesh, edge: int, triangle: int, s: np.ndarray) -> np.ndarray:
    """Barycentric coordinates, inside ``triangle``, of points along ``edge``."""
    a, b = mesh.edges[edge]
    tri = mesh.triangles[triangle]
    la = int(np.nonzero(tri == a)[0][0])
    lb = int(np.nonzero(tri == b)[0][0])
    bary = np.zeros((s.size, 3))
    bary[:, la] = 1.0 - s
    bary[:, lb] = s
    return bary


def interpolate_cellwise(space: EdgeSpace, eval_on_triangle) -> DiscreteField:
    """Edge-moment interpolation of a field given by a per-triangle evaluator.

    ``eval_on_triangle(t, bary)`` must return values of shape (k, 2). Edge
    moments are taken from one adjacent triangle; this is well defined for
    tangentially continuous fields.
    """
    mesh = space.mesh
    degree = 2 * space.order + 2
    erule = edge_rule(degree)
    s = erule.points
    leg = 2.0 * s - 1.0
    full = np.zeros(space.full_dof_count)
    for e in range(mesh.edge_count):
        t = int(mesh.edge_triangles[e, 0])
        a, b = mesh.edges[e]
        xa, xb = mesh.vertices[a], mesh.vertices[b]
        length = float(np.hypot(*(xb - xa)))
        tang = (xb - xa) / length
        vals = eval_on_triangle(t, _edge_points_in_triangle(mesh, e, t, s))
        trace = vals @ tang
        if space.order == 1:
            full[e] = length * (erule.weights @ trace)
        else:
            full[2 * e] = length * (erule.weights @ trace)
            full[2 * e + 1] = length * ((erule.weights * leg) @ trace)
    if space.order == 2:
        trule = triangle_rule(degree)
        areas = mesh.signed_areas()
        for t in range(mesh.triangle_count):
            vals = eval_on_triangle(t, trule.points)
            w = 2.0 * areas[t] * trule.weights
            full[space.cell_dofs[t, 6]] = w @ vals[:, 0]
            full[space.cell_dofs[t, 7]] = w @ vals[:, 1]
    return DiscreteField(space, space.restrict(full))


def interpolate_edge(space: EdgeSpace, field: Callable) -> DiscreteField:
    """Interpolate an analytic vector field ``field(x, y) -> (k, 2)``."""
    mesh = space.mesh

    def on_triangle(t, bary):
        pts = np.atleast_2d(bary) @ mesh.vertices[mesh.triangles[t]]
        return np.asarray(field(pts[:, 0], pts[:, 1]), dtype=float)

    return interpolate_cellwise(space, on_triangle)


def interpolate_nodal(space: NodalSpace, f: Callable) -> DiscreteField:
    """Pointwise Lagrange interpolation of a scalar field ``f(x, y) -> (k,)``."""
    mesh = space.mesh
    coeffs = np.empty(space.dof_count)
    coeffs[:mesh.vertex_count] = f(mesh.vertices[:, 0], mesh.vertices[:, 1])
    if space.order == 2:
        mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
        coeffs[mesh.vertex_count:] = f(mids[:, 0], mids[:, 1])
    return DiscreteField(space, coeffs)


def gradient_coefficients(edge_space: EdgeSpace, nodal_space: NodalSpace) -> csr_array:
    """Exact velocity-space representation of every nodal basis gradient.

    Returns a sparse (full_dof_count, nodal dof) matrix whose column j holds
    the edge-space coefficients of grad(q_j). Requires matching orders.
    """
    if edge_space.order != nodal_space.order:
        raise ValueError("gradient representation requires matching orders")
    mesh = edge_space.mesh
    if edge_space.order == 1:
        ne = mesh.edge_count
        rows = np.repeat(np.arange(ne), 2)
        cols = mesh.edges.ravel()
        vals = np.tile([-1.0, 1.0], ne)
        return csr_array((vals, (rows, cols)), shape=(ne, nodal_space.dof_count))

    erule = edge_rule(4)
    s = erule.points
    leg = 2.0 * s - 1.0
    trule = triangle_rule(2)
    areas = mesh.signed_areas()
    rows, cols, vals = [], [], []
    for e in range(mesh.edge_count):
        t = int(mesh.edge_triangles[e, 0])
        a, b = mesh.edges[e]
        xa, xb = mesh.vertices[a], mesh.vertices[b]
        length = float(np.hypot(*(xb - xa)))
        tang = (xb - xa) / length
        bary = _edge_points_in_triangle(mesh, e, t, s)
        _, grads = eval_nodal_basis(nodal_space, t, bary)
        trace = grads @ tang
        m0 = length * (erule.weights @ trace)
        m1 = length * ((erule.weights * leg) @ trace)
        for j, dof in enumerate(nodal_space.cell_dofs[t]):
            rows += [2 * e, 2 * e + 1]
            cols += [dof, dof]
            vals += [m0[j], m1[j]]
    for t in range(mesh.triangle_count):
        _, grads = eval_nodal_basis(nodal_space, t, trule.points)
        w = 2.0 * areas[t] * trule.weights
        mx = w @ grads[:, :, 0]
        my = w @ grads[:, :, 1]
        for j, dof in enumerate(nodal_space.cell_dofs[t]):
            rows += [edge_space.cell_dofs[t, 6], edge_space.cell_dofs[t, 7]]
            cols += [dof, dof]
            vals += [mx[j], my[j]]
    return csr_array((np.array(vals), (np.array(rows), np.array(cols))),
                     shape=(edge_space.full_dof_count, nodal_space.dof_count))


def grad_inclusion_check(edge_space: EdgeSpace, nodal_space: NodalSpace) -> float:
    """Largest L2 distance of a nodal basis gradient to the edge space.

    Solves the least-squares projection through the velocity mass matrix and
    integrates the pointwise residual field by quadrature, so the result sits
    at roundoff (not at sqrt(roundoff)) when the gradient inclusion holds.
    """
    from .forms import assemble_b, assemble_mass

    if edge_space.order != nodal_space.order:
        raise ValueError("gradient inclusion requires matching orders")
    m = assemble_mass(edge_space).matrix
    b = assemble_b(edge_space, nodal_space).matrix
    lu = splu(m.tocsc())
    x = lu.solve(b.toarray())          # best-approximation coefficients per column

    mesh = edge_space.mesh
    rule = triangle_rule(2 * edge_space.order + 2)
    areas = mesh.signed_areas()
    res_sq = np.zeros(nodal_space.dof_count)
    for t in range(mesh.triangle_count):
        phi, _ = eval_edge_basis(edge_space, t, rule.points)
        _, gq = eval_nodal_basis(nodal_space, t, rule.points)
        w = 2.0 * areas[t] * rule.weights
        diff = np.einsum("kid,ij->kjd", phi, x[edge_space.cell_dofs[t]])
        for slot, dof in enumerate(nodal_space.cell_dofs[t]):
            diff[:, dof, :] -= gq[:, slot, :]
        res_sq += np.einsum("k,kjd->j", w, diff ** 2)
    return float(np.sqrt(res_sq.max()))
