"""2D conforming triangle meshes with oriented edges and boundary data.

Meshes are immutable after construction. Edges carry a global low-to-high
vertex-index orientation; per-triangle edge signs record the local traversal
direction relative to it. Boundary detection is purely combinatorial (an edge
with a single adjacent triangle lies on the boundary).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class MeshError(Exception):
    """Base class for mesh construction and file errors."""


class MeshFormatError(MeshError):
    """Malformed mesh file: bad JSON or wrong structure."""


class MeshConnectivityError(MeshError):
    """Out-of-range vertex indices or non-conforming edge sharing."""


class MeshOrientationError(MeshError):
    """A triangle with non-positive signed area."""


@dataclass(frozen=True)
class Mesh:
    """Immutable 2D simplicial complex.

    vertices            (V, 2) coordinates
    triangles           (F, 3) vertex indices, counterclockwise
    edges               (E, 2) vertex indices, low index first
    triangle_edges      (F, 3) edge index of local edges (v0,v1), (v1,v2), (v2,v0)
    triangle_edge_signs (F, 3) +1 when local traversal matches global edge
                        orientation, else -1
    edge_triangles      (E, 2) adjacent triangle indices, -1 when absent
    boundary_edges      (Bn,) indices of edges with a single adjacent triangle
    boundary_normals    (Bn, 2) outward unit normals
    boundary_tangents   (Bn, 2) unit tangents, t = rotate90(n) (counterclockwise)
    h_max               maximum triangle diameter
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    triangle_edges: np.ndarray
    triangle_edge_signs: np.ndarray
    edge_triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_normals: np.ndarray
    boundary_tangents: np.ndarray
    h_max: float

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    @property
    def triangle_count(self) -> int:
        return self.triangles.shape[0]

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    def signed_areas(self) -> np.ndarray:
        return _signed_areas(self.vertices, self.triangles)

    def triangle_vertices(self, t: int) -> np.ndarray:
        return self.vertices[self.triangles[t]]

    def euler_characteristic(self) -> int:
        return self.vertex_count - self.edge_count + self.triangle_count

    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.vertex_count, dtype=bool)
        mask[self.edges[self.boundary_edges].ravel()] = True
        return mask


def _signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.flags.writeable = False


def build_mesh(vertices, triangles) -> Mesh:
    """Derive connectivity from vertices and counterclockwise triangles."""
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshFormatError("vertices must be an array of 2D coordinates")
    if triangles.ndim != 2 or triangles.shape[1] != 3:
        raise MeshFormatError("triangles must be an array of vertex triples")
    nv = vertices.shape[0]
    if triangles.size and (triangles.min() < 0 or triangles.max() >= nv):
        bad = int(np.argmax((triangles < 0) | (triangles >= nv)) // 3)
        raise MeshConnectivityError(
            f"triangle {bad} references a vertex outside [0, {nv})")

    areas = _signed_areas(vertices, triangles)
    nonpos = np.nonzero(areas <= 0.0)[0]
    if nonpos.size:
        raise MeshOrientationError(
            f"triangle {int(nonpos[0])} has non-positive signed area {areas[nonpos[0]]:g}")

    # local edges in cycle order; global edges sorted low->high
    local = np.stack([triangles[:, [0, 1]], triangles[:, [1, 2]],
                      triangles[:, [2, 0]]], axis=1)          # (F, 3, 2)
    lo = local.min(axis=2)
    hi = local.max(axis=2)
    keys = lo.astype(np.int64) * nv + hi
    edges_sorted, inverse = np.unique(keys.ravel(), return_inverse=True)
    edges = np.column_stack([edges_sorted // nv, edges_sorted % nv])
    triangle_edges = inverse.reshape(-1, 3).astype(np.int64)
    triangle_edge_signs = np.where(local[:, :, 0] == lo, 1, -1).astype(np.int8)

    ne = edges.shape[0]
    counts = np.bincount(triangle_edges.ravel(), minlength=ne)
    if counts.max(initial=0) > 2:
        bad = int(np.argmax(counts > 2))
        raise MeshConnectivityError(
            f"edge {tuple(edges[bad])} is shared by {counts[bad]} triangles")

    edge_triangles = np.full((ne, 2), -1, dtype=np.int64)
    slot = np.zeros(ne, dtype=np.int64)
    for t in range(triangles.shape[0]):
        for e in triangle_edges[t]:
            edge_triangles[e, slot[e]] = t
            slot[e] += 1

    boundary_edges = np.nonzero(counts == 1)[0]
    normals = np.zeros((boundary_edges.size, 2))
    tangents = np.zeros_like(normals)
    for k, e in enumerate(boundary_edges):
        a, b = edges[e]
        mid = 0.5 * (vertices[a] + vertices[b])
        tri = edge_triangles[e, 0]
        centroid = vertices[triangles[tri]].mean(axis=0)
        d = vertices[b] - vertices[a]
        n = np.array([d[1], -d[0]])
        if np.dot(mid - centroid, n) < 0:
            n = -n
        n /= np.hypot(n[0], n[1])
        normals[k] = n
        tangents[k] = [-n[1], n[0]]

    edge_vec = vertices[triangles[:, [1, 2, 0]]] - vertices[triangles]
    h_max = float(np.sqrt((edge_vec ** 2).sum(axis=2)).max())

    _freeze(vertices, triangles, edges, triangle_edges, triangle_edge_signs,
            edge_triangles, boundary_edges, normals, tangents)
    return Mesh(vertices, triangles, edges, triangle_edges, triangle_edge_signs,
                edge_triangles, boundary_edges, normals, tangents, h_max)


def _grid_mesh(xs: np.ndarray, ys: np.ndarray, keep_cell) -> Mesh:
    """Criss-cross mesh over a tensor grid, keeping cells where keep_cell(i, j)."""
    nx = xs.size - 1
    ny = ys.size - 1
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            if not keep_cell(i, j):
                continue
            a = vid(i, j)
            b = vid(i + 1, j)
            c = vid(i + 1, j + 1)
            d = vid(i, j + 1)
            tris.append((a, b, d))
            tris.append((b, c, d))
    triangles = np.array(tris, dtype=np.int64)

    used = np.unique(triangles.ravel())
    remap = -np.ones(vertices.shape[0], dtype=np.int64)
    remap[used] = np.arange(used.size)
    return build_mesh(vertices[used], remap[triangles])


def generate_unit_square(n: int) -> Mesh:
    """Structured mesh of [0, 1]^2 with 2 n^2 triangles."""
    if n < 1:
        raise ValueError("subdivision count must be >= 1")
    coords = np.arange(n + 1) / n
    return _grid_mesh(coords, coords, lambda i, j: True)


def generate_square_with_hole(n: int) -> Mesh:
    """Mesh of [0, 1]^2 minus [1/3, 2/3]^2; n must be a positive multiple of 3."""
    if n < 3 or n % 3 != 0:
        raise ValueError("subdivision count must be a positive multiple of 3")
    coords = np.arange(n + 1) / n
    third = n // 3

    def keep(i, j):
        return not (third <= i < 2 * third and third <= j < 2 * third)

    return _grid_mesh(coords, coords, keep)


def generate_l_shape(n: int) -> Mesh:
    """Mesh of (-1, 1)^2 minus the quadrant [0, 1) x (-1, 0]; n cells per unit edge.

    The re-entrant corner sits exactly at the origin (a grid vertex).
    """
    if n < 1:
        raise ValueError("subdivision count must be >= 1")
    coords = -1.0 + np.arange(2 * n + 1) / n

    def keep(i, j):
        return not (i >= n and j < n)

    return _grid_mesh(coords, coords, keep)


def two_triangle_square() -> Mesh:
    """The unit square split along the (1,0)-(0,1) diagonal into two triangles."""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    triangles = np.array([[0, 1, 3], [1, 2, 3]])
    return build_mesh(vertices, triangles)


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into 4 congruent children through edge midpoints."""
    nv = mesh.vertex_count
    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])
    tris = np.empty((4 * mesh.triangle_count, 3), dtype=np.int64)
    for t in range(mesh.triangle_count):
        v0, v1, v2 = mesh.triangles[t]
        m01, m12, m20 = nv + mesh.triangle_edges[t]
        tris[4 * t + 0] = (v0, m01, m20)
        tris[4 * t + 1] = (v1, m12, m01)
        tris[4 * t + 2] = (v2, m20, m12)
        tris[4 * t + 3] = (m01, m12, m20)
    return build_mesh(vertices, tris)


def jitter(mesh: Mesh, seed: int, magnitude: float = 0.2) -> Mesh:
    """Perturb interior vertices by a seeded uniform offset.

    Each interior vertex moves by at most ``magnitude`` times its shortest
    incident edge per coordinate, which keeps all triangles positively
    oriented for magnitude <= 0.2. Boundary vertices stay put.
    """
    if not 0.0 < magnitude <= 0.2:
        raise ValueError("jitter magnitude must be in (0, 0.2]")
    lengths = np.hypot(*(mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]).T)
    local = np.full(mesh.vertex_count, np.inf)
    for k in range(2):
        np.minimum.at(local, mesh.edges[:, k], lengths)
    interior = ~mesh.boundary_vertex_mask()
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-1.0, 1.0, size=(mesh.vertex_count, 2))
    vertices = mesh.vertices.copy()
    vertices[interior] += magnitude * local[interior, None] * offsets[interior]
    return build_mesh(vertices, mesh.triangles)


def save_mesh(mesh: Mesh, path) -> None:
    data = {"vertices": mesh.vertices.tolist(), "triangles": mesh.triangles.tolist()}
    with open(path, "w") as f:
        json.dump(data, f)


def load_mesh(path) -> Mesh:
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise MeshFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "vertices" not in data or "triangles" not in data:
        raise MeshFormatError('mesh file must be an object with "vertices" and "triangles"')
    try:
        vertices = np.asarray(data["vertices"], dtype=float)
        triangles = np.asarray(data["triangles"], dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise MeshFormatError(f"vertices/triangles are not numeric arrays: {exc}") from exc
    return build_mesh(vertices, triangles)


def validate_mesh(mesh: Mesh, tol: float = 1e-12) -> None:
    """Check every structural invariant; raise MeshError on the first failure."""
    if (mesh.signed_areas() <= 0).any():
        raise MeshOrientationError("non-positive triangle area")
    counts = np.bincount(mesh.triangle_edges.ravel(), minlength=mesh.edge_count)
    if not np.isin(counts, (1, 2)).all():
        raise MeshConnectivityError("edge shared by an invalid number of triangles")
    if not np.array_equal(np.nonzero(counts == 1)[0], mesh.boundary_edges):
        raise MeshConnectivityError("boundary edge list does not match adjacency counts")
    n = mesh.boundary_normals
    t = mesh.boundary_tangents
    if n.size:
        if np.abs((n * t).sum(axis=1)).max() > tol:
            raise MeshError("boundary normal and tangent are not orthogonal")
        if np.abs(np.hypot(n[:, 0], n[:, 1]) - 1).max() > tol:
            raise MeshError("boundary normal is not unit length")
        if np.abs(np.hypot(t[:, 0], t[:, 1]) - 1).max() > tol:
            raise MeshError("boundary tangent is not unit length")
        for k, e in enumerate(mesh.boundary_edges):
            a, b = mesh.edges[e]
            mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
            tri = mesh.edge_triangles[e, 0]
            centroid = mesh.vertices[mesh.triangles[tri]].mean(axis=0)
            if np.dot(mid - centroid, n[k]) <= 0:
                raise MeshError(f"boundary normal of edge {e} points inward")
    # signed local edges must close the triangle boundary cycle
    for tri in range(mesh.triangle_count):
        chain = np.zeros(mesh.vertex_count, dtype=np.int64)
        for k in range(3):
            a, b = mesh.edges[mesh.triangle_edges[tri, k]]
            s = mesh.triangle_edge_signs[tri, k]
            chain[a] -= s
            chain[b] += s
        if chain.any():
            raise MeshError(f"edge signs of triangle {tri} do not form a cycle")
