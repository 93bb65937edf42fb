import json

import numpy as np
import pytest

from curlstokes.mesh import (Mesh, MeshConnectivityError, MeshFormatError,
                             MeshOrientationError, build_mesh, generate_l_shape,
                             generate_square_with_hole, generate_unit_square,
                             jitter, load_mesh, refine_uniform, save_mesh,
                             two_triangle_square, validate_mesh)

ALL_GENERATORS = [
    lambda: generate_unit_square(3),
    lambda: generate_square_with_hole(3),
    lambda: generate_l_shape(2),
    two_triangle_square,
]


def test_unit_square_counts():
    m = generate_unit_square(1)
    assert (m.vertex_count, m.triangle_count, m.edge_count) == (4, 2, 5)
    assert len(m.boundary_edges) == 4
    m = generate_unit_square(2)
    assert (m.vertex_count, m.triangle_count, m.edge_count) == (9, 8, 16)
    assert len(m.boundary_edges) == 8
    assert m.euler_characteristic() == 1


def test_unit_square_hmax():
    m = generate_unit_square(4)
    assert m.h_max == pytest.approx(np.sqrt(2.0) / 4, abs=1e-14)


def test_unit_square_rejects_zero():
    with pytest.raises(ValueError):
        generate_unit_square(0)


def test_hole_euler_characteristic_and_boundary():
    m = generate_square_with_hole(3)
    assert m.euler_characteristic() == 0   # one hole: V - E + F = 1 - b1
    mids = 0.5 * (m.vertices[m.edges[m.boundary_edges][:, 0]]
                  + m.vertices[m.edges[m.boundary_edges][:, 1]])
    inner = ((mids > 1 / 3 - 1e-12) & (mids < 2 / 3 + 1e-12)).all(axis=1)
    assert len(m.boundary_edges) == 16
    assert inner.sum() == 4
    assert (~inner).sum() == 12


def test_hole_requires_multiple_of_three():
    for n in (1, 2, 4, 7):
        with pytest.raises(ValueError):
            generate_square_with_hole(n)
    m = generate_square_with_hole(6)
    assert (m.signed_areas() > 0).all()


def test_l_shape():
    m = generate_l_shape(1)
    assert m.triangle_count == 6
    assert any((m.vertices == 0.0).all(axis=1))
    m2 = generate_l_shape(2)
    assert m2.euler_characteristic() == 1
    assert any((m2.vertices == 0.0).all(axis=1))


def test_two_triangle_square():
    m = two_triangle_square()
    assert np.array_equal(m.vertices, [[0, 0], [1, 0], [1, 1], [0, 1]])
    interior = [e for e in range(m.edge_count) if e not in m.boundary_edges]
    assert len(interior) == 1
    assert tuple(m.edges[interior[0]]) == (1, 3)
    assert np.allclose(m.signed_areas(), 0.5)
    # outward normal of the bottom edge
    for k, e in enumerate(m.boundary_edges):
        if tuple(m.edges[e]) == (0, 1):
            assert np.allclose(m.boundary_normals[k], [0.0, -1.0], atol=1e-14)
            assert np.allclose(m.boundary_tangents[k], [1.0, 0.0], atol=1e-14)


def test_refine_uniform():
    m = two_triangle_square()
    r = refine_uniform(m)
    assert r.triangle_count == 8
    assert r.h_max == pytest.approx(m.h_max / 2, abs=1e-12)
    validate_mesh(r)
    assert r.euler_characteristic() == m.euler_characteristic()
    rh = refine_uniform(generate_square_with_hole(3))
    assert rh.euler_characteristic() == 0


@pytest.mark.parametrize("make", ALL_GENERATORS)
def test_invariants(make):
    validate_mesh(make())


@pytest.mark.parametrize("make", ALL_GENERATORS)
def test_outward_normals(make):
    m = make()
    for k, e in enumerate(m.boundary_edges):
        a, b = m.edges[e]
        mid = 0.5 * (m.vertices[a] + m.vertices[b])
        tri = m.edge_triangles[e, 0]
        centroid = m.vertices[m.triangles[tri]].mean(axis=0)
        assert np.dot(mid - centroid, m.boundary_normals[k]) > 0
        n, t = m.boundary_normals[k], m.boundary_tangents[k]
        assert abs(np.dot(n, t)) <= 1e-12
        assert abs(np.hypot(*n) - 1) <= 1e-12
        assert abs(np.hypot(*t) - 1) <= 1e-12


def test_determinism():
    a = generate_square_with_hole(6)
    b = generate_square_with_hole(6)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.triangles, b.triangles)
    assert np.array_equal(a.triangle_edge_signs, b.triangle_edge_signs)


def test_jitter():
    m = generate_unit_square(4)
    j1 = jitter(m, seed=42)
    j2 = jitter(m, seed=42)
    assert np.array_equal(j1.vertices, j2.vertices)
    validate_mesh(j1)
    boundary = m.boundary_vertex_mask()
    assert np.array_equal(j1.vertices[boundary], m.vertices[boundary])
    interior = ~boundary
    assert (np.abs(j1.vertices[interior] - m.vertices[interior]).max(axis=1) > 0).all()
    with pytest.raises(ValueError):
        jitter(m, seed=0, magnitude=0.5)


def test_jitter_preserves_topology_under_refinement():
    m = jitter(generate_square_with_hole(3), seed=3)
    assert m.euler_characteristic() == 0
    validate_mesh(refine_uniform(m))


def test_save_load_roundtrip(tmp_path):
    m = two_triangle_square()
    path = tmp_path / "mesh.json"
    save_mesh(m, path)
    m2 = load_mesh(path)
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.triangles, m2.triangles)
    assert np.array_equal(m.edges, m2.edges)
    assert np.array_equal(m.triangle_edge_signs, m2.triangle_edge_signs)


def test_load_bad_vertex_index(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [0, 1], [1, 1]],
                                "triangles": [[0, 1, 99]]}))
    with pytest.raises(MeshConnectivityError):
        load_mesh(path)


def test_load_clockwise_triangle(tmp_path):
    path = tmp_path / "cw.json"
    path.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [0, 1]],
                                "triangles": [[0, 2, 1]]}))
    with pytest.raises(MeshOrientationError, match="triangle 0"):
        load_mesh(path)


def test_load_malformed(tmp_path):
    path = tmp_path / "mangled.json"
    path.write_text("{not json")
    with pytest.raises(MeshFormatError):
        load_mesh(path)
    path.write_text(json.dumps({"vertices": [[0, 0]]}))
    with pytest.raises(MeshFormatError):
        load_mesh(path)


def test_nonconforming_edge_rejected():
    vertices = [[0, 0], [1, 0], [0, 1], [1, 1], [-1, 1]]
    triangles = [[0, 1, 2], [0, 1, 3], [0, 1, 4]]  # edge (0,1) shared by three triangles
    with pytest.raises(MeshConnectivityError):
        build_mesh(np.array(vertices, float), np.array(triangles))


def test_edge_signs_close_cycles():
    m = generate_l_shape(2)
    for t in range(m.triangle_count):
        chain = np.zeros(m.vertex_count, int)
        for k in range(3):
            a, b = m.edges[m.triangle_edges[t, k]]
            s = int(m.triangle_edge_signs[t, k])
            chain[a] -= s
            chain[b] += s
        assert not chain.any()


def test_mesh_arrays_immutable():
    m = generate_unit_square(2)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0
    with pytest.raises(ValueError):
        m.triangles[0, 0] = 0
