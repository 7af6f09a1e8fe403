"""Disk mesh construction, topological validation, and boundary bookkeeping.

Counting oracles: an m-ring hexagonal lattice disk has 3m^2 + 3m + 1
vertices, 6m^2 triangles, 9m^2 + 3m edges of which 6m are boundary, and
Euler characteristic 1.
"""

from types import SimpleNamespace

import numpy as np
import pytest

from filmloop.mesh import (MeshError, TriMesh, boundary_length,
                           check_configuration, generate_disk_mesh,
                           scale_to_boundary_length, validate_mesh)

ANNULUS_TRIS = np.array([[0, 1, 4], [0, 4, 3], [1, 2, 5],
                         [1, 5, 4], [2, 0, 3], [2, 3, 5]], dtype=np.int64)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_disk_counts(m):
    mesh, x = generate_disk_mesh(m)
    assert mesh.vertex_count == 3 * m * m + 3 * m + 1
    assert len(mesh.triangles) == 6 * m * m
    assert len(mesh.boundary_loop) == 6 * m
    assert len(mesh.boundary_edges) == 6 * m
    assert len(mesh.interior_edges) == 9 * m * m - 3 * m
    assert x.shape == (mesh.vertex_count, 3)
    assert np.all(x[:, 2] == 0.0)


def test_disk_has_unit_lattice_edges():
    mesh, x = generate_disk_mesh(3)
    for edges in (mesh.interior_edges, mesh.boundary_edges):
        e = x[edges[:, 1]] - x[edges[:, 0]]
        assert np.allclose(np.linalg.norm(e, axis=1), 1.0, atol=1e-12)


def test_validate_disk_passes():
    mesh, _ = generate_disk_mesh(4)
    report = validate_mesh(mesh)
    assert report.passed
    assert report.euler_characteristic == 1
    assert report.boundary_cycle_count == 1
    assert report.orientation_violations == 0
    assert report.nonmanifold_edges == 0
    assert report.edge_count == 9 * 16 + 12
    assert "pass" in report.summary()


def test_elongation_scales_extents():
    _, x1 = generate_disk_mesh(4, 1.0)
    _, xe = generate_disk_mesh(4, 1.5)
    span = lambda a, c: a[:, c].max() - a[:, c].min()
    assert np.isclose(span(xe, 0) / span(x1, 0), 1.5, rtol=1e-12)
    assert np.isclose(span(xe, 1) / span(x1, 1), 1.0 / 1.5, rtol=1e-12)


def test_elongation_keeps_connectivity():
    m1, _ = generate_disk_mesh(3, 1.0)
    m2, _ = generate_disk_mesh(3, 1.4)
    assert np.array_equal(m1.triangles, m2.triangles)
    assert np.array_equal(m1.boundary_loop, m2.boundary_loop)


def test_boundary_loop_matches_boundary_edges():
    mesh, _ = generate_disk_mesh(3)
    loop = mesh.boundary_loop
    walked = {frozenset(p) for p in zip(loop, np.roll(loop, -1))}
    listed = {frozenset(p) for p in mesh.boundary_edges}
    assert walked == listed


def test_boundary_loop_is_counterclockwise():
    mesh, x = generate_disk_mesh(2)
    p = x[mesh.boundary_loop][:, :2]
    q = np.roll(p, -1, axis=0)
    signed_area = 0.5 * np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1])
    assert signed_area > 0


def test_from_triangles_rejects_duplicate_directed_edge():
    with pytest.raises(MeshError):
        TriMesh.from_triangles(4, np.array([[0, 1, 2], [0, 1, 3]]))


def test_from_triangles_rejects_annulus():
    with pytest.raises(MeshError):
        TriMesh.from_triangles(6, ANNULUS_TRIS)


def test_validate_reports_annulus_without_raising():
    report = validate_mesh(SimpleNamespace(vertex_count=6,
                                           triangles=ANNULUS_TRIS))
    assert not report.passed
    assert report.euler_characteristic == 0
    assert report.boundary_cycle_count == 2


def test_validate_reports_orientation_violation():
    report = validate_mesh(SimpleNamespace(
        vertex_count=4, triangles=np.array([[0, 1, 2], [0, 1, 3]])))
    assert not report.passed
    assert report.orientation_violations >= 1
    assert "FAIL" in report.summary()


def test_generate_rejects_bad_arguments():
    with pytest.raises(MeshError):
        generate_disk_mesh(0)
    with pytest.raises(MeshError):
        generate_disk_mesh(3, 0.0)
    with pytest.raises(MeshError):
        generate_disk_mesh(3, np.inf)


def test_check_configuration():
    mesh, x = generate_disk_mesh(2)
    assert check_configuration(mesh, x) is not None
    with pytest.raises(MeshError):
        check_configuration(mesh, x[:, :2])
    bad = x.copy()
    bad[0, 0] = np.nan
    with pytest.raises(MeshError):
        check_configuration(mesh, bad)


def test_boundary_length_and_rescale():
    mesh, x = generate_disk_mesh(3)
    assert np.isclose(boundary_length(mesh, x), 18.0, rtol=1e-12)
    y = scale_to_boundary_length(mesh, x, 1.0)
    assert np.isclose(boundary_length(mesh, y), 1.0, rtol=1e-12)
    # uniform scaling, not a reshaping
    assert np.allclose(y, x / 18.0, atol=1e-15)


def test_rescale_degenerate_raises():
    mesh, x = generate_disk_mesh(2)
    with pytest.raises(MeshError):
        scale_to_boundary_length(mesh, np.zeros_like(x), 1.0)


def test_interior_laplacian_quadratic_form():
    mesh, x = generate_disk_mesh(3)
    rng = np.random.default_rng(7)
    y = x + 0.1 * rng.standard_normal(x.shape)
    e = y[mesh.interior_edges[:, 1]] - y[mesh.interior_edges[:, 0]]
    direct = float(np.sum(e * e))
    lap = mesh.interior_laplacian()
    via_form = float(sum(y[:, d] @ (lap @ y[:, d]) for d in range(3)))
    assert np.isclose(direct, via_form, rtol=1e-12)
