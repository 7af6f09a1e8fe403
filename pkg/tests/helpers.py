"""Small constructions shared across test modules."""

import numpy as np

from filmloop.mesh import TriMesh


def fan_mesh(n, radius=1.0):
    """Triangle fan: hub vertex 0 plus a regular n-gon rim in the z = 0 plane.

    Every interior edge is a spoke of length `radius`, every boundary edge a
    rim chord of length 2 radius sin(pi/n); most closed-form energy and
    curvature oracles below are written against this mesh.
    """
    ang = np.arange(n) * 2.0 * np.pi / n
    pts = np.zeros((n + 1, 3))
    pts[1:, 0] = radius * np.cos(ang)
    pts[1:, 1] = radius * np.sin(ang)
    tris = np.array([[0, 1 + i, 1 + (i + 1) % n] for i in range(n)],
                    dtype=np.int64)
    return TriMesh.from_triangles(n + 1, tris), pts


def circle_samples(n, radius=1.0):
    """Uniform samples of a circle of given radius in the z = 0 plane."""
    u = np.arange(n) * 2.0 * np.pi / n
    return np.stack([radius * np.cos(u), radius * np.sin(u), np.zeros(n)],
                    axis=1)
