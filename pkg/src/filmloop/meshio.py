"""Wavefront OBJ and ASCII PLY export, OBJ import for restart runs."""

import numpy as np

from .mesh import TriMesh


def write_obj(path, positions, triangles=None):
    """Write vertices (and faces, if given) as OBJ with 1-based indexing."""
    x = np.asarray(positions, dtype=float)
    with open(path, "w") as fh:
        for p in x:
            fh.write("v %.17g %.17g %.17g\n" % (p[0], p[1], p[2]))
        if triangles is not None:
            for a, b, c in np.asarray(triangles, dtype=np.int64):
                fh.write("f %d %d %d\n" % (a + 1, b + 1, c + 1))


def read_obj(path):
    """Read an OBJ file, returning (positions, triangles) with 0-based indices.

    Only `v` and triangular `f` records are interpreted; `f` entries of the
    form i/j/k keep their leading vertex index.
    """
    verts, tris = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(v) for v in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise ValueError(f"non-triangular face in {path}: {line.strip()}")
                if any(i < 1 for i in idx):
                    raise ValueError("negative OBJ indices are not supported")
                tris.append([i - 1 for i in idx])
    return np.array(verts, dtype=float), np.array(tris, dtype=np.int64)


def read_obj_mesh(path):
    """Read an OBJ file into (TriMesh, positions)."""
    positions, tris = read_obj(path)
    return TriMesh.from_triangles(len(positions), tris), positions


def write_ply(path, positions, triangles):
    """Write an ASCII PLY file with double-precision vertex coordinates."""
    x = np.asarray(positions, dtype=float)
    tris = np.asarray(triangles, dtype=np.int64)
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write("element vertex %d\n" % len(x))
        fh.write("property double x\nproperty double y\nproperty double z\n")
        fh.write("element face %d\n" % len(tris))
        fh.write("property list uchar int vertex_indices\n")
        fh.write("end_header\n")
        for p in x:
            fh.write("%.17g %.17g %.17g\n" % (p[0], p[1], p[2]))
        for a, b, c in tris:
            fh.write("3 %d %d %d\n" % (a, b, c))
