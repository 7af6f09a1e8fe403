"""Triangulated disk meshes with an ordered boundary loop.

Meshes live on a triangular lattice: a central vertex surrounded by m
concentric hexagonal rings gives 1 + 3m(m+1) vertices, 6m^2 triangles and
6m boundary vertices.  Connectivity (a TriMesh) is fixed after construction;
vertex positions travel separately as plain (n, 3) float arrays so the same
mesh can be shared read-only by many configurations.

The boundary loop is stored explicitly, oriented counterclockwise in the
construction plane and consistent with the (counterclockwise) triangle
winding.  Downstream code relies on that orientation for signed curvatures.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse


class MeshError(ValueError):
    """Raised when mesh data does not describe an oriented triangulated disk."""


@dataclass(eq=False)
class TriMesh:
    """Connectivity of a triangulated disk.

    triangles are (f, 3) vertex indices with counterclockwise winding,
    boundary_loop is the ordered cycle of boundary vertices, and
    interior/boundary edges are (e, 2) index pairs.  boundary_edges[i] is
    the loop edge from boundary_loop[i] to boundary_loop[i+1].
    """

    vertex_count: int
    triangles: np.ndarray
    boundary_loop: np.ndarray
    interior_edges: np.ndarray
    boundary_edges: np.ndarray
    _laplacian: Optional[scipy.sparse.csr_matrix] = field(
        default=None, repr=False, compare=False)

    @classmethod
    def from_triangles(cls, vertex_count, triangles):
        """Build a TriMesh from raw triangles, extracting edges and the boundary loop.

        Raises MeshError if the triangles are not a consistently oriented
        topological disk with a single boundary cycle.
        """
        tris = np.asarray(triangles, dtype=np.int64)
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError("triangles must be an (f, 3) index array")
        if tris.size and (tris.min() < 0 or tris.max() >= vertex_count):
            raise MeshError("triangle indices out of range")

        directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
        keys = directed[:, 0] * vertex_count + directed[:, 1]
        if len(np.unique(keys)) != len(keys):
            raise MeshError("duplicated directed edge: inconsistent orientation "
                            "or non-manifold input")
        key_set = set(keys.tolist())
        rev_keys = directed[:, 1] * vertex_count + directed[:, 0]
        has_twin = np.fromiter((k in key_set for k in rev_keys.tolist()),
                               dtype=bool, count=len(rev_keys))

        boundary_dir = directed[~has_twin]
        interior_dir = directed[has_twin]
        # each interior undirected edge appears twice (once per direction)
        und = np.sort(interior_dir, axis=1)
        interior_edges = np.unique(und, axis=0)

        loop = _walk_boundary(boundary_dir)
        boundary_edges = np.stack([loop, np.roll(loop, -1)], axis=1)

        e_total = len(interior_edges) + len(boundary_edges)
        chi = vertex_count - e_total + len(tris)
        if chi != 1:
            raise MeshError(f"Euler characteristic {chi} != 1, not a disk")
        return cls(vertex_count=vertex_count, triangles=tris,
                   boundary_loop=loop, interior_edges=interior_edges,
                   boundary_edges=boundary_edges)

    def interior_laplacian(self):
        """Graph Laplacian of the interior-edge network (sparse, cached).

        x^T L x summed over coordinates equals the sum of squared interior
        edge lengths, which is what the spring energy needs.
        """
        if self._laplacian is None:
            ia, ib = self.interior_edges[:, 0], self.interior_edges[:, 1]
            n = self.vertex_count
            ones = np.ones(len(ia))
            rows = np.concatenate([ia, ib, ia, ib])
            cols = np.concatenate([ib, ia, ia, ib])
            vals = np.concatenate([-ones, -ones, ones, ones])
            lap = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, n))
            self._laplacian = lap.tocsr()
        return self._laplacian


@dataclass
class ValidationReport:
    """Result of validate_mesh: topological invariants recomputed from triangles."""

    vertex_count: int
    triangle_count: int
    edge_count: int
    euler_characteristic: int
    boundary_cycle_count: int
    orientation_violations: int
    nonmanifold_edges: int
    passed: bool

    def summary(self):
        status = "pass" if self.passed else "FAIL"
        return (f"{status}: V={self.vertex_count} E={self.edge_count} "
                f"F={self.triangle_count} chi={self.euler_characteristic} "
                f"boundary_cycles={self.boundary_cycle_count} "
                f"orientation_violations={self.orientation_violations} "
                f"nonmanifold_edges={self.nonmanifold_edges}")


def _walk_boundary(boundary_dir):
    """Order directed boundary edges into a single cycle; MeshError otherwise."""
    if len(boundary_dir) == 0:
        raise MeshError("mesh has no boundary")
    succ = {}
    for a, b in boundary_dir:
        if int(a) in succ:
            raise MeshError("boundary is not a simple cycle (branching vertex)")
        succ[int(a)] = int(b)
    start = int(boundary_dir[0, 0])
    loop = [start]
    cur = succ[start]
    while cur != start:
        loop.append(cur)
        if cur not in succ:
            raise MeshError("boundary walk left the boundary (open chain)")
        cur = succ[cur]
        if len(loop) > len(boundary_dir):
            raise MeshError("boundary walk does not close")
    if len(loop) != len(boundary_dir):
        raise MeshError("boundary has more than one cycle")
    return np.array(loop, dtype=np.int64)


def validate_mesh(mesh):
    """Recompute disk invariants from mesh.triangles alone and report them.

    Never raises for bad meshes; the report carries the failures.  Checks:
    Euler characteristic 1, single boundary cycle, every edge in one or two
    triangles, opposite directions on shared edges.
    """
    tris = np.asarray(mesh.triangles, dtype=np.int64)
    n = int(mesh.vertex_count)
    directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    und_keys = und[:, 0] * n + und[:, 1]
    uniq, counts = np.unique(und_keys, return_counts=True)
    edge_count = len(uniq)
    nonmanifold = int(np.sum(counts > 2))

    # orientation: among edges seen exactly twice, both copies must be
    # opposite directions, i.e. the directed versions must be distinct
    dir_keys = directed[:, 0] * n + directed[:, 1]
    dir_uniq, dir_counts = np.unique(dir_keys, return_counts=True)
    orientation_violations = int(np.sum(dir_counts > 1))

    chi = n - edge_count + len(tris)

    boundary_mask = np.isin(und_keys, uniq[counts == 1])
    boundary_dir = directed[boundary_mask]
    cycles = _count_cycles(boundary_dir)

    passed = (chi == 1 and cycles == 1 and orientation_violations == 0
              and nonmanifold == 0)
    return ValidationReport(
        vertex_count=n, triangle_count=len(tris), edge_count=edge_count,
        euler_characteristic=int(chi), boundary_cycle_count=cycles,
        orientation_violations=orientation_violations,
        nonmanifold_edges=nonmanifold, passed=passed)


def _count_cycles(boundary_dir):
    """Number of connected cycles formed by directed boundary edges."""
    if len(boundary_dir) == 0:
        return 0
    succ = {}
    for a, b in boundary_dir:
        succ.setdefault(int(a), []).append(int(b))
    unvisited = {(int(a), int(b)) for a, b in boundary_dir}
    cycles = 0
    while unvisited:
        a, b = next(iter(unvisited))
        unvisited.discard((a, b))
        cycles += 1
        cur = b
        guard = 0
        while cur != a and guard <= len(boundary_dir):
            guard += 1
            nxts = [v for v in succ.get(cur, []) if (cur, v) in unvisited]
            if not nxts:
                break  # open chain, still counts as one component
            nxt = nxts[0]
            unvisited.discard((cur, nxt))
            cur = nxt
    return cycles


def generate_disk_mesh(rings, elongation=1.0):
    """Hexagonal-lattice disk with `rings` concentric rings, optionally stretched.

    Returns (TriMesh, positions).  Lattice edges have unit length; positions
    lie in the z = 0 plane and are mapped (x, y) -> (x * elongation,
    y / elongation), an area-preserving stretch.  elongation = 1 keeps the
    regular hexagonal perimeter.
    """
    m = int(rings)
    if m < 1:
        raise MeshError("rings must be >= 1")
    elongation = float(elongation)
    if not np.isfinite(elongation) or elongation <= 0:
        raise MeshError("elongation must be positive and finite")

    index = {}
    coords = []
    for q in range(-m, m + 1):
        for r in range(max(-m, -q - m), min(m, -q + m) + 1):
            index[(q, r)] = len(coords)
            coords.append((q + 0.5 * r, 0.5 * np.sqrt(3.0) * r))
    positions = np.zeros((len(coords), 3))
    positions[:, :2] = coords

    tris = []
    # cells are indexed by their lower-left lattice coordinate, which for
    # down-pointing triangles is not itself a triangle vertex, so the cell
    # scan has to run one step beyond the lattice on each side
    for q in range(-m - 1, m + 1):
        for r in range(-m - 1, m + 1):
            up = ((q, r), (q + 1, r), (q, r + 1))
            if all(k in index for k in up):
                tris.append(tuple(index[k] for k in up))
            down = ((q + 1, r), (q + 1, r + 1), (q, r + 1))
            if all(k in index for k in down):
                tris.append(tuple(index[k] for k in down))

    mesh = TriMesh.from_triangles(len(coords), np.array(tris, dtype=np.int64))
    positions[:, 0] *= elongation
    positions[:, 1] /= elongation
    return mesh, positions


def check_configuration(mesh, x):
    """Raise MeshError unless x is a finite (vertex_count, 3) float array."""
    x = np.asarray(x)
    if x.shape != (mesh.vertex_count, 3):
        raise MeshError(f"configuration shape {x.shape} != ({mesh.vertex_count}, 3)")
    if not np.all(np.isfinite(x)):
        raise MeshError("configuration contains non-finite coordinates")
    return x


def boundary_length(mesh, x):
    """Total length of the boundary loop polyline."""
    loop = mesh.boundary_loop
    e = x[np.roll(loop, -1)] - x[loop]
    return float(np.linalg.norm(e, axis=1).sum())


def scale_to_boundary_length(mesh, x, target):
    """Uniformly rescale positions so the boundary loop has length `target`."""
    cur = boundary_length(mesh, x)
    if cur <= 0:
        raise MeshError("degenerate boundary, cannot rescale")
    return np.asarray(x, dtype=float) * (target / cur)
