"""Discrete and smooth differential-geometry observables.

Boundary curvature and its normal/geodesic decomposition, angle-defect
Gaussian curvature with the (exact) discrete Gauss-Bonnet audit, cyclic
finite-difference Frenet analysis of closed sampled curves, equilibrium
residuals of the boundary curve equations, a planarity metric, and a
cotangent mean-curvature diagnostic.

Sign conventions: the boundary loop is oriented counterclockwise with
respect to the surface orientation, vertex normals are angle-weighted face
normal averages, and the co-normal nu = N x t points into the surface, so a
flat counterclockwise disk of radius R has kappa_g = +1/R and the boundary
turning angles sum to +2 pi.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np


class DiffGeoError(RuntimeError):
    pass


class InflectionError(DiffGeoError):
    """Torsion or equilibrium residuals requested at a curvature zero."""


# ---------------------------------------------------------------------------
# surface helpers


def triangle_geometry(mesh, x):
    """Per-triangle (unit normals, areas, corner angles); errors on zero area."""
    tris = mesh.triangles
    a, b, c = x[tris[:, 0]], x[tris[:, 1]], x[tris[:, 2]]
    n = np.cross(b - a, c - a)
    nlen = np.linalg.norm(n, axis=1)
    if np.any(nlen <= 0.0):
        raise DiffGeoError("zero-area triangle")
    areas = 0.5 * nlen
    nhat = n / nlen[:, None]
    angles = np.empty((len(tris), 3))
    for k, (p, q, r) in enumerate(((a, b, c), (b, c, a), (c, a, b))):
        u, v = q - p, r - p
        cr = np.linalg.norm(np.cross(u, v), axis=1)
        dt = np.einsum("ij,ij->i", u, v)
        angles[:, k] = np.arctan2(cr, dt)
    return nhat, areas, angles


def vertex_normals(mesh, x):
    """Angle-weighted average of incident triangle normals, normalized."""
    nhat, _, angles = triangle_geometry(mesh, x)
    acc = np.zeros((mesh.vertex_count, 3))
    for k in range(3):
        np.add.at(acc, mesh.triangles[:, k], angles[:, k][:, None] * nhat)
    norms = np.linalg.norm(acc, axis=1)
    used = np.unique(mesh.triangles)
    if np.any(norms[used] <= 0.0):
        raise DiffGeoError("degenerate vertex normal (zero incident-angle fan)")
    norms[norms == 0.0] = 1.0
    return acc / norms[:, None]


# ---------------------------------------------------------------------------
# boundary curvature decomposition


@dataclass(eq=False)
class BoundaryGeometry:
    """Per-boundary-vertex curvature data, ordered along the boundary loop."""

    loop: np.ndarray          # vertex indices
    edge_length: np.ndarray   # length of edge loop[i] -> loop[i+1]
    s_weight: np.ndarray      # <s_v>, average of the two incident edges
    kappa: np.ndarray
    kappa_n: np.ndarray
    kappa_g: np.ndarray
    normal: np.ndarray        # surface normal at the boundary vertex

    @property
    def boundary_length(self):
        return float(self.edge_length.sum())

    @property
    def integral_kn(self):
        """Signed discrete integral of kappa_n ds (an equilibrium invariant)."""
        return float(np.sum(self.s_weight * self.kappa_n))

    @property
    def integral_abs_kn(self):
        return float(np.sum(self.s_weight * np.abs(self.kappa_n)))

    @property
    def mean_abs_kn(self):
        return self.integral_abs_kn / float(self.s_weight.sum())


def boundary_geometry(mesh, x):
    """Curvature of the boundary loop decomposed along the surface frame.

    kappa_v = |t_v - t_{v-1}| / <s_v> with unit tangents; kappa_n is the
    projection of the discrete curvature vector on the vertex normal and
    kappa_g its projection on the inward co-normal N x t_bar.
    """
    loop = mesh.boundary_loop
    e = x[np.roll(loop, -1)] - x[loop]
    s = np.linalg.norm(e, axis=1)
    if np.any(s <= 0.0):
        raise DiffGeoError("degenerate boundary edge")
    t = e / s[:, None]
    savg = 0.5 * (s + np.roll(s, 1))
    cvec = (t - np.roll(t, 1, axis=0)) / savg[:, None]
    kappa = np.linalg.norm(cvec, axis=1)

    normals = vertex_normals(mesh, x)[loop]
    tbar = t + np.roll(t, 1, axis=0)
    tnorm = np.linalg.norm(tbar, axis=1)
    # a nearly reversing corner leaves the averaged tangent ill-defined;
    # fall back to the outgoing edge direction there
    bad = tnorm < 1e-8
    if np.any(bad):
        tbar[bad] = t[bad]
        tnorm = np.linalg.norm(tbar, axis=1)
    tbar = tbar / tnorm[:, None]

    conormal = np.cross(normals, tbar)
    kappa_n = np.einsum("ij,ij->i", cvec, normals)
    kappa_g = np.einsum("ij,ij->i", cvec, conormal)
    return BoundaryGeometry(loop=loop, edge_length=s, s_weight=savg,
                            kappa=kappa, kappa_n=kappa_n, kappa_g=kappa_g,
                            normal=normals)


# ---------------------------------------------------------------------------
# angle defects and Gauss-Bonnet


@dataclass(eq=False)
class CurvatureField:
    """Angle defects (interior) and turning angles (boundary) with area weights."""

    defect: np.ndarray        # 2 pi - angle sum (interior), pi - angle sum (boundary)
    interior_mask: np.ndarray
    area_weight: np.ndarray   # barycentric vertex areas (1/3 of incident triangles)
    total_area: float

    @property
    def integral_K(self):
        """Integrated Gaussian curvature: sum of interior defects."""
        return float(self.defect[self.interior_mask].sum())

    @property
    def mean_K(self):
        """Area-averaged Gaussian curvature."""
        return self.integral_K / self.total_area

    def pointwise_K(self):
        """Defect / barycentric area on interior vertices."""
        m = self.interior_mask
        return self.defect[m] / self.area_weight[m]


def gaussian_curvature(mesh, x):
    """Angle-defect curvature of every vertex plus barycentric area weights."""
    _, areas, angles = triangle_geometry(mesh, x)
    angle_sum = np.zeros(mesh.vertex_count)
    area_w = np.zeros(mesh.vertex_count)
    for k in range(3):
        np.add.at(angle_sum, mesh.triangles[:, k], angles[:, k])
        np.add.at(area_w, mesh.triangles[:, k], areas / 3.0)
    interior = np.ones(mesh.vertex_count, dtype=bool)
    interior[mesh.boundary_loop] = False
    defect = np.where(interior, 2.0 * np.pi - angle_sum, np.pi - angle_sum)
    return CurvatureField(defect=defect, interior_mask=interior,
                          area_weight=area_w, total_area=float(areas.sum()))


def gauss_bonnet_defect(mesh, x):
    """|sum of defects + turnings - 2 pi|; identically ~0 for any disk mesh."""
    field = gaussian_curvature(mesh, x)
    return abs(float(field.defect.sum()) - 2.0 * np.pi)


# ---------------------------------------------------------------------------
# Frenet analysis of closed sampled curves


@dataclass(eq=False)
class FrenetData:
    """Closed-curve samples with tangent/curvature/torsion per sample.

    speed is |dx/du| with u the (uniform) sample parameter; arc-length
    derivatives of any per-sample field are available via deriv_s.
    """

    points: np.ndarray
    speed: np.ndarray
    tangent: np.ndarray
    normal: Optional[np.ndarray]
    binormal: Optional[np.ndarray]
    kappa: np.ndarray
    tau: np.ndarray
    tau_defined: np.ndarray

    @property
    def total_length(self):
        seg = np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)
        return float(seg.sum())

    def deriv_u(self, f):
        return 0.5 * (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0))

    def deriv_s(self, f):
        """Cyclic central-difference derivative with respect to arc length."""
        if np.ndim(f) == 1:
            return self.deriv_u(f) / self.speed
        return self.deriv_u(f) / self.speed[:, None]


def frenet_analyze(points):
    """Curvature, torsion and frames of a closed curve by cyclic differences.

    Second-order central differences in the sample parameter; the formulas
    kappa = |x' x x''| / |x'|^3 and tau = (x' x x'') . x''' / |x' x x''|^2
    are parametrization invariant, so uniform parameter sampling suffices.
    Torsion is marked undefined where kappa < 1e-10 / L.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[1] != 3 or len(x) < 5:
        raise DiffGeoError("need at least 5 samples of a closed 3D curve")
    d1 = 0.5 * (np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0))
    d2 = np.roll(x, -1, axis=0) - 2.0 * x + np.roll(x, 1, axis=0)
    d3 = 0.5 * (np.roll(x, -2, axis=0) - 2.0 * np.roll(x, -1, axis=0)
                + 2.0 * np.roll(x, 1, axis=0) - np.roll(x, 2, axis=0))

    speed = np.linalg.norm(d1, axis=1)
    if np.any(speed <= 0.0):
        raise DiffGeoError("stationary sample point (zero speed)")
    tangent = d1 / speed[:, None]
    cr = np.cross(d1, d2)
    crn = np.linalg.norm(cr, axis=1)
    kappa = crn / speed**3

    seg = np.linalg.norm(np.roll(x, -1, axis=0) - x, axis=1)
    L = float(seg.sum())
    defined = kappa >= 1e-10 / L

    tau = np.zeros(len(x))
    tau[defined] = np.einsum("ij,ij->i", cr[defined], d3[defined]) / crn[defined]**2

    binormal = np.zeros_like(x)
    normal = np.zeros_like(x)
    binormal[defined] = cr[defined] / crn[defined][:, None]
    normal[defined] = np.cross(binormal[defined], tangent[defined])
    return FrenetData(points=x, speed=speed, tangent=tangent, normal=normal,
                      binormal=binormal, kappa=kappa, tau=tau,
                      tau_defined=defined)


def el_residuals(curve, contact_angle, alpha, sigma, beta):
    """Equilibrium residuals of the boundary curve equations.

    residual_a = kappa'' + kappa^3/2 - (tau^2 + beta/(2 alpha)) kappa
                 - sigma/(2 alpha) * sin(theta)
    residual_b = 2 kappa' tau + kappa tau' + sigma/(2 alpha) * cos(theta)

    with ' the arc-length derivative (same cyclic scheme as frenet_analyze)
    and theta the film contact angle along the curve.  curve is a FrenetData;
    analytic kappa/tau arrays may be substituted before the call.
    """
    if not np.all(curve.tau_defined):
        i = int(np.argmin(curve.tau_defined))
        s_at = float(np.linalg.norm(
            np.roll(curve.points, -1, axis=0) - curve.points, axis=1)[:i].sum())
        raise InflectionError(
            f"curvature vanishes at sample {i} (arc length {s_at:.6g})")
    theta = np.broadcast_to(np.asarray(contact_angle, dtype=float),
                            curve.kappa.shape)
    kappa, tau = curve.kappa, curve.tau
    kp = curve.deriv_s(kappa)
    kpp = curve.deriv_s(kp)
    taup = curve.deriv_s(tau)
    half = sigma / (2.0 * alpha)
    res_a = kpp + 0.5 * kappa**3 - (tau**2 + beta / (2.0 * alpha)) * kappa \
        - half * np.sin(theta)
    res_b = 2.0 * kp * tau + kappa * taup + half * np.cos(theta)
    return res_a, res_b


# ---------------------------------------------------------------------------
# global shape diagnostics


def planarity(mesh, x):
    """RMS distance to the best-fit plane, normalized by L_boundary / (2 pi)."""
    from .mesh import boundary_length
    centered = x - x.mean(axis=0)
    svals = np.linalg.svd(centered, compute_uv=False)
    rms = svals[-1] / np.sqrt(len(x))
    scale = boundary_length(mesh, x) / (2.0 * np.pi)
    return float(rms / scale)


def mean_curvature_diagnostic(mesh, x):
    """|H| per interior vertex via the cotangent Laplacian with mixed areas.

    The spring-relaxed film is harmonic rather than exactly minimal, so this
    is a diagnostic distribution, not an equilibrium condition.
    """
    tris = mesh.triangles
    nhat, areas, angles = triangle_geometry(mesh, x)
    cot = 1.0 / np.tan(angles)

    lap = np.zeros_like(x)
    mixed = np.zeros(mesh.vertex_count)
    obtuse = angles > 0.5 * np.pi
    any_obtuse = obtuse.any(axis=1)
    pts = x[tris]                                   # (f, 3corner, 3)
    for k in range(3):
        j, l = (k + 1) % 3, (k + 2) % 3
        # cot at corner k weights the opposite edge (j, l)
        diff = pts[:, l] - pts[:, j]
        w = cot[:, k][:, None] * diff
        np.add.at(lap, tris[:, j], w)
        np.add.at(lap, tris[:, l], -w)
        # Meyer mixed area for corner k
        e_j = np.einsum("ij,ij->i", pts[:, j] - pts[:, k], pts[:, j] - pts[:, k])
        e_l = np.einsum("ij,ij->i", pts[:, l] - pts[:, k], pts[:, l] - pts[:, k])
        voronoi = (e_j * cot[:, l] + e_l * cot[:, j]) / 8.0
        contrib = np.where(any_obtuse,
                           np.where(obtuse[:, k], areas / 2.0, areas / 4.0),
                           voronoi)
        np.add.at(mixed, tris[:, k], contrib)

    interior = np.ones(mesh.vertex_count, dtype=bool)
    interior[mesh.boundary_loop] = False
    hvec = lap[interior] / (2.0 * mixed[interior][:, None])
    return 0.5 * np.linalg.norm(hvec, axis=1)


def write_boundary_observables(path, mesh, x):
    """CSV of per-boundary-vertex observables: index, s, curvatures, turning."""
    bg = boundary_geometry(mesh, x)
    field = gaussian_curvature(mesh, x)
    s_cum = np.concatenate([[0.0], np.cumsum(bg.edge_length[:-1])])
    with open(path, "w") as fh:
        fh.write("index,s,kappa,kappa_n,kappa_g,defect\n")
        for i, v in enumerate(bg.loop):
            fh.write("%d,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                     % (v, s_cum[i], bg.kappa[i], bg.kappa_n[i],
                        bg.kappa_g[i], field.defect[v]))
