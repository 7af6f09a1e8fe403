"""One-parameter twisted-saddle trial family and its weakly nonlinear theory.

The family

    x = r (1 + t^2) cos(phi),  y = r (1 - t^2) sin(phi),  z = t (r^2/R) sin(2 phi)

interpolates between a flat disk of radius R (t = 0) and a flat figure-eight
bounded by a lemniscate of Gerono (t = +-1); t -> -t flips handedness.  For
small t it models the twisted shape at the onset of non-planarity.

Every series expression here (metric, boundary arc length and curvature,
energy, boundary length) is paired with an independent quadrature of the
exact embedding, because small coefficient mistakes in the series are the
main risk.  Quadratures use Gauss-Legendre nodes radially and the periodic
trapezoid rule in phi (spectrally accurate for smooth periodic integrands);
error estimates come from halving the resolution.

Eliminating R through the boundary-length series L = pi R (2 + 2 t^2 - t^4)
turns the energy into a quartic in t whose stationarity condition

    t (96 pi^3 - gamma) + (2/3) gamma t^3 = 0

is a supercritical pitchfork with threshold gamma = 96 pi^3 and amplitude
t = sqrt(3 (gamma - 96 pi^3) / (2 gamma)) above it.
"""

from dataclasses import dataclass

import numpy as np

from .mesh import generate_disk_mesh


class QuadratureError(RuntimeError):
    """Quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class SaddleFamily:
    """Radial scale R and family parameter t in [-1, 1]."""

    R: float
    t: float

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if abs(self.t) > 1.0:
            raise ValueError("t must lie in [-1, 1]")


# ---------------------------------------------------------------------------
# embedding, metric, boundary curve


def family_point(fam, r, phi):
    """Embedding of the family surface; broadcasts over r and phi."""
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    t = fam.t
    x = r * (1.0 + t**2) * np.cos(phi)
    y = r * (1.0 - t**2) * np.sin(phi)
    z = t * (r**2 / fam.R) * np.sin(2.0 * phi)
    return np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def family_metric(fam, r, phi):
    """Analytic first fundamental form (g_rr, g_rphi, g_phiphi)."""
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    t, R = fam.t, fam.R
    rho2 = (r / R) ** 2
    c2, c4 = np.cos(2.0 * phi), np.cos(4.0 * phi)
    s2, s4 = np.sin(2.0 * phi), np.sin(4.0 * phi)
    g_rr = t**4 + 2.0 * t**2 * (rho2 + c2 - rho2 * c4) + 1.0
    g_rp = 2.0 * r * t**2 * (rho2 * s4 - s2)
    g_pp = r**2 * (t**4 + 2.0 * t**2 * (rho2 - c2 + rho2 * c4) + 1.0)
    return g_rr, g_rp, g_pp


def _surface_derivs(fam, r, phi):
    """First and second partial derivatives of the embedding."""
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    t, R = fam.t, fam.R
    cp, sp = np.cos(phi), np.sin(phi)
    c2, s2 = np.cos(2.0 * phi), np.sin(2.0 * phi)
    a, b = 1.0 + t**2, 1.0 - t**2
    zero = np.zeros(np.broadcast(r, phi).shape)

    x_r = np.stack(np.broadcast_arrays(a * cp, b * sp, 2.0 * t * r / R * s2), -1)
    x_p = np.stack(np.broadcast_arrays(-r * a * sp, r * b * cp,
                                       2.0 * t * r**2 / R * c2), -1)
    x_rr = np.stack(np.broadcast_arrays(zero, zero, 2.0 * t / R * s2), -1)
    x_rp = np.stack(np.broadcast_arrays(-a * sp, b * cp,
                                        4.0 * t * r / R * c2), -1)
    x_pp = np.stack(np.broadcast_arrays(-r * a * cp, -r * b * sp,
                                        -4.0 * t * r**2 / R * s2), -1)
    return x_r, x_p, x_rr, x_rp, x_pp


def boundary_curve(fam, phi):
    """Boundary (r = R) position samples."""
    return family_point(fam, fam.R, phi)


def boundary_derivatives(fam, phi):
    """Exact d/dphi derivatives (c', c'', c''') of the boundary curve."""
    phi = np.asarray(phi, dtype=float)
    t, R = fam.t, fam.R
    a, b = R * (1.0 + t**2), R * (1.0 - t**2)
    cp, sp = np.cos(phi), np.sin(phi)
    c2, s2 = np.cos(2.0 * phi), np.sin(2.0 * phi)
    c1 = np.stack(np.broadcast_arrays(-a * sp, b * cp, 2.0 * t * R * c2), -1)
    c2_ = np.stack(np.broadcast_arrays(-a * cp, -b * sp, -4.0 * t * R * s2), -1)
    c3 = np.stack(np.broadcast_arrays(a * sp, -b * cp, -8.0 * t * R * c2), -1)
    return c1, c2_, c3


def ds2_series(fam, phi):
    """Series squared line element of the boundary: (ds/dphi)^2."""
    phi = np.asarray(phi, dtype=float)
    t, R = fam.t, fam.R
    return R**2 * ((1.0 + t**2) ** 2
                   - 2.0 * t**2 * (np.cos(2.0 * phi) - np.cos(4.0 * phi)))


def kappa2_series(fam, phi):
    """Series squared curvature of the boundary curve."""
    phi = np.asarray(phi, dtype=float)
    t, R = fam.t, fam.R
    c2, c4, c6 = (np.cos(2.0 * phi), np.cos(4.0 * phi), np.cos(6.0 * phi))
    num = (1.0 + t**2 * (10.0 - 6.0 * c4)
           - t**4 * (2.0 - 6.0 * c2 - 2.0 * c6)
           + t**6 * (10.0 - 6.0 * c4) + t**8)
    den = R**2 * ((1.0 + t**2) ** 2 - 2.0 * t**2 * (c2 - c4)) ** 3
    return num / den


def boundary_curvature_series(fam, phi):
    """Series normal and geodesic curvature (kappa_n, kappa_g) of the boundary."""
    phi = np.asarray(phi, dtype=float)
    t, R = fam.t, fam.R
    s2, s4, s6 = np.sin(2 * phi), np.sin(4 * phi), np.sin(6 * phi)
    c2, c4 = np.cos(2 * phi), np.cos(4 * phi)
    kn = -(2.0 * t / R) * s2 + (t**3 / R) * (3.0 * s2 - s4 + s6)
    kg = 1.0 / R + t**2 * (1.0 + 3.0 * c2 - 5.0 * c4) / (2.0 * R)
    return kn, kg


def boundary_curvatures_exact(fam, phi):
    """Exact (kappa_n, kappa_g) of the boundary from the embedding.

    The curvature vector of the boundary curve is projected on the surface
    normal and on the inward co-normal n x t computed at r = R.
    """
    c1, c2, _ = boundary_derivatives(fam, phi)
    x_r, x_p, *_ = _surface_derivs(fam, fam.R, phi)
    n = np.cross(x_r, x_p)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    sp2 = np.einsum("...i,...i->...", c1, c1)
    that = c1 / np.sqrt(sp2)[..., None]
    kvec = (c2 - np.einsum("...i,...i->...", c2, that)[..., None] * that) \
        / sp2[..., None]
    kn = np.einsum("...i,...i->...", kvec, n)
    kg = np.einsum("...i,...i->...", kvec, np.cross(n, that))
    return kn, kg


# ---------------------------------------------------------------------------
# quadratures with resolution-halving error estimates


def _check_panels(nphi):
    if nphi < 64:
        raise ValueError("need at least 64 panels per period")


def _trapezoid_phi(values, nphi):
    return float(values.sum()) * (2.0 * np.pi / nphi)


def length_quadrature(fam, nphi=2048, tol=None):
    """Boundary length by periodic trapezoid rule; returns (value, error estimate)."""
    _check_panels(nphi)

    def at(n):
        phi = np.arange(n) * (2.0 * np.pi / n)
        c1, _, _ = boundary_derivatives(fam, phi)
        return _trapezoid_phi(np.linalg.norm(c1, axis=-1), n)

    val, coarse = at(nphi), at(nphi // 2)
    err = abs(val - coarse)
    if tol is not None and err > tol:
        raise QuadratureError(f"length quadrature error estimate {err:.3g} > {tol:.3g}")
    return val, err


def length_series(fam):
    """Boundary length series pi R (2 + 2 t^2 - t^4)."""
    t = fam.t
    return np.pi * fam.R * (2.0 + 2.0 * t**2 - t**4)


def area_quadrature(fam, nr=96, nphi=1024, tol=None):
    """Surface area by Gauss-Legendre (r) x trapezoid (phi)."""
    _check_panels(nphi)

    def at(nr_, nphi_):
        xg, wg = np.polynomial.legendre.leggauss(nr_)
        r = 0.5 * (xg + 1.0) * fam.R
        wr = 0.5 * fam.R * wg
        phi = np.arange(nphi_) * (2.0 * np.pi / nphi_)
        rg, pg = np.meshgrid(r, phi, indexing="ij")
        g_rr, g_rp, g_pp = family_metric(fam, rg, pg)
        det = g_rr * g_pp - g_rp**2
        return float((np.sqrt(det) * wr[:, None]).sum()) * (2.0 * np.pi / nphi_)

    val = at(nr, nphi)
    err = abs(val - at(max(8, nr // 2), nphi // 2))
    if tol is not None and err > tol:
        raise QuadratureError(f"area quadrature error estimate {err:.3g} > {tol:.3g}")
    return val, err


def bending_quadrature(fam, nphi=2048, tol=None):
    """Integral of kappa^2 ds around the boundary, from exact derivatives."""
    _check_panels(nphi)

    def at(n):
        phi = np.arange(n) * (2.0 * np.pi / n)
        c1, c2, _ = boundary_derivatives(fam, phi)
        sp = np.linalg.norm(c1, axis=-1)
        cr = np.cross(c1, c2)
        k2 = np.einsum("...i,...i->...", cr, cr) / sp**6
        return _trapezoid_phi(k2 * sp, n)

    val, coarse = at(nphi), at(nphi // 2)
    err = abs(val - coarse)
    if tol is not None and err > tol:
        raise QuadratureError(f"bending quadrature error estimate {err:.3g} > {tol:.3g}")
    return val, err


def energy_quadrature(fam, sigma, alpha, nr=96, nphi=1024, tol=None):
    """sigma * area + alpha * bending by quadrature; (value, error estimate)."""
    a_val, a_err = area_quadrature(fam, nr, nphi)
    b_val, b_err = bending_quadrature(fam, max(nphi, 2048))
    err = abs(sigma) * a_err + abs(alpha) * b_err
    if tol is not None and err > tol:
        raise QuadratureError(f"energy quadrature error estimate {err:.3g} > {tol:.3g}")
    return sigma * a_val + alpha * b_val, err


def energy_series(fam, sigma, alpha):
    """Series energy (pi alpha / R) [2 + s + t^2 (10 + s) - t^4 (9 + 5 s / 3)]."""
    t, R = fam.t, fam.R
    s = sigma * R**3 / alpha
    return (np.pi * alpha / R) * (2.0 + s + t**2 * (10.0 + s)
                                  - t**4 * (9.0 + 5.0 * s / 3.0))


def gaussian_K_leading(fam):
    """Leading-order Gaussian curvature -(2t/R)^2 (uniform over the surface)."""
    return -((2.0 * fam.t / fam.R) ** 2)


def int_K_quadrature(fam, nr=96, nphi=1024, tol=None):
    """Integral of K dA from the full second fundamental form."""
    _check_panels(nphi)

    def at(nr_, nphi_):
        xg, wg = np.polynomial.legendre.leggauss(nr_)
        r = 0.5 * (xg + 1.0) * fam.R
        wr = 0.5 * fam.R * wg
        phi = np.arange(nphi_) * (2.0 * np.pi / nphi_)
        rg, pg = np.meshgrid(r, phi, indexing="ij")
        x_r, x_p, x_rr, x_rp, x_pp = _surface_derivs(fam, rg, pg)
        n = np.cross(x_r, x_p)
        nn = np.linalg.norm(n, axis=-1)
        nhat = n / nn[..., None]
        e = np.einsum("...i,...i->...", nhat, x_rr)
        f = np.einsum("...i,...i->...", nhat, x_rp)
        g = np.einsum("...i,...i->...", nhat, x_pp)
        # K dA = (LN - M^2)/sqrt(EG - F^2) dr dphi, and sqrt(EG - F^2) = |n|
        integrand = (e * g - f * f) / nn
        return float((integrand * wr[:, None]).sum()) * (2.0 * np.pi / nphi_)

    val = at(nr, nphi)
    err = abs(val - at(max(8, nr // 2), nphi // 2))
    if tol is not None and err > tol:
        raise QuadratureError(f"K quadrature error estimate {err:.3g} > {tol:.3g}")
    return val, err


def int_K_gauss_bonnet(fam, nphi=2048):
    """Integral of K dA via 2 pi minus the integrated geodesic curvature."""
    _check_panels(nphi)
    phi = np.arange(nphi) * (2.0 * np.pi / nphi)
    _, kg = boundary_curvatures_exact(fam, phi)
    c1, _, _ = boundary_derivatives(fam, phi)
    sp = np.linalg.norm(c1, axis=-1)
    return 2.0 * np.pi - _trapezoid_phi(kg * sp, nphi)


def int_abs_kn_quadrature(fam, nphi=2048):
    """Integral of |kappa_n| ds around the boundary (exact curvatures)."""
    _check_panels(nphi)
    phi = np.arange(nphi) * (2.0 * np.pi / nphi)
    kn, _ = boundary_curvatures_exact(fam, phi)
    c1, _, _ = boundary_derivatives(fam, phi)
    sp = np.linalg.norm(c1, axis=-1)
    return _trapezoid_phi(np.abs(kn) * sp, nphi)


def int_abs_kn_leading(fam):
    """Leading-order integral of |kappa_n| ds: 8 |t|, independent of R."""
    return 8.0 * abs(fam.t)


def mean_abs_kn_leading(fam):
    """Leading-order length average of |kappa_n|: 4 |t| / (pi R)."""
    return 4.0 * abs(fam.t) / (np.pi * fam.R)


# ---------------------------------------------------------------------------
# length constraint and pitchfork


def radius_for_length(length, t):
    """R making the series boundary length equal `length` (linear in R)."""
    if length <= 0:
        raise ValueError("length must be positive")
    return length / (np.pi * (2.0 + 2.0 * t**2 - t**4))


def constrained_energy_series(length, t, sigma, alpha):
    """Series energy with R eliminated by the length constraint.

    Consistently truncated at fourth order this is the quartic

        (pi alpha / R0) (2 + 12 t^2) + pi sigma R0^2 (1 - t^2 + t^4 / 3),

    R0 = length / (2 pi), whose stationary points are exactly the roots of
    the pitchfork normal form.
    """
    r0 = length / (2.0 * np.pi)
    t = np.asarray(t, dtype=float)
    return (np.pi * alpha / r0) * (2.0 + 12.0 * t**2) \
        + np.pi * sigma * r0**2 * (1.0 - t**2 + t**4 / 3.0)


def gamma_star():
    """Pitchfork threshold of the trial family: 96 pi^3."""
    return 96.0 * np.pi**3


def pitchfork_amplitude(gamma):
    """Nonnegative root of t (96 pi^3 - gamma) + (2/3) gamma t^3 = 0."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    gs = gamma_star()
    if gamma <= gs:
        return 0.0
    return float(np.sqrt(3.0 * (gamma - gs) / (2.0 * gamma)))


# ---------------------------------------------------------------------------
# sampling the family onto a disk mesh


def _hexagon_radius(theta, m):
    """Distance from the center to the perimeter of a radius-m hexagon."""
    reduced = np.mod(theta, np.pi / 3.0) - np.pi / 6.0
    return (np.sqrt(3.0) / 2.0) * m / np.cos(reduced)


def family_trimesh(fam, rings):
    """Sample the family on a hex-lattice disk mesh; returns (TriMesh, positions).

    Lattice vertices are mapped radially so the hexagonal perimeter lands on
    the r = R boundary circle of the family parametrization.
    """
    mesh, flat = generate_disk_mesh(rings, 1.0)
    r_lat = np.hypot(flat[:, 0], flat[:, 1])
    theta = np.arctan2(flat[:, 1], flat[:, 0])
    r_norm = np.zeros_like(r_lat)
    nz = r_lat > 0
    r_norm[nz] = r_lat[nz] / _hexagon_radius(theta[nz], rings)
    positions = family_point(fam, fam.R * r_norm, theta)
    return mesh, positions
