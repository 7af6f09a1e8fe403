"""Discrete energy of a film-spanning elastic loop, with analytic gradient.

The energy has three parts:

  bending        alpha * sum over boundary vertices of <s_v> * kappa_v^2,
                 kappa_v = |t_v - t_{v-1}| / <s_v> with unit edge tangents
                 t_v and the average  <s_v> = (s_v + s_{v-1}) / 2  of the two
                 incident boundary edge lengths;
  springs        spring_k * sum over interior edges of |e|^2
                 (zero-rest-length springs standing in for film tension);
  length penalty length_penalty_k * (total boundary length - L)^2
                 plus edge_penalty_k * sum (|e_i| - rest_i)^2 over boundary
                 edges (rest lengths uniform L/B unless supplied).

The global term pins the total length but is indifferent to how vertices
distribute along the loop; because the spring term is a Dirichlet energy,
not an area, it pays to crowd boundary vertices together, and relaxation
exploits that freedom until the boundary geometry degrades.  The per-edge
term removes the degeneracy at modest stiffness without taking over the
length constraint.

The continuum tension equivalent of the spring stiffness on this lattice is
sigma = 4 k / sqrt(3), so the control parameter k L^3 / alpha maps to
gamma = sigma L^3 / alpha = (4 / sqrt(3)) k L^3 / alpha.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class EnergyError(RuntimeError):
    pass


class DegenerateBoundaryError(EnergyError):
    """A boundary edge collapsed below the degeneracy threshold."""


@dataclass
class EnergyParams:
    """Physical parameters of the discrete energy.

    alpha >= 0 (bending modulus), spring_k >= 0, target_length > 0,
    length_penalty_k >= 0.  A springs-only model (alpha = 0) is allowed;
    it is useful for testing the optimizer against a linear solve.
    """

    alpha: float = 1.0
    spring_k: float = 0.0
    target_length: float = 1.0
    length_penalty_k: float = 0.0
    edge_penalty_k: float = 0.0
    edge_rest_lengths: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if (self.alpha < 0 or self.spring_k < 0 or self.length_penalty_k < 0
                or self.edge_penalty_k < 0):
            raise ValueError("moduli must be nonnegative")
        if self.target_length <= 0:
            raise ValueError("target_length must be positive")


@dataclass
class EnergyBreakdown:
    bending: float
    springs: float
    length_penalty: float
    total: float
    boundary_length: float


# continuum surface tension represented by a unit-lattice spring network
SIGMA_PER_SPRING_K = 4.0 / np.sqrt(3.0)


def sigma_from_spring_k(spring_k):
    """Surface tension equivalent to interior spring stiffness: sigma = 4k/sqrt(3)."""
    return SIGMA_PER_SPRING_K * spring_k


def spring_k_from_sigma(sigma):
    """Inverse of sigma_from_spring_k: k = sqrt(3) sigma / 4."""
    return sigma / SIGMA_PER_SPRING_K


def gamma_numeric(spring_k, target_length, alpha):
    """Dimensionless groups (k L^3 / alpha, gamma = sigma L^3 / alpha)."""
    kl3a = spring_k * target_length**3 / alpha
    return kl3a, SIGMA_PER_SPRING_K * kl3a


def _boundary_arrays(mesh, x, p):
    """Edge vectors, lengths, unit tangents of the boundary loop, with guard."""
    loop = mesh.boundary_loop
    e = x[np.roll(loop, -1)] - x[loop]
    s = np.linalg.norm(e, axis=1)
    if np.any(s < 1e-12 * p.target_length):
        raise DegenerateBoundaryError(
            "boundary edge shorter than 1e-12 * L, curvature undefined")
    t = e / s[:, None]
    return loop, e, s, t


def _penalty_terms(s, p):
    """Penalty energy and its derivative with respect to each edge length."""
    e_pen = 0.0
    dpen_ds = None
    if p.length_penalty_k != 0.0:
        excess = float(s.sum()) - p.target_length
        e_pen += p.length_penalty_k * excess**2
        dpen_ds = np.full(len(s), 2.0 * p.length_penalty_k * excess)
    if p.edge_penalty_k != 0.0:
        rest = p.edge_rest_lengths
        if rest is None:
            rest = p.target_length / len(s)
        diff = s - rest
        e_pen += p.edge_penalty_k * float(diff @ diff)
        d_edge = 2.0 * p.edge_penalty_k * diff
        dpen_ds = d_edge if dpen_ds is None else dpen_ds + d_edge
    return e_pen, dpen_ds


def energy(mesh, x, p):
    """Evaluate the energy breakdown at configuration x."""
    loop, e, s, t = _boundary_arrays(mesh, x, p)
    c = t - np.roll(t, 1, axis=0)               # curvature vector numerator at v
    savg = 0.5 * (s + np.roll(s, 1))
    bending = p.alpha * float(np.sum(np.einsum("ij,ij->i", c, c) / savg))

    springs = 0.0
    if p.spring_k != 0.0 and len(mesh.interior_edges):
        lap = mesh.interior_laplacian()
        springs = p.spring_k * float(np.sum(x * (lap @ x)))

    e_pen, _ = _penalty_terms(s, p)
    blen = float(s.sum())
    return EnergyBreakdown(bending=bending, springs=springs, length_penalty=e_pen,
                           total=bending + springs + e_pen, boundary_length=blen)


def energy_and_gradient(mesh, x, p):
    """Energy breakdown and its exact gradient, one fused evaluation."""
    loop, e, s, t = _boundary_arrays(mesh, x, p)
    c = t - np.roll(t, 1, axis=0)
    savg = 0.5 * (s + np.roll(s, 1))
    c_sq = np.einsum("ij,ij->i", c, c)
    bending = p.alpha * float(np.sum(c_sq / savg))

    grad = np.zeros_like(x)
    springs = 0.0
    if p.spring_k != 0.0 and len(mesh.interior_edges):
        lap = mesh.interior_laplacian()
        lx = lap @ x
        springs = p.spring_k * float(np.sum(x * lx))
        grad += 2.0 * p.spring_k * lx

    # bending gradient through unit tangents and edge lengths.
    # dE/dt_v collects c_v (positive sign) and c_{v+1} (negative sign);
    # dE/ds_v comes from the two <s> averages containing s_v.
    if p.alpha != 0.0:
        c_next = np.roll(c, -1, axis=0)
        savg_next = np.roll(savg, -1)
        csq_next = np.roll(c_sq, -1)
        g_t = 2.0 * p.alpha * (c / savg[:, None] - c_next / savg_next[:, None])
        g_s = -0.5 * p.alpha * (c_sq / savg**2 + csq_next / savg_next**2)
    else:
        g_t = np.zeros_like(t)
        g_s = np.zeros(len(s))

    e_pen, dpen_ds = _penalty_terms(s, p)
    if dpen_ds is not None:
        g_s = g_s + dpen_ds

    # chain rule to edge endpoints: dt/de = (I - t t^T)/s, ds/de = t
    g_e = (g_t - np.einsum("ij,ij->i", g_t, t)[:, None] * t) / s[:, None] \
        + g_s[:, None] * t
    np.add.at(grad, np.roll(loop, -1), g_e)
    np.subtract.at(grad, loop, g_e)

    blen = float(s.sum())
    breakdown = EnergyBreakdown(bending=bending, springs=springs,
                                length_penalty=e_pen,
                                total=bending + springs + e_pen,
                                boundary_length=blen)
    return breakdown, grad


def gradient(mesh, x, p):
    """Gradient of energy(...).total with respect to every coordinate."""
    return energy_and_gradient(mesh, x, p)[1]
