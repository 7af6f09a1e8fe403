"""Differential-geometry observables against analytic curves and surfaces.

Oracles: circle (kappa = 1/R, tau = 0, second-order convergence of the
cyclic difference scheme), helix (kappa = a/(a^2+c^2), tau = c/(a^2+c^2)),
regular polygon fan (vertex curvature exactly 1/R), spherical cap
(|H| = 1/rho, pointwise angle-defect curvature 1/rho^2), and the
Gauss-Bonnet sum which is a combinatorial identity on any disk mesh.
"""

import numpy as np
import pytest

from filmloop.diffgeo import (DiffGeoError, InflectionError,
                              boundary_geometry, el_residuals,
                              frenet_analyze, gauss_bonnet_defect,
                              gaussian_curvature, mean_curvature_diagnostic,
                              planarity, vertex_normals,
                              write_boundary_observables)
from filmloop.mesh import generate_disk_mesh

from helpers import circle_samples, fan_mesh


def test_frenet_circle_second_order_convergence():
    errs = []
    for n in (64, 128):
        fr = frenet_analyze(circle_samples(n, 2.0))
        assert fr.tau_defined.all()
        assert np.abs(fr.tau).max() < 1e-12
        assert np.allclose(np.linalg.norm(fr.tangent, axis=1), 1.0, atol=1e-13)
        errs.append(np.abs(fr.kappa - 0.5).max())
    assert 3.4 < errs[0] / errs[1] < 4.6


def test_frenet_helix_curvature_and_torsion():
    a, c, n = 1.0, 0.3, 512
    u = np.linspace(0.0, 4.0 * np.pi, n)
    pts = np.stack([a * np.cos(u), a * np.sin(u), c * u], axis=1)
    fr = frenet_analyze(pts)
    # the cyclic scheme corrupts a few samples at the seam of this open curve
    interior = slice(4, n - 4)
    k_true = a / (a * a + c * c)
    t_true = c / (a * a + c * c)
    assert np.abs(fr.kappa[interior] - k_true).max() / k_true < 1e-3
    assert np.abs(fr.tau[interior] - t_true).max() / t_true < 1e-3
    assert (fr.tau[interior] > 0).all()       # right-handed helix


def test_frenet_input_validation():
    with pytest.raises(DiffGeoError):
        frenet_analyze(circle_samples(4))
    pts = circle_samples(32)
    pts[10] = pts[9]
    pts[11] = pts[9]                          # stationary midpoint
    with pytest.raises(DiffGeoError):
        frenet_analyze(pts)


def test_total_length_matches_polygon():
    n = 128
    fr = frenet_analyze(circle_samples(n, 1.0))
    assert np.isclose(fr.total_length, 2.0 * n * np.sin(np.pi / n), rtol=1e-12)


def test_deriv_s_differentiates_arclength_fields():
    n = 256
    fr = frenet_analyze(circle_samples(n, 1.0))
    s = np.arange(n) * (2.0 * np.pi / n)
    f = np.sin(3.0 * s)
    df = fr.deriv_s(f)
    assert np.abs(df - 3.0 * np.cos(3.0 * s)).max() < 5e-3


def test_boundary_geometry_regular_polygon():
    n, R = 48, 0.9
    mesh, x = fan_mesh(n, R)
    bg = boundary_geometry(mesh, x)
    assert np.abs(bg.kappa - 1.0 / R).max() < 1e-12
    assert np.abs(bg.kappa_n).max() < 1e-12
    assert np.abs(bg.kappa_g - 1.0 / R).max() < 1e-12   # inward is positive
    assert np.isclose(bg.s_weight.sum(), bg.boundary_length, rtol=1e-12)
    assert np.isclose(bg.boundary_length, 2 * n * R * np.sin(np.pi / n),
                      rtol=1e-12)
    assert abs(bg.integral_kn) < 1e-12
    assert bg.mean_abs_kn < 1e-12


def test_boundary_geometry_rotation_invariant():
    mesh, x = fan_mesh(32, 1.0)
    rng = np.random.default_rng(8)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    bg = boundary_geometry(mesh, x @ q.T)
    assert np.abs(bg.kappa - 1.0).max() < 1e-10
    assert np.abs(bg.kappa_n).max() < 1e-10


def test_gauss_bonnet_identity_on_warped_disk():
    mesh, x0 = generate_disk_mesh(4)
    rng = np.random.default_rng(9)
    x = x0.copy()
    x[:, 2] = 0.4 * np.sin(x0[:, 0]) * np.cos(x0[:, 1])
    x += 0.05 * rng.standard_normal(x.shape)
    assert gauss_bonnet_defect(mesh, x) < 1e-10


def test_gaussian_curvature_flat_disk():
    mesh, x = generate_disk_mesh(3)
    cf = gaussian_curvature(mesh, x)
    assert abs(cf.integral_K) < 1e-12
    assert abs(cf.mean_K) < 1e-13
    assert np.isclose(cf.total_area, 6 * 9 * np.sqrt(3.0) / 4.0, rtol=1e-12)
    assert cf.interior_mask.sum() == mesh.vertex_count - len(mesh.boundary_loop)


def test_gaussian_curvature_spherical_cap():
    mesh, x = generate_disk_mesh(8)
    rho = 12.0
    x = x.copy()
    x[:, 2] = rho - np.sqrt(rho**2 - x[:, 0]**2 - x[:, 1]**2)
    cf = gaussian_curvature(mesh, x)
    pk = cf.pointwise_K()
    assert (cf.defect[cf.interior_mask] > 0).all()
    assert np.abs(pk - 1.0 / rho**2).max() < 0.05 / rho**2
    # interior defects only, so the integral undershoots area / rho^2 by the
    # boundary band
    assert 0 < cf.integral_K < cf.total_area / rho**2


def test_mean_curvature_diagnostic_sphere():
    mesh, x = generate_disk_mesh(8)
    rho = 12.0
    x = x.copy()
    x[:, 2] = rho - np.sqrt(rho**2 - x[:, 0]**2 - x[:, 1]**2)
    h = mean_curvature_diagnostic(mesh, x)
    assert h.shape == (mesh.vertex_count - len(mesh.boundary_loop),)
    assert np.abs(h - 1.0 / rho).max() * rho < 1e-4


def test_vertex_normals_flat_and_unit():
    mesh, x = generate_disk_mesh(3)
    nrm = vertex_normals(mesh, x)
    assert np.allclose(nrm, [0.0, 0.0, 1.0], atol=1e-12)
    x2 = x.copy()
    x2[:, 2] = 0.2 * np.sin(x[:, 0])
    nrm2 = vertex_normals(mesh, x2)
    assert np.allclose(np.linalg.norm(nrm2, axis=1), 1.0, atol=1e-12)


def test_planarity_flat_vs_lifted():
    mesh, x = generate_disk_mesh(4)
    assert planarity(mesh, x) < 1e-14
    x2 = x.copy()
    x2[:, 2] = 0.05 * np.sin(x[:, 0])
    assert planarity(mesh, x2) > 1e-3


def test_el_residuals_circle_with_flat_film_pull():
    # on the circle of radius R the force balance fixes
    # beta = (alpha - sigma R^3) / R^2; with the analytic curvature
    # substituted the residuals cancel exactly
    n, R = 512, 1.0
    sigma, alpha = 5.0, 1.0
    fr = frenet_analyze(circle_samples(n, R))
    fr.kappa = np.full(n, 1.0 / R)
    fr.tau = np.zeros(n)
    beta = (alpha - sigma * R**3) / R**2
    res_a, res_b = el_residuals(fr, np.pi / 2.0, alpha, sigma, beta)
    assert np.abs(res_a).max() < 1e-12
    assert np.abs(res_b).max() < 1e-12


def test_el_residuals_finite_difference_bias_is_second_order():
    # with the finite-difference curvature left in place the residual is the
    # O(h^2) curvature bias times the equation coefficients
    sigma, alpha, R = 5.0, 1.0, 1.0
    beta = (alpha - sigma * R**3) / R**2
    errs = []
    for n in (128, 256):
        fr = frenet_analyze(circle_samples(n, R))
        res_a, _ = el_residuals(fr, np.pi / 2.0, alpha, sigma, beta)
        errs.append(np.abs(res_a).max())
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_el_residuals_reject_inflection():
    u = np.arange(64) * 2.0 * np.pi / 64
    fig8 = np.stack([np.sin(u), np.sin(2 * u), np.zeros_like(u)], axis=1)
    fr = frenet_analyze(fig8)
    assert not fr.tau_defined.all()
    with pytest.raises(InflectionError):
        el_residuals(fr, np.pi / 2.0, 1.0, 1.0, 0.0)


def test_write_boundary_observables(tmp_path):
    mesh, x = fan_mesh(16, 1.0)
    path = tmp_path / "boundary.csv"
    write_boundary_observables(str(path), mesh, x)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "index,s,kappa,kappa_n,kappa_g,defect"
    assert len(lines) == 1 + len(mesh.boundary_loop)
    row = lines[1].split(",")
    assert len(row) == 6
    assert np.isclose(float(row[2]), 1.0, atol=1e-10)
