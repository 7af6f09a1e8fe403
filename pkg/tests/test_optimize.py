"""Optimizer behavior: CG core on a quadratic oracle, mesh relaxation,
penalty escalation, determinism, and the gradient-only polish stage.
"""

import io

import numpy as np
import pytest

from filmloop.energy import EnergyParams
from filmloop.mesh import generate_disk_mesh, scale_to_boundary_length
from filmloop.diffgeo import planarity
from filmloop.optimize import (MinimizeOptions, NumericalError, minimize,
                               minimize_function, perturb, polish, relax)


def quadratic_problem(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    a = m @ m.T + n * np.eye(n)
    b = rng.standard_normal(n)

    def fun(x):
        return 0.5 * x @ a @ x - b @ x, a @ x - b

    return fun, a, b


def test_cg_solves_quadratic():
    fun, a, b = quadratic_problem(50, 3)
    opts = MinimizeOptions(max_iterations=2000)
    x, f, g, it, status, fh, gh = minimize_function(fun, np.zeros(50), opts,
                                                    gtol_abs=1e-6)
    assert status == "converged"
    assert it < 50                            # far fewer than the dimension^2
    assert np.abs(x - np.linalg.solve(a, b)).max() < 1e-7
    assert gh[-1] <= 1e-6


def test_cg_diagonal_preconditioner_agrees():
    fun, a, b = quadratic_problem(40, 4)
    opts = MinimizeOptions(max_iterations=2000)
    xstar = np.linalg.solve(a, b)
    minv = 1.0 / np.diag(a)
    x, *_ = minimize_function(fun, np.zeros(40), opts, gtol_abs=1e-10,
                              minv=minv)
    assert np.abs(x - xstar).max() < 1e-8


def test_energy_history_monotone():
    fun, _, _ = quadratic_problem(30, 5)
    opts = MinimizeOptions(max_iterations=300)
    *_, fh, gh = minimize_function(fun, np.zeros(30), opts, gtol_abs=1e-9)
    assert np.all(np.diff(fh) <= 1e-12 * (1.0 + np.abs(fh[:-1])))
    assert len(fh) == len(gh)


def test_nonsmooth_objective_reports_line_search_failure():
    def fun(x):
        return float(np.abs(x).sum()), np.sign(x)

    opts = MinimizeOptions(max_iterations=100)
    x, f, g, it, status, *_ = minimize_function(fun, np.array([1.0]), opts,
                                                gtol_abs=1e-12)
    assert status == "line_search_failed"


def test_non_finite_energy_raises():
    def fun(x):
        return np.nan, np.zeros_like(x)

    with pytest.raises(NumericalError):
        minimize_function(fun, np.zeros(3), MinimizeOptions(), gtol_abs=1e-6)


def test_options_validation():
    with pytest.raises(ValueError):
        MinimizeOptions(max_iterations=-1)
    with pytest.raises(ValueError):
        MinimizeOptions(gradient_tolerance=0.0)
    with pytest.raises(ValueError):
        MinimizeOptions(wolfe_c1=0.5, wolfe_c2=0.1)
    with pytest.raises(ValueError):
        MinimizeOptions(restart_interval=0)
    with pytest.raises(ValueError):
        MinimizeOptions(perturbation_amplitude=-1e-3)


def test_perturb_touches_only_z():
    x = np.zeros((40, 3))
    y = perturb(x, 1e-2, seed=5)
    assert np.array_equal(y[:, :2], x[:, :2])
    assert np.abs(y[:, 2]).max() <= 1e-2
    assert np.abs(y[:, 2]).max() > 0
    assert np.array_equal(perturb(x, 1e-2, seed=5), y)
    assert not np.array_equal(perturb(x, 1e-2, seed=6), y)
    with pytest.raises(ValueError):
        perturb(x, -1.0, seed=0)


def test_max_iterations_zero_returns_start():
    mesh, x0 = generate_disk_mesh(3)
    x0 = scale_to_boundary_length(mesh, x0, 1.0)
    p = EnergyParams(alpha=1.0, spring_k=10.0, target_length=1.0)
    res = minimize(mesh, x0, p, MinimizeOptions(max_iterations=0))
    assert res.iterations == 0
    assert res.status == "max_iterations"
    assert not res.converged
    assert np.array_equal(res.x, x0)


def test_minimize_writes_iteration_log():
    mesh, x0 = generate_disk_mesh(3)
    x0 = scale_to_boundary_length(mesh, x0, 1.0)
    p = EnergyParams(alpha=1.0, spring_k=10.0, target_length=1.0,
                     length_penalty_k=100.0, edge_penalty_k=100.0)
    stream = io.StringIO()
    res = minimize(mesh, x0, p, MinimizeOptions(max_iterations=50),
                   log_stream=stream)
    lines = stream.getvalue().strip().split("\n")
    assert lines[0] == "iteration,total_energy,gradient_inf_norm,boundary_length_error"
    assert len(lines) == res.iterations + 2    # header + iterate 0 + accepted
    first = lines[1].split(",")
    assert int(first[0]) == 0
    assert np.isfinite(float(first[1]))


def test_relax_flattens_subcritical_disk():
    mesh, x0 = generate_disk_mesh(6)
    x0 = scale_to_boundary_length(mesh, x0, 1.0)
    p = EnergyParams(alpha=1.0, spring_k=20.0, target_length=1.0)
    opts = MinimizeOptions(max_iterations=20000, rng_seed=0,
                           perturbation_amplitude=1e-3 / (2.0 * np.pi))
    res = relax(mesh, x0, p, opts)
    assert res.converged
    assert res.length_error < 1e-3
    assert planarity(mesh, res.x) < 1e-6
    radii = np.linalg.norm(res.x[mesh.boundary_loop]
                           - res.x[mesh.boundary_loop].mean(axis=0), axis=1)
    assert np.abs(radii - 1.0 / (2.0 * np.pi)).max() < 0.005 / (2.0 * np.pi)


def test_relax_is_deterministic():
    mesh, x0 = generate_disk_mesh(4)
    x0 = scale_to_boundary_length(mesh, x0, 1.0)
    p = EnergyParams(alpha=1.0, spring_k=30.0, target_length=1.0)
    opts = MinimizeOptions(max_iterations=5000, rng_seed=1,
                           perturbation_amplitude=1e-3)
    res1 = relax(mesh, x0, p, opts)
    res2 = relax(mesh, x0, p, opts)
    assert np.array_equal(res1.x, res2.x)
    assert res1.iterations == res2.iterations


def test_relax_escalates_weak_penalty():
    mesh, x0 = generate_disk_mesh(4)
    x0 = scale_to_boundary_length(mesh, x0, 1.0)
    # global penalty deliberately far too soft to hold the target length in
    # one round; edge penalty left on automatic
    p = EnergyParams(alpha=1.0, spring_k=30.0, target_length=1.0,
                     length_penalty_k=1e-3, edge_penalty_k=0.0)
    res = relax(mesh, x0, p, MinimizeOptions(max_iterations=20000),
                max_rounds=9)
    assert res.penalty_rounds >= 2
    assert res.params.length_penalty_k > 1e-3
    assert res.length_error < 1e-3


def test_precondition_off_reaches_same_minimum():
    mesh, x0 = generate_disk_mesh(4)
    x0 = scale_to_boundary_length(mesh, x0, 1.0)
    p = EnergyParams(alpha=1.0, spring_k=20.0, target_length=1.0)
    on = relax(mesh, x0, p, MinimizeOptions(max_iterations=40000))
    off = relax(mesh, x0, p, MinimizeOptions(max_iterations=40000,
                                             precondition=False))
    assert on.converged and off.converged
    assert np.isclose(on.energy.total, off.energy.total, rtol=1e-7)


def test_wolfe_debug_assertions_hold():
    mesh, x0 = generate_disk_mesh(3)
    x0 = scale_to_boundary_length(mesh, x0, 1.0)
    p = EnergyParams(alpha=1.0, spring_k=10.0, target_length=1.0,
                     length_penalty_k=100.0, edge_penalty_k=100.0)
    res = minimize(mesh, x0, p, MinimizeOptions(max_iterations=200,
                                                debug_wolfe=True))
    assert res.iterations > 0


def test_polish_descends_past_wolfe_floor():
    mesh, x0 = generate_disk_mesh(6)
    x0 = scale_to_boundary_length(mesh, x0, 1.0)
    p = EnergyParams(alpha=1.0, spring_k=50.0, target_length=1.0)
    opts = MinimizeOptions(max_iterations=20000, rng_seed=0,
                           perturbation_amplitude=1e-3 / (2.0 * np.pi))
    res = relax(mesh, x0, p, opts)
    pol = polish(mesh, res.x, res.params, iterations=300)
    entry = pol.gradient_norm_history[0]
    floor = pol.gradient_norm_history.min()
    assert pol.status == "polished"
    assert pol.converged
    assert floor < 1e-3 * entry
    assert planarity(mesh, pol.x) < 1e-12
