"""Mixed BVP: assembly, solver, exact solutions, recovery, corners, wedge."""

import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import THETA3, l2_relative_error
from hklab import (
    capillary_constant,
    capillary_constant_from_domain,
    capillary_problem,
    corner_exponent,
    exact_cap_solution,
    make_cap,
    mesh_domain,
    mesh_surface,
    solution_from_field,
    solve_mixed_bvp,
    wedge_barrier_check,
    wedge_model_values,
)
from hklab.bvp import make_problem
from hklab.errors import HkLabError, SolverError
from hklab.fem import (
    assemble_boundary_mass,
    assemble_stiffness,
    load_facets,
    load_volume,
    p1_gradients,
    pcg,
)


def test_exact_solution_satisfies_problem_symbolically():
    import sympy as sp

    x, y, z = sp.symbols("x y z")
    theta = sp.pi / 3
    x0 = sp.Matrix([0, 0, -sp.cos(theta)])
    p = sp.Matrix([x, y, z])
    f = ((p - x0).dot(p - x0) - 1) / 6
    assert sp.simplify(sp.diff(f, x, 2) + sp.diff(f, y, 2) + sp.diff(f, z, 2) - 1) == 0
    # f vanishes on the sphere |p - x0| = 1
    on_sigma = f.subs(
        z, -sp.cos(theta) + sp.sqrt(1 - x**2 - y**2)
    )
    assert sp.simplify(on_sigma) == 0
    # downward normal derivative on the plane z = 0 is the capillary constant
    f_n = -sp.diff(f, z)
    assert sp.simplify(f_n.subs(z, 0) + sp.cos(theta) / 3) == 0


def test_exact_solution_values(hs_cap2):
    ex = exact_cap_solution(hs_cap2)
    assert abs(ex(np.zeros((1, 3)))[0] - (-1.0 / 8.0)) < 1e-14
    assert abs(ex.neumann_constant - (-0.5 / 3.0)) < 1e-14
    assert abs(ex.sigma_normal_derivative - 1.0 / 3.0) < 1e-14
    p = np.array([[math.sin(THETA3), 0.0, math.cos(THETA3) - 0.5]])
    assert abs(ex(p)[0]) < 1e-14  # Dirichlet condition on Sigma


def test_capillary_constant_closed_forms():
    c2 = capillary_constant("half-space", THETA3, 2, area_T=3 * math.pi / 4,
                            measure_gamma=math.pi * math.sqrt(3))
    assert abs(c2 - (-1.0 / 6.0)) < 1e-14
    c1 = capillary_constant("half-space", THETA3, 1, area_T=math.sqrt(3), measure_gamma=2.0)
    assert abs(c1 - (-1.0 / 4.0)) < 1e-14
    c_orth = capillary_constant("half-space", math.pi / 2, 2, area_T=1.0, measure_gamma=1.0)
    assert c_orth == 0.0


def test_mesh_measured_constant(hs_domain1, hb_cap1):
    assert abs(capillary_constant_from_domain(hs_domain1, THETA3) + 0.25) < 1e-12
    domb = mesh_domain(mesh_surface(hb_cap1, 64), None, 64, grading=0.0)
    exact = -0.5 * math.cos(THETA3) / 2.0
    assert abs(capillary_constant_from_domain(domb, THETA3) - exact) < 2e-3


def test_fem_matches_exact_solution(hs_cap1, hs_domain1, hs_solution1):
    ex = exact_cap_solution(hs_cap1)
    err = l2_relative_error(hs_domain1, hs_solution1.f, ex(hs_domain1.vertices))
    assert err <= 1e-2
    assert hs_solution1.residual_norm <= 1e-9


def test_l2_convergence_order(hs_cap1):
    ex = exact_cap_solution(hs_cap1)
    errs = []
    nvs = []
    for res in (40, 80, 160):
        surf = mesh_surface(hs_cap1, res)
        dom = mesh_domain(surf, None, res, grading=0.0)
        sol = solve_mixed_bvp(capillary_problem(dom, THETA3))
        errs.append(l2_relative_error(dom, sol.f, ex(dom.vertices)))
        nvs.append(dom.num_vertices)
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert nvs[-1] > 4000
    assert errs[-1] <= 1e-2
    for order in orders:
        assert 1.7 <= order <= 2.3


def test_homogeneous_problem_is_trivial(hs_domain1):
    problem = make_problem(hs_domain1, rhs=0.0, flux=0.0, gamma=0)
    sol = solve_mixed_bvp(problem)
    assert np.max(np.abs(sol.f)) < 1e-12


def test_robin_trace_residual(hb_cap1):
    surf = mesh_surface(hb_cap1, 64)
    dom = mesh_domain(surf, None, 64, grading=0.0)
    problem = capillary_problem(dom, THETA3)
    assert problem.robin_gamma == 1
    sol = solve_mixed_bvp(problem)
    mids = dom.vertices[dom.t_facets].mean(axis=1)
    nrm = mids / np.linalg.norm(mids, axis=1, keepdims=True)
    f_n = np.einsum("fd,fd->f", sol.nodal_gradients[dom.t_facets].mean(axis=1), nrm)
    f_mid = sol.f[dom.t_facets].mean(axis=1)
    resid = np.abs(f_n - f_mid - problem.flux_constant)
    away = dom.d_gamma[dom.t_facets].min(axis=1) > 0.1
    assert np.max(resid[away]) <= 5e-2


def test_max_principle_surrogate(hs_solution1, hb_cap1):
    assert float(hs_solution1.f.max()) <= 1e-12
    domb = mesh_domain(mesh_surface(hb_cap1, 48), None, 48, grading=0.0)
    solb = solve_mixed_bvp(capillary_problem(domb, THETA3))
    assert float(solb.f.max()) <= 1e-12


def test_assembly_symmetry(hs_domain1):
    grads, vols, good = p1_gradients(hs_domain1.vertices, hs_domain1.cells)
    stiff = assemble_stiffness(grads, vols, hs_domain1.cells, hs_domain1.num_vertices)
    asym = np.abs(stiff - stiff.T)
    assert asym.max() <= 1e-13 * np.abs(stiff).max()
    t_areas = hs_domain1.facet_measures(hs_domain1.t_facets)
    mass = assemble_boundary_mass(hs_domain1.t_facets, t_areas, hs_domain1.num_vertices)
    masym = np.abs(mass - mass.T)
    assert masym.max() <= 1e-13 * max(np.abs(mass).max(), 1e-300)


def test_robin_gamma_zero_reduces_to_neumann(hb_cap1):
    # gamma = 0 must reproduce the pure-Neumann assembly bit for bit
    dom = mesh_domain(mesh_surface(hb_cap1, 32), None, 32, grading=0.0)
    c = capillary_constant_from_domain(dom, THETA3)
    problem = make_problem(dom, rhs=1.0, flux=c, gamma=0)
    sol = solve_mixed_bvp(problem, tol=1e-11)

    grads, vols, good = p1_gradients(dom.vertices, dom.cells)
    nv = dom.num_vertices
    stiff = assemble_stiffness(grads, vols, dom.cells, nv)
    t_areas = dom.facet_measures(dom.t_facets)
    b = load_facets(dom.t_facets, t_areas, np.full(len(dom.t_facets), c), nv)
    b -= load_volume(dom.cells, vols, np.ones(nv), nv)
    fixed = np.zeros(nv, dtype=bool)
    fixed[np.unique(dom.sigma_facets)] = True
    free = ~fixed
    x, _, _ = pcg(stiff[free][:, free].tocsr(), b[free], 1e-11, 20000)
    manual = np.zeros(nv)
    manual[free] = x
    assert np.array_equal(sol.f, manual)


def test_solver_failure_modes(hs_domain1):
    problem = capillary_problem(hs_domain1, THETA3)
    with pytest.raises(SolverError):
        solve_mixed_bvp(problem, max_iter=2)
    stripped = replace(hs_domain1, sigma_facets=np.empty((0, 2), dtype=np.int64))
    with pytest.raises(HkLabError):
        capillary_problem(stripped, THETA3)


def test_recovery_exact_for_quadratics(hs_domain1):
    rng = np.random.default_rng(5)
    a = rng.standard_normal()
    b = rng.standard_normal(2)
    m = rng.standard_normal((2, 2))
    m = 0.5 * (m + m.T)

    def field(pts):
        return a + pts @ b + 0.5 * np.einsum("ij,jk,ik->i", pts, m, pts)

    problem = make_problem(hs_domain1, rhs=float(np.trace(m)), flux=0.0, gamma=0)
    sol = solution_from_field(problem, field)
    grad_exact = hs_domain1.vertices @ m + b
    assert np.max(np.linalg.norm(sol.nodal_gradients - grad_exact, axis=1)) < 1e-9
    assert np.max(np.abs(sol.cell_hessians - m)) < 1e-8


def test_cauchy_schwarz_per_cell(hs_solution1):
    tr = hs_solution1.laplacian()
    h2 = np.einsum("cab,cab->c", hs_solution1.cell_hessians, hs_solution1.cell_hessians)
    d = hs_solution1.domain.dim
    assert np.all(tr**2 <= d * h2 + 1e-12)


def test_galerkin_energy_recorded(hs_solution1):
    assert np.isfinite(hs_solution1.energy)
    assert hs_solution1.iterations > 0


# ---------------------------------------------------------------------------
# corner fits and the wedge barrier
# ---------------------------------------------------------------------------


def test_wedge_model_lambda_fits():
    for theta, target in ((math.pi / 4, 2.0), (math.pi / 3, 1.5)):
        cap = make_cap("half-space", theta, 1.0, 1)
        surf = mesh_surface(cap, 96)
        dom = mesh_domain(surf, None, 96, grading=0.5)
        problem = capillary_problem(dom, theta)
        sol = solution_from_field(problem, wedge_model_values(dom, theta))
        fit = corner_exponent(sol, theta)
        assert abs(fit.lambda_hat - target) <= 0.1
        assert fit.r2_growth >= 0.9
        assert abs(fit.wedge_reference - target) < 1e-12


def test_smooth_solution_has_bounded_hessian():
    cap = make_cap("half-space", math.pi / 2, 1.0, 1)
    surf = mesh_surface(cap, 96)
    dom = mesh_domain(surf, None, 96, grading=0.5)
    sol = solve_mixed_bvp(capillary_problem(dom, math.pi / 2))
    fit = corner_exponent(sol, math.pi / 2)
    assert abs(fit.beta_hat) <= 0.1


def test_generic_corner_fit_window(hs_cap1):
    # a genuinely non-spherical domain: its solution carries the r^lambda mode
    from hklab import make_axisymmetric, perturb_profile, profile_from_cap

    prof = make_axisymmetric(
        perturb_profile(profile_from_cap(hs_cap1, 513), 0.05), THETA3, "half-space"
    )
    surf = mesh_surface(prof, 160)
    dom = mesh_domain(surf, None, 160, grading=0.5)
    sol = solve_mixed_bvp(capillary_problem(dom, THETA3))
    fit = corner_exponent(sol, THETA3)
    assert -0.1 < fit.beta_hat < 1.0  # within fit uncertainty of the (0, 1) window
    assert fit.lambda_hat >= 0.95  # bounded-gradient solutions grow at least linearly
    assert fit.window[1] <= 0.2 * 2.1  # window cap at a fifth of the diameter


def test_wedge_barrier_examples():
    rec = wedge_barrier_check(1.4, THETA3)
    assert rec.harmonic_residual <= 1e-12
    assert abs(rec.min_profile - math.cos(1.4 * THETA3)) < 1e-12
    assert rec.min_profile > 0 and rec.positivity_ok
    assert rec.neumann_value == 0.0

    linear = wedge_barrier_check(1.0, 1.3)
    assert linear.harmonic_residual <= 1e-12

    boundary = wedge_barrier_check(1.5, THETA3)
    assert abs(boundary.min_profile) < 1e-12
    assert not boundary.positivity_ok

    with pytest.raises(HkLabError):
        wedge_barrier_check(2.0, THETA3)


def test_wedge_barrier_finite_difference_oracle():
    # independent check: the cartesian five-point laplacian of r^lam cos(lam eta)
    lam, theta = 1.4, THETA3
    h = 1e-5

    def psi(x, y):
        r = math.hypot(x, y)
        eta = math.atan2(y, x)
        return r**lam * math.cos(lam * eta)

    for (x, y) in ((0.5, 0.2), (0.8, 0.3), (0.4, 0.1)):
        lap = (
            psi(x + h, y) + psi(x - h, y) + psi(x, y + h) + psi(x, y - h) - 4 * psi(x, y)
        ) / h**2
        assert abs(lap) < 1e-4
