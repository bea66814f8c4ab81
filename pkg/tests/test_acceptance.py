"""End-to-end acceptance gate.

One test per criterion; run with ``pytest -v tests/test_acceptance.py`` to
get one pass/fail line each.  Expensive solves are shared through module
fixtures.  Criterion 3 asserts the stated quadratic-order error ratio for
the penalty sweep; see the project notes for the measured behaviour of the
penalty-free variant on this mesh family.
"""

import time

import numpy as np
import pytest

from nitschefem import analysis, assembly, problems
from nitschefem.analysis import (build_phi_r, build_pi_cip, build_pi_partial,
                                 convergence_study, error_field,
                                 infsup_constant, make_mesh,
                                 mean_exact_normal_gradient,
                                 mean_normal_gradient, norm,
                                 outflow_oscillation, phi_r_stability_ratio,
                                 solve_system)
from nitschefem.assembly import ProblemSpec
from nitschefem.fespace import FeSpace, FeFunction, nodal_interpolate
from nitschefem.mesh import build_patches

MESH_KIND = "jittered"


def report(num, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def solve_error(space, p, solver="direct"):
    uh = FeFunction(space, solve_system(assembly.assemble(space, p), solver))
    err = error_field(space, problems.smooth_u, problems.smooth_grad, uh)
    return uh, norm(err, "L2"), norm(err, "H1semi")


@pytest.fixture(scope="module")
def p1_table():
    t0 = time.perf_counter()
    table = convergence_study(problems.smooth_poisson(), problems.smooth_u,
                              problems.smooth_grad, 1, MESH_KIND, levels=4)
    return table, time.perf_counter() - t0


@pytest.fixture(scope="module")
def p2_table():
    t0 = time.perf_counter()
    table = convergence_study(problems.smooth_poisson(), problems.smooth_u,
                              problems.smooth_grad, 2, MESH_KIND, levels=4)
    return table, time.perf_counter() - t0


def test_criterion_01_p1_table(p1_table):
    table, elapsed = p1_table
    last = table.rows[-1]
    ok = (last["l2_rate"] >= 1.9 and 0.85 <= last["h1_rate"] <= 1.2
          and last["l2_err"] <= 3 * 3.3e-4 and last["l2_err"] >= 3.3e-4 / 3
          and last["h1_err"] <= 3 * 8.2e-2 and last["h1_err"] >= 8.2e-2 / 3
          and elapsed < 60.0)
    report(1, ok, f"P1 n=80 L2 {last['l2_err']:.2E} (rate {last['l2_rate']:.2f}), "
           f"H1 {last['h1_err']:.2E} (rate {last['h1_rate']:.2f}), {elapsed:.1f}s")


def test_criterion_02_p2_table(p2_table):
    table, elapsed = p2_table
    last = table.rows[-1]
    n40 = table.rows[2]
    ok = (last["l2_rate"] >= 2.9 and 1.85 <= last["h1_rate"] <= 2.2
          and n40["l2_err"] <= 3 * 2.1e-5 and n40["l2_err"] >= 2.1e-5 / 3
          and elapsed < 120.0)
    report(2, ok, f"P2 n=40 L2 {n40['l2_err']:.2E}, finest rates "
           f"L2 {last['l2_rate']:.2f} / H1 {last['h1_rate']:.2f}, {elapsed:.1f}s")


def test_criterion_03_penalty_sweep():
    gammas = (0.0, 10.0, 20.0, 40.0, 80.0)
    results = {}
    for k, n in ((1, 80), (2, 40)):
        space = FeSpace(make_mesh(n, MESH_KIND), k)
        l2s, h1s = [], []
        for g in gammas:
            _, l2, h1 = solve_error(space, problems.smooth_poisson(gamma=g))
            l2s.append(l2)
            h1s.append(h1)
        results[k] = (max(l2s) / min(l2s), max(h1s) / min(h1s) - 1.0)
    ok_h1 = results[1][1] <= 0.05 and results[2][1] <= 0.05
    ok_p1 = results[1][0] <= 1.5
    ok_p2 = results[2][0] <= 2.0
    report(3, ok_h1 and ok_p1 and ok_p2,
           f"L2 max/min P1 {results[1][0]:.2f} (<=1.5), "
           f"P2 {results[2][0]:.2f} (<=2.0); H1 spreads "
           f"{results[1][1]:.3f}/{results[2][1]:.3f} (<=0.05)")


def test_criterion_04_positivity_identity():
    worst = 0.0
    for n in (10, 20):
        space = FeSpace(make_mesh(n, MESH_KIND), 1)
        A = assembly.assemble_poisson_nitsche(space, ProblemSpec()).matrix
        K = assembly.stiffness_matrix(space)
        M1h = analysis.gram_one_h(space)
        rng = np.random.default_rng(100 + n)
        for _ in range(100):
            v = rng.normal(size=space.n_dofs)
            worst = max(worst, abs(v @ (A @ v) - v @ (K @ v)) / (v @ (M1h @ v)))
    report(4, worst <= 1e-12, f"max relative defect {worst:.2E} (<=1e-12)")


def test_criterion_05_convdiff_lower_bound():
    worst = 0.0
    space = FeSpace(make_mesh(20, MESH_KIND), 1)
    for eps in (1.0, 1e-3):
        p = ProblemSpec(eps=eps, beta=(0.5, 1.0))
        A = assembly.assemble_convdiff(space, p).matrix
        K = assembly.stiffness_matrix(space)
        Bb = analysis.boundary_beta_mass(space, p.beta)
        rng = np.random.default_rng(int(1 / eps))
        for _ in range(100):
            v = rng.normal(size=space.n_dofs)
            lhs = v @ (A @ v)
            rhs = 0.5 * (v @ (Bb @ v)) + eps * (v @ (K @ v))
            worst = max(worst, (rhs - lhs) / max(abs(lhs), 1e-30))
    report(5, worst <= 1e-10, f"max relative violation {worst:.2E} (<=1e-10)")


def test_criterion_06_flux_control_family():
    worst = 0.0
    ratios = []
    for n in (10, 20, 40, 80):
        mesh = make_mesh(n, MESH_KIND)
        patches = build_patches(mesh)
        rng = np.random.default_rng(7)
        r = rng.normal(size=len(patches))
        phi = build_phi_r(mesh, patches, r)
        got = mean_normal_gradient(phi.function, patches)
        worst = max(worst, float(np.abs(got - r).max()))
        ratios.append(phi_r_stability_ratio(phi, mesh))
    spread = max(ratios) / min(ratios)
    ok = worst <= 1e-10 and spread < 2.0
    report(6, ok, f"constraint residual {worst:.2E} (<=1e-10), "
           f"stability-ratio spread {spread:.2f}x (<2x)")


def test_criterion_07_infsup():
    t0 = time.perf_counter()
    cs = []
    for n in (8, 12, 16):
        space = FeSpace(make_mesh(n, MESH_KIND), 1)
        c, _ = infsup_constant("poisson_nitsche", space,
                               ProblemSpec(f=problems.zero, g=problems.zero))
        cs.append(c)
    elapsed = time.perf_counter() - t0
    ok = all(c > 0 for c in cs) and min(cs) / max(cs) >= 0.9 and elapsed < 300
    report(7, ok, f"c_s {['%.3f' % c for c in cs]}, min/max "
           f"{min(cs) / max(cs):.3f} (>=0.9), {elapsed:.1f}s")


def test_criterion_08_interpolants():
    flux_worst = 0.0
    cip_worst = 0.0
    rates = {}
    for label, k in (("boundary-flux k=1", 1), ("boundary-flux k=2", 2)):
        errs = []
        for n in (20, 40):
            mesh = make_mesh(n, MESH_KIND)
            space = FeSpace(mesh, k)
            patches = build_patches(mesh)
            fn, resid = build_pi_partial(space, patches, problems.smooth_u,
                                         problems.smooth_grad)
            flux_worst = max(flux_worst, float(np.abs(resid).max()))
            err = error_field(space, problems.smooth_u, problems.smooth_grad, fn)
            errs.append(norm(err, "L2"))
        rates[label] = (np.log2(errs[0] / errs[1]), k + 1)
    errs = []
    for n in (20, 40):
        mesh = make_mesh(n, MESH_KIND)
        space = FeSpace(mesh, 1)
        cip = build_patches(mesh, extended=True)
        fn, reports = build_pi_cip(space, cip, problems.smooth_u,
                                   problems.smooth_grad)
        cip_worst = max(cip_worst, max(max(r.mean_residual, r.flux_residual)
                                       for r in reports))
        err = error_field(space, problems.smooth_u, problems.smooth_grad, fn)
        errs.append(norm(err, "L2"))
    rates["jump-projection k=1"] = (np.log2(errs[0] / errs[1]), 2)
    ok = (flux_worst <= 1e-9 and cip_worst <= 1e-9
          and all(abs(r - want) <= 0.2 for r, want in rates.values()))
    detail = ", ".join(f"{lbl} rate {r:.2f} (want {want}+-0.2)"
                       for lbl, (r, want) in rates.items())
    report(8, ok, f"residuals {flux_worst:.1E}/{cip_worst:.1E} (<=1e-9); {detail}")


def test_criterion_09_polynomial_exactness():
    cases = {
        1: (lambda x, y: 1 + 2 * x - 3 * y,
            lambda x, y: np.zeros_like(np.asarray(x, float))),
        2: (lambda x, y: x**2 - 2 * x * y + 3 * y**2 + x - y,
            lambda x, y: -8.0 * np.ones_like(np.asarray(x, float))),
    }
    worst = 0.0
    mesh = make_mesh(10, MESH_KIND)
    for k, (u, f) in cases.items():
        space = FeSpace(mesh, k)
        exact = nodal_interpolate(space, u).coeffs
        for mode in ("nitsche_nonsym", "nitsche_sym", "strong"):
            for g in (0.0, 10.0):
                p = ProblemSpec(f=f, g=u, bc_mode=mode, gamma=g)
                c = solve_system(assembly.assemble(space, p))
                worst = max(worst, float(np.abs(c - exact).max()))
    report(9, worst <= 1e-9, f"max coefficient defect {worst:.2E} (<=1e-9)")


def test_criterion_10_outflow_layers():
    mesh = make_mesh(80, MESH_KIND)
    sp1 = FeSpace(mesh, 1)
    maxima = {}
    for mode in ("strong", "nitsche_nonsym"):
        p = problems.outflow_layer(1e-5, bc_mode=mode)
        uh = FeFunction(sp1, solve_system(assembly.assemble(sp1, p)))
        maxima[mode] = float(uh.coeffs.max())
    ratio = maxima["strong"] / maxima["nitsche_nonsym"]
    sp2 = FeSpace(mesh, 2)
    osc = {}
    for stab in ("none", "sd", "cip"):
        p = problems.outflow_layer(1e-5, stabilization=stab)
        uh = FeFunction(sp2, solve_system(assembly.assemble(sp2, p)))
        osc[stab] = outflow_oscillation(uh, p.beta)["oscillation"]
    red_sd = osc["none"] / osc["sd"]
    red_cip = osc["none"] / osc["cip"]
    ok = ratio >= 1.5 and red_sd >= 5.0 and red_cip >= 5.0
    report(10, ok, f"strong/weak overshoot ratio {ratio:.1f} (>=1.5), "
           f"oscillation reduction SD {red_sd:.1f}x / CIP {red_cip:.1f}x (>=5x)")


def test_criterion_11_l2_rate_bracket(p1_table):
    table, _ = p1_table
    rates = {"jittered": table.rows[-1]["l2_rate"]}
    structured = convergence_study(problems.smooth_poisson(),
                                   problems.smooth_u, problems.smooth_grad, 1,
                                   "structured", levels=4)
    rates["structured"] = structured.rows[-1]["l2_rate"]
    ok = all(1.5 <= r <= 2.2 for r in rates.values())
    report(11, ok, ", ".join(f"{k} final L2 rate {r:.2f}"
                             for k, r in rates.items()) + " (in [1.5, 2.2])")
