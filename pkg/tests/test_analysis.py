import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nitschefem import analysis, assembly, problems
from nitschefem.analysis import (ConvergenceTable, build_phi_r, build_pi_cip,
                                 build_pi_partial, continuity_ratio,
                                 convergence_study, error_field,
                                 infsup_constant, l2_projection, make_mesh,
                                 mean_exact_normal_gradient,
                                 mean_normal_gradient, norm, observed_rates,
                                 outflow_oscillation, phi_r_stability_ratio)
from nitschefem.assembly import ProblemSpec
from nitschefem.fespace import FeSpace, FeFunction, nodal_interpolate
from nitschefem.mesh import build_patches, build_structured


def test_norm_oracles_constant():
    n = 10
    mesh = build_structured(n)
    space = FeSpace(mesh, 1)
    one = nodal_interpolate(space, problems.one)
    assert abs(norm(one, "L2") - 1.0) < 1e-12
    assert norm(one, "H1semi") < 1e-12
    # all boundary edges have length 1/n, owning elements h_K = sqrt(2)/n
    expect = np.sqrt(4 * n / np.sqrt(2.0))
    assert abs(norm(one, "half_h_boundary") - expect) < 1e-10


def test_norm_oracles_linear(mesh10):
    space = FeSpace(mesh10, 1)
    u = nodal_interpolate(space, lambda x, y: 3 * x - 4 * y)
    assert abs(norm(u, "H1semi") - 5.0) < 1e-12
    h1h = norm(u, "one_h")
    assert abs(h1h**2 - (25.0 + norm(u, "half_h_boundary")**2)) < 1e-8


def test_norm_validation(mesh10):
    space = FeSpace(mesh10, 1)
    u = nodal_interpolate(space, problems.one)
    with pytest.raises(ValueError):
        norm(u, "Linf")
    with pytest.raises(ValueError):
        norm(u, "one_h_beta")  # needs problem data


def test_one_h_beta_consistency(mesh10):
    space = FeSpace(mesh10, 1)
    u = nodal_interpolate(space, lambda x, y: x * (1 - x))
    p = ProblemSpec(eps=2.0, beta=(0.5, 1.0))
    val = norm(u, "one_h_beta", p)
    base = norm(u, "one_h")
    assert val >= np.sqrt(2.0) * base - 1e-12


def test_error_field_of_interpolant_is_small(mesh20):
    space = FeSpace(mesh20, 2)
    ih = nodal_interpolate(space, problems.smooth_u)
    err = error_field(space, problems.smooth_u, problems.smooth_grad, ih)
    assert norm(err, "L2") < 1e-3
    assert norm(err, "H1semi") < 0.1


@settings(max_examples=25, deadline=None)
@given(p=st.floats(0.5, 4.0), c=st.floats(0.1, 10.0))
def test_observed_rates_recover_exponent(p, c):
    hs = [0.1 / 2**i for i in range(4)]
    errors = [c * h**p for h in hs]
    rates = observed_rates(errors, hs)
    assert rates[0] is None
    assert all(abs(r - p) < 1e-10 for r in rates[1:])


@pytest.mark.parametrize("kind", ["structured", "jittered"])
def test_phi_r_constraint(kind):
    mesh = make_mesh(20, kind)
    patches = build_patches(mesh)
    rng = np.random.default_rng(11)
    r = rng.normal(size=len(patches))
    phi = build_phi_r(mesh, patches, r)
    got = mean_normal_gradient(phi.function, patches)
    assert np.abs(got - r).max() < 1e-10
    assert phi.c_xi_probe > 0
    assert phi_r_stability_ratio(phi, mesh) > 0
    # vanishes at nodes of elements with all vertices on the boundary
    corner_nodes = {int(v) for t in mesh.corner_triangles()
                    for v in mesh.triangles[t]}
    assert np.abs(phi.function.coeffs[sorted(corner_nodes)]).max() == 0.0


def test_phi_r_rejects_wrong_length(mesh10):
    patches = build_patches(mesh10)
    with pytest.raises(ValueError):
        build_phi_r(mesh10, patches, np.zeros(len(patches) + 1))


def test_mean_exact_normal_gradient_linear(mesh10):
    space = FeSpace(mesh10, 1)
    patches = build_patches(mesh10)
    grads = mean_exact_normal_gradient(lambda x, y: (2.0 + 0 * x, -1.0 + 0 * y),
                                       space, patches)
    side_normals = {0: (0, -1), 1: (1, 0), 2: (0, 1), 3: (-1, 0)}
    for patch, g in zip(patches, grads):
        nx, ny = side_normals[patch.side]
        assert abs(g - (2.0 * nx - ny)) < 1e-12


@pytest.mark.parametrize("k", [1, 2])
def test_pi_partial_flux_matching(k, mesh20):
    space = FeSpace(mesh20, k)
    patches = build_patches(mesh20)
    fn, resid = build_pi_partial(space, patches, problems.smooth_u,
                                 problems.smooth_grad)
    assert np.abs(resid).max() < 1e-9
    got = mean_normal_gradient(fn, patches)
    want = mean_exact_normal_gradient(problems.smooth_grad, space, patches)
    assert np.abs(got - want).max() < 1e-10


def test_pi_partial_reproduces_linears(mesh10):
    space = FeSpace(mesh10, 1)
    patches = build_patches(mesh10)
    u = lambda x, y: 2 * x - y + 1
    gu = lambda x, y: (2.0 + 0 * x, -1.0 + 0 * y)
    fn, _ = build_pi_partial(space, patches, u, gu)
    exact = nodal_interpolate(space, u)
    assert np.abs(fn.coeffs - exact.coeffs).max() < 1e-11


def test_l2_projection_of_constant(mesh10):
    space = FeSpace(mesh10, 1)
    ph = l2_projection(space, problems.one)
    assert np.abs(ph.coeffs - 1.0).max() < 1e-10


def test_pi_cip_constraints_and_signs(mesh20):
    space = FeSpace(mesh20, 1)
    cip = build_patches(mesh20, extended=True)
    fn, reports = build_pi_cip(space, cip, problems.smooth_u,
                               problems.smooth_grad)
    for rep in reports:
        assert rep.mean_residual < 1e-9
        assert rep.flux_residual < 1e-9
        assert rep.sign_pattern_ok
        assert rep.det > 0
    got = mean_normal_gradient(fn, cip)
    want = mean_exact_normal_gradient(problems.smooth_grad, space, cip)
    assert np.abs(got - want).max() < 1e-10


def test_pi_cip_rejects_p2(mesh10):
    space = FeSpace(mesh10, 2)
    cip = build_patches(mesh10, extended=True)
    with pytest.raises(ValueError):
        build_pi_cip(space, cip, problems.smooth_u, problems.smooth_grad)


def test_infsup_positive_and_norm_bounded(mesh10s):
    space = FeSpace(mesh10s, 1)
    p = ProblemSpec(f=problems.zero, g=problems.zero)
    cs, v = infsup_constant("poisson_nitsche", space, p)
    assert 0 < cs <= 1.0 + 1e-10
    assert v.shape == (space.n_dofs,)
    cs2, _ = infsup_constant("convdiff", space,
                             ProblemSpec(eps=1e-3, beta=(0.5, 1.0),
                                         f=problems.zero, g=problems.zero))
    assert cs2 > 0
    with pytest.raises(ValueError):
        infsup_constant("stokes", space, p)


def test_infsup_dense_cap(mesh20):
    space = FeSpace(mesh20, 2)
    with pytest.raises(Exception):
        infsup_constant("poisson_nitsche", space,
                        ProblemSpec(f=problems.zero, g=problems.zero),
                        dense_cap=100)


def test_continuity_ratio_finite(mesh10):
    space = FeSpace(mesh10, 1)
    system = assembly.assemble(space, problems.smooth_poisson())
    uh = FeFunction(space, analysis.solve_system(system))
    probes = [nodal_interpolate(space, lambda x, y: np.sin(x + 2 * y)),
              nodal_interpolate(space, lambda x, y: x * y)]
    ratio = continuity_ratio(space, problems.smooth_u, problems.smooth_grad,
                             uh, probes)
    assert np.isfinite(ratio)


def test_convergence_table_csv_layout():
    p = problems.smooth_poisson()
    table = convergence_study(p, problems.smooth_u, problems.smooth_grad, 1,
                              mesh_kind="structured", levels=2, n0=5)
    text = table.to_csv()
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert lines[0] == "n,h,dofs,l2_err,l2_rate,h1_err,h1_rate"
    first = lines[1].split(",")
    assert first[0] == "5" and first[4] == ""   # no rate on the first row
    assert len(lines) == 3


def test_convergence_study_exact_flag():
    # an exactly representable solution collapses the rate columns
    u = lambda x, y: 1 + x - 2 * y
    gu = lambda x, y: (1.0 + 0 * x, -2.0 + 0 * y)
    p = ProblemSpec(f=problems.zero, g=u, bc_mode="strong")
    table = convergence_study(p, u, gu, 1, mesh_kind="structured",
                              levels=2, n0=4)
    assert table.metadata["exact"]
    assert all(r["l2_rate"] is None for r in table.rows)
    assert "exact=True" in table.to_csv()


def test_convergence_study_validation():
    with pytest.raises(ValueError):
        convergence_study(problems.smooth_poisson(), problems.smooth_u,
                          problems.smooth_grad, 1, levels=0)
    with pytest.raises(ValueError):
        make_mesh(10, "voronoi")


def test_outflow_oscillation_smooth_vs_layer(mesh20):
    space = FeSpace(mesh20, 1)
    linear = nodal_interpolate(space, lambda x, y: x + y)
    rep = outflow_oscillation(linear, (0.5, 1.0))
    assert rep["oscillation"] < 1e-12
    p = problems.outflow_layer(1e-5, bc_mode="strong")
    uh = FeFunction(space, analysis.solve_system(assembly.assemble(space, p)))
    rep2 = outflow_oscillation(uh, p.beta)
    assert rep2["oscillation"] > rep["oscillation"]
    assert rep2["max"] > 1.0
