"""Self-check suite aggregating the construction-level invariants.

Each check returns a measured residual so failures are diagnosable; the
CLI `verify` subcommand prints one line per check.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from . import analysis, assembly, problems
from .assembly import ProblemSpec
from .fespace import FeFunction, FeSpace, quadrature_for
from .mesh import Mesh, build_patches

PASS, FAIL, SKIP = "PASS", "FAIL", "SKIP"


@dataclass
class CheckResult:
    name: str
    status: str
    residual: float | None = None
    detail: str = ""

    def line(self) -> str:
        res = "" if self.residual is None else f" residual={self.residual:.3e}"
        det = f" ({self.detail})" if self.detail else ""
        return f"{self.status:4s} {self.name}{res}{det}"


def _check(name, residual, tol, detail="") -> CheckResult:
    status = PASS if residual <= tol else FAIL
    return CheckResult(name, status, float(residual), detail)


def check_quadrature() -> list[CheckResult]:
    area = quadrature_for("area")
    worst = 0.0
    for a in range(7):
        for b in range(7 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            got = float(area.weights @ (area.points[:, 0]**a * area.points[:, 1]**b))
            worst = max(worst, abs(got - exact))
    edge = quadrature_for("edge")
    worst_e = 0.0
    for p in range(8):
        got = float(edge.weights @ edge.points**p)
        worst_e = max(worst_e, abs(got - 1.0 / (p + 1)))
    return [_check("quadrature_area_degree6", worst, 1e-13),
            _check("quadrature_edge_degree7", worst_e, 1e-15)]


def check_mesh(mesh: Mesh) -> list[CheckResult]:
    edges = set()
    for tri in mesh.triangles:
        for k in range(3):
            edges.add(tuple(sorted((int(tri[k]), int(tri[(k + 1) % 3])))))
    euler = mesh.n_vertices - len(edges) + mesh.n_triangles
    perim = abs(mesh.boundary_edge_lengths().sum() - 4.0)
    return [_check("mesh_euler_relation", abs(euler - 1), 0),
            _check("boundary_perimeter", perim, 1e-12)]


def check_patches(mesh: Mesh, patches) -> list[CheckResult]:
    out = []
    for side in range(4):
        total = sum(p.measure for p in patches if p.side == side)
        out.append(_check(f"patch_partition_side{side}", abs(total - 1.0), 1e-12))
    min_inner = min(len(p.interior_vertices) for p in patches)
    out.append(CheckResult("patch_inner_nodes", PASS if min_inner >= 4 else FAIL,
                           float(min_inner), "minimum interior nodes per face"))
    h = mesh.stats().h
    c1 = min(p.measure for p in patches) / h
    c2 = max(p.measure for p in patches) / h
    out.append(CheckResult("patch_size_bounds", PASS if c1 > 0 else FAIL, c1,
                           f"c1={c1:.3f} c2={c2:.3f} (recorded)"))
    return out


def check_phi_r(mesh: Mesh, patches, seed: int = 7) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    r = rng.normal(size=len(patches))
    phi = analysis.build_phi_r(mesh, patches, r)
    got = analysis.mean_normal_gradient(phi.function, patches)
    resid = float(np.max(np.abs(got - r)))
    ratio = analysis.phi_r_stability_ratio(phi, mesh)
    return [_check("phi_r_mean_flux_constraint", resid, 1e-10),
            CheckResult("phi_r_stability_ratio", PASS, ratio,
                        f"C_Xi probe={phi.c_xi_probe:.3f} (recorded)")]


def check_positivity(space: FeSpace, seed: int = 11, n_vectors: int = 20
                     ) -> CheckResult:
    p = ProblemSpec(bc_mode="nitsche_nonsym", gamma=0.0, f=problems.zero,
                    g=problems.zero)
    A = assembly.assemble_poisson_nitsche(space, p).matrix
    K = assembly.stiffness_matrix(space)
    M1h = analysis.gram_one_h(space)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_vectors):
        v = rng.normal(size=space.n_dofs)
        worst = max(worst, abs(v @ (A @ v) - v @ (K @ v)) / (v @ (M1h @ v)))
    return _check("nitsche_boundary_cancellation", worst, 1e-12)


def check_convdiff_positivity(space: FeSpace, eps: float = 1e-3, seed: int = 13,
                              n_vectors: int = 20) -> CheckResult:
    p = ProblemSpec(eps=eps, beta=(0.5, 1.0), sigma=0.0, f=problems.zero,
                    g=problems.zero)
    A = assembly.assemble_convdiff(space, p).matrix
    K = assembly.stiffness_matrix(space)
    Bb = analysis.boundary_beta_mass(space, p.beta)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_vectors):
        v = rng.normal(size=space.n_dofs)
        lhs = v @ (A @ v)
        rhs = 0.5 * (v @ (Bb @ v)) + eps * (v @ (K @ v))
        worst = max(worst, (rhs - lhs) / max(abs(lhs), 1.0))
    return _check("convdiff_quadratic_lower_bound", max(worst, 0.0), 1e-10)


def check_pi_partial(space: FeSpace, patches) -> CheckResult:
    _, resid = analysis.build_pi_partial(space, patches, problems.smooth_u,
                                         problems.smooth_grad)
    return _check("pi_partial_flux_orthogonality", float(np.max(np.abs(resid))), 1e-9)


def check_pi_cip(space: FeSpace, cip_patches) -> list[CheckResult]:
    if space.k != 1:
        return [CheckResult("pi_cip_constraints", SKIP,
                            detail="patch-corrected projection is P1 only")]
    _, reports = analysis.build_pi_cip(space, cip_patches, problems.smooth_u,
                                       problems.smooth_grad)
    mean_r = max(rep.mean_residual for rep in reports)
    flux_r = max(rep.flux_residual for rep in reports)
    signs = all(rep.sign_pattern_ok for rep in reports)
    det_min = min(abs(rep.det) for rep in reports)
    return [_check("pi_cip_zero_mean", mean_r, 1e-9),
            _check("pi_cip_flux_constraint", flux_r, 1e-9),
            CheckResult("pi_cip_system_sign_pattern", PASS if signs else FAIL,
                        det_min, "min |det| of the 2x2 patch systems")]


def check_sd_switch(space: FeSpace, gamma_sd: float) -> CheckResult:
    if gamma_sd == 0.0:
        return CheckResult("sd_low_peclet_dropout", SKIP,
                           detail="gamma_sd = 0, SD checks skipped")
    # with eps large the local Peclet number is < 1 everywhere and the
    # stabilized matrix must coincide with the plain one
    p_sd = ProblemSpec(eps=100.0, beta=(0.5, 1.0), f=problems.zero,
                       g=problems.zero, stabilization="sd", gamma_sd=gamma_sd)
    p0 = ProblemSpec(eps=100.0, beta=(0.5, 1.0), f=problems.zero, g=problems.zero)
    A1 = assembly.assemble_sd(space, p_sd).matrix
    A0 = assembly.assemble_convdiff(space, p0).matrix
    diff = abs(A1 - A0)
    resid = float(diff.max()) if diff.nnz else 0.0
    return _check("sd_low_peclet_dropout", resid, 0.0,
                  "gamma_SD appears as 0.2 in the run text and 0.5 in the "
                  "stabilized-figure caption; both are accepted inputs")


def run_verification(mesh: Mesh, order: int = 1, gamma_sd: float = 0.2,
                     patches=None, cip_patches=None) -> list[CheckResult]:
    space = FeSpace(mesh, order)
    if patches is None:
        patches = build_patches(mesh)
    if cip_patches is None:
        cip_patches = build_patches(mesh, extended=True)
    results = []
    results += check_quadrature()
    results += check_mesh(mesh)
    results += check_patches(mesh, patches)
    results += check_phi_r(mesh, patches)
    results.append(check_positivity(space))
    results.append(check_convdiff_positivity(space))
    results.append(check_pi_partial(space, patches))
    p1 = space if space.k == 1 else FeSpace(mesh, 1)
    results += check_pi_cip(p1, cip_patches)
    results.append(check_sd_switch(space, gamma_sd))
    return results
