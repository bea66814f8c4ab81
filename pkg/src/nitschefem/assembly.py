"""Assembly of the weak-boundary Poisson and convection-diffusion forms.

All operators are assembled into scipy CSR matrices.  Volume terms are
vectorized over elements; boundary and interior-edge terms loop over the
(asymptotically negligible) edge sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .fespace import FeSpace, quadrature_for, ref_basis
from .mesh import Mesh

BC_MODES = ("nitsche_nonsym", "nitsche_sym", "strong")
STABILIZATIONS = ("none", "sd", "cip")


class AssemblyError(ValueError):
    pass


def _zero(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass
class ProblemSpec:
    """Coefficients, data and discretization switches for one run."""

    eps: float = 1.0
    beta: tuple[float, float] = (0.0, 0.0)
    sigma: float = 0.0
    f: Callable = _zero
    g: Callable = _zero
    bc_mode: str = "nitsche_nonsym"
    gamma: float = 0.0
    stabilization: str = "none"
    gamma_sd: float = 0.2
    gamma_cip: float = 0.005

    def __post_init__(self):
        if self.eps <= 0:
            raise AssemblyError("diffusion coefficient must be positive")
        if self.sigma < 0 or self.gamma < 0 or self.gamma_sd < 0 or self.gamma_cip < 0:
            raise AssemblyError("sigma, gamma, gamma_sd, gamma_cip must be >= 0")
        if self.bc_mode not in BC_MODES:
            raise AssemblyError(f"unknown bc_mode '{self.bc_mode}'")
        if self.stabilization not in STABILIZATIONS:
            raise AssemblyError(f"unknown stabilization '{self.stabilization}'")

    @property
    def beta_norm(self) -> float:
        return float(np.hypot(*self.beta))


@dataclass
class AssembledSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    space: FeSpace
    problem: ProblemSpec
    notes: dict = field(default_factory=dict)


# ---------------------------------------------------------------- volume

def _volume_tables(space: FeSpace):
    if not hasattr(space, "_vtab"):
        rule = quadrature_for("area", space.k)
        N, G, L = space.tabulate(rule.points)
        xq = space.phys_coords(rule.points)
        wdet = rule.weights[None, :] * np.abs(space.det)[:, None]  # (nt, nq)
        space._vtab = (rule, N, G, L, xq, wdet)
    return space._vtab


def _scatter(space: FeSpace, local: np.ndarray) -> sp.csr_matrix:
    """Accumulate (nt, nd, nd) element matrices into a global CSR matrix."""
    ed = space.element_dofs
    nd = ed.shape[1]
    rows = np.repeat(ed, nd, axis=1).ravel()
    cols = np.tile(ed, (1, nd)).ravel()
    A = sp.coo_matrix((local.ravel(), (rows, cols)),
                      shape=(space.n_dofs, space.n_dofs)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A

def stiffness_matrix(space: FeSpace) -> sp.csr_matrix:
    rule, N, G, L, xq, wdet = _volume_tables(space)
    local = np.einsum("tq,tqia,tqja->tij", wdet, G, G)
    return _scatter(space, local)


def mass_matrix(space: FeSpace) -> sp.csr_matrix:
    rule, N, G, L, xq, wdet = _volume_tables(space)
    local = np.einsum("tq,qi,qj->tij", wdet, N, N)
    return _scatter(space, local)


def convection_matrix(space: FeSpace, beta) -> sp.csr_matrix:
    """(beta . grad u, v) with constant velocity."""
    rule, N, G, L, xq, wdet = _volume_tables(space)
    bg = np.einsum("tqja,a->tqj", G, np.asarray(beta, dtype=float))
    local = np.einsum("tq,qi,tqj->tij", wdet, N, bg)
    return _scatter(space, local)


def load_vector(space: FeSpace, f) -> np.ndarray:
    rule, N, G, L, xq, wdet = _volume_tables(space)
    fq = f(xq[:, :, 0], xq[:, :, 1])
    rhs = np.zeros(space.n_dofs)
    np.add.at(rhs, space.element_dofs,
              np.einsum("tq,qi->ti", wdet * fq, N))
    return rhs


# -------------------------------------------------------------- boundary

def _boundary_tables(space: FeSpace):
    """Per boundary edge: basis values/gradients at edge quadrature points.

    Returns a list of tuples (tri, dofs, N, Gn, xq, w_phys, normal, h_K)
    where Gn is the normal derivative of each local basis at each point.
    """
    if hasattr(space, "_btab"):
        return space._btab
    mesh = space.mesh
    erule = quadrature_for("edge", space.k)
    hk = mesh.h_per_triangle()
    out = []
    for e in range(mesh.boundary_edges.shape[0]):
        a, b = mesh.boundary_edges[e]
        t = int(mesh.boundary_tri[e])
        va, vb = mesh.vertices[a], mesh.vertices[b]
        length = float(np.hypot(*(vb - va)))
        xq = va[None, :] + erule.points[:, None] * (vb - va)[None, :]
        ref = space.ref_coords(t, xq)
        N, Gref, _ = ref_basis(space.k, ref)
        G = np.einsum("qia,ba->qib", Gref, space.jac_inv[t].T)
        n = mesh.boundary_normals[e]
        Gn = G @ n
        out.append((t, space.element_dofs[t], N, Gn, xq,
                    erule.weights * length, n, float(hk[t])))
    space._btab = out
    return out


def _boundary_matrices(space: FeSpace):
    """Flux matrix B[i,j] = <grad u_j . n, v_i> and penalty P = sum_K h_K^-1 <u, v>."""
    nd = space.n_dofs
    rows, cols, bvals, pvals = [], [], [], []
    for t, dofs, N, Gn, xq, w, n, hk in _boundary_tables(space):
        Bloc = np.einsum("q,qi,qj->ij", w, N, Gn)
        Ploc = np.einsum("q,qi,qj->ij", w, N, N) / hk
        r = np.repeat(dofs, len(dofs))
        c = np.tile(dofs, len(dofs))
        rows.append(r); cols.append(c)
        bvals.append(Bloc.ravel()); pvals.append(Ploc.ravel())
    rows = np.concatenate(rows); cols = np.concatenate(cols)
    B = sp.coo_matrix((np.concatenate(bvals), (rows, cols)), shape=(nd, nd)).tocsr()
    P = sp.coo_matrix((np.concatenate(pvals), (rows, cols)), shape=(nd, nd)).tocsr()
    for M in (B, P):
        M.sum_duplicates()
        M.sort_indices()
    return B, P


def _boundary_rhs(space: FeSpace, p: ProblemSpec, sign: float) -> np.ndarray:
    """g-dependent boundary terms: sign * <g, grad v . n> + gamma h_K^-1 <g, v>."""
    rhs = np.zeros(space.n_dofs)
    for t, dofs, N, Gn, xq, w, n, hk in _boundary_tables(space):
        gq = p.g(xq[:, 0], xq[:, 1]) * np.ones(len(w))
        rhs[dofs] += sign * np.einsum("q,qj->j", w * gq, Gn)
        if p.gamma > 0:
            rhs[dofs] += (p.gamma / hk) * np.einsum("q,qj->j", w * gq, N)
    return rhs


def _nitsche_matrix(space: FeSpace, p: ProblemSpec):
    """Unit-diffusion Nitsche operator: K - B + sign * B^T + gamma * P."""
    sign = 1.0 if p.bc_mode == "nitsche_nonsym" else -1.0
    K = stiffness_matrix(space)
    B, P = _boundary_matrices(space)
    A = K - B + sign * B.T.tocsr()
    if p.gamma > 0:
        A = A + p.gamma * P
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A, sign


def assemble_poisson_nitsche(space: FeSpace, p: ProblemSpec) -> AssembledSystem:
    """Poisson with weakly imposed Dirichlet data, unit diffusion."""
    if p.bc_mode not in ("nitsche_nonsym", "nitsche_sym"):
        raise AssemblyError("assemble_poisson_nitsche requires a Nitsche bc_mode")
    A, sign = _nitsche_matrix(space, p)
    rhs = load_vector(space, p.f) + _boundary_rhs(space, p, sign)
    return AssembledSystem(A, rhs, space, p)


def assemble_strong(space: FeSpace, p: ProblemSpec) -> AssembledSystem:
    """Volume operator with strongly imposed Dirichlet values.

    Boundary rows become identity rows; the known values are lifted to the
    right-hand side (column elimination), so a symmetric volume operator
    stays symmetric on the interior block.
    """
    A = p.eps * stiffness_matrix(space)
    if p.beta_norm > 0:
        A = A + convection_matrix(space, p.beta)
    if p.sigma > 0:
        A = A + p.sigma * mass_matrix(space)
    A = sp.lil_matrix(A)
    rhs = load_vector(space, p.f)

    bd = space.boundary_dofs
    xb = space.dof_coords[bd]
    gb = np.asarray(p.g(xb[:, 0], xb[:, 1]), dtype=float) * np.ones(len(bd))
    gvec = np.zeros(space.n_dofs)
    gvec[bd] = gb
    rhs -= sp.csr_matrix(A) @ gvec
    A[bd, :] = 0.0
    A[:, bd] = 0.0
    for d, g in zip(bd, gb):
        A[d, d] = 1.0
        rhs[d] = g
    A = A.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return AssembledSystem(A, rhs, space, p)


def inflow_edges(mesh: Mesh, beta) -> np.ndarray:
    """Boundary edge indices where beta . n < 0."""
    bn = mesh.boundary_normals @ np.asarray(beta, dtype=float)
    return np.nonzero(bn < 0)[0]


def _inflow_terms(space: FeSpace, p: ProblemSpec):
    """-<beta.n u, v> on the inflow boundary, and the matching g term."""
    beta = np.asarray(p.beta, dtype=float)
    tabs = _boundary_tables(space)
    nd = space.n_dofs
    mat = sp.lil_matrix((nd, nd))
    rhs = np.zeros(nd)
    for e in inflow_edges(space.mesh, beta):
        t, dofs, N, Gn, xq, w, n, hk = tabs[e]
        bn = float(beta @ n)
        loc = -bn * np.einsum("q,qi,qj->ij", w, N, N)
        mat[np.ix_(dofs, dofs)] += loc
        gq = p.g(xq[:, 0], xq[:, 1]) * np.ones(len(w))
        rhs[dofs] += -bn * np.einsum("q,qi->i", w * gq, N)
    return mat.tocsr(), rhs


def assemble_convdiff(space: FeSpace, p: ProblemSpec) -> AssembledSystem:
    """Convection-diffusion-reaction form with weak boundary conditions."""
    if p.bc_mode != "nitsche_nonsym":
        raise AssemblyError("convection-diffusion assembly uses the non-symmetric "
                            "Nitsche boundary treatment")
    if p.beta_norm == 0 and p.sigma == 0:
        # pure diffusion: fall through to the Poisson operator, eps-scaled
        An, sign = _nitsche_matrix(space, p)
        A = p.eps * An
        rhs = load_vector(space, p.f) + p.eps * _boundary_rhs(space, p, sign)
        return AssembledSystem(A.tocsr(), rhs, space, p)

    An, sign = _nitsche_matrix(space, p)
    A = p.eps * An + convection_matrix(space, p.beta)
    if p.sigma > 0:
        A = A + p.sigma * mass_matrix(space)
    Fin, rin = _inflow_terms(space, p)
    A = (A + Fin).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    rhs = load_vector(space, p.f) + p.eps * _boundary_rhs(space, p, sign) + rin
    return AssembledSystem(A, rhs, space, p)


def sd_delta(space: FeSpace, p: ProblemSpec) -> np.ndarray:
    """Per-element streamline-diffusion parameter.

    delta_K = gamma_sd * h_K / |beta| when the local Peclet number
    |beta| h_K / eps exceeds 1, and 0 otherwise.
    """
    hk = space.mesh.h_per_triangle()
    if p.beta_norm == 0:
        return np.zeros_like(hk)
    pe = p.beta_norm * hk / p.eps
    delta = np.where(pe > 1.0, p.gamma_sd * hk / p.beta_norm, 0.0)
    return delta


def assemble_sd(space: FeSpace, p: ProblemSpec) -> AssembledSystem:
    """Streamline-diffusion stabilized convection-diffusion form (sigma = 0)."""
    if p.stabilization != "sd":
        raise AssemblyError("problem spec does not request SD stabilization")
    if p.sigma != 0:
        raise AssemblyError("SD assembly is restricted to sigma = 0")
    base = assemble_convdiff(space, p)
    delta = sd_delta(space, p)

    rule, N, G, L, xq, wdet = _volume_tables(space)
    beta = np.asarray(p.beta, dtype=float)
    bg = np.einsum("tqja,a->tqj", G, beta)
    wd = wdet * delta[:, None]
    local = np.einsum("tq,tqj,tqi->tij", wd, bg, bg)
    # - (eps lap u, delta beta.grad v); laplacians are constant per element
    local -= p.eps * np.einsum("tq,tj,tqi->tij", wd, L, bg)
    A = base.matrix + _scatter(space, local)
    A.sum_duplicates()
    A.sort_indices()

    fq = p.f(xq[:, :, 0], xq[:, :, 1])
    rhs = base.rhs.copy()
    np.add.at(rhs, space.element_dofs, np.einsum("tq,tqi->ti", wd * fq, bg))

    ci_bound = p.gamma_sd  # recorded against the gamma_sd < 1/C_I^2 stability bound
    return AssembledSystem(A, rhs, space, p,
                           notes={"delta_max": float(delta.max()),
                                  "gamma_sd": ci_bound})


def interior_edges(mesh: Mesh):
    """Unique interior edges as (tA, tB, v_lo, v_hi) with tA < tB."""
    out = []
    for t in range(mesh.n_triangles):
        for k in range(3):
            tb = int(mesh.neighbors[t, k])
            if tb < 0 or tb < t:
                continue
            a = int(mesh.triangles[t, (k + 1) % 3])
            b = int(mesh.triangles[t, (k + 2) % 3])
            out.append((t, tb, min(a, b), max(a, b)))
    return out


def cip_jump_matrix(space: FeSpace, beta, gamma_cip: float) -> sp.csr_matrix:
    """Gradient-jump penalty over interior edges.

    gamma_cip * sum_F  int_F h_F^2 |beta.n_F| [grad u . n_F][grad v . n_F].
    The edge normal points from the lower to the higher vertex-index side
    (fixed orientation; the product of two jumps does not depend on it).
    """
    mesh = space.mesh
    erule = quadrature_for("edge", space.k)
    beta = np.asarray(beta, dtype=float)
    rows, cols, vals = [], [], []
    for ta, tb, lo, hi in interior_edges(mesh):
        va, vb = mesh.vertices[lo], mesh.vertices[hi]
        d = vb - va
        hf = float(np.hypot(*d))
        nf = np.array([d[1], -d[0]]) / hf
        bn = abs(float(beta @ nf))
        if bn == 0.0:
            continue
        xq = va[None, :] + erule.points[:, None] * d[None, :]
        g = []
        for t, sgn in ((ta, 1.0), (tb, -1.0)):
            ref = space.ref_coords(t, xq)
            _, Gref, _ = ref_basis(space.k, ref)
            G = np.einsum("qia,ba->qib", Gref, space.jac_inv[t].T)
            g.append(sgn * (G @ nf))
        jump = np.concatenate(g, axis=1)  # (nq, 2*nd)
        dofs = np.concatenate([space.element_dofs[ta], space.element_dofs[tb]])
        loc = gamma_cip * hf**2 * bn * np.einsum("q,qi,qj->ij", erule.weights * hf,
                                                 jump, jump)
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        vals.append(loc.ravel())
    if not vals:
        return sp.csr_matrix((space.n_dofs, space.n_dofs))
    J = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(space.n_dofs, space.n_dofs)).tocsr()
    J.sum_duplicates()
    J.sort_indices()
    return J


def assemble_cip(space: FeSpace, p: ProblemSpec) -> AssembledSystem:
    """Convection-diffusion form plus the interior gradient-jump penalty."""
    if p.stabilization != "cip":
        raise AssemblyError("problem spec does not request CIP stabilization")
    base = assemble_convdiff(space, p)
    J = cip_jump_matrix(space, p.beta, p.gamma_cip)
    A = (base.matrix + J).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return AssembledSystem(A, base.rhs, space, p)


def assemble(space: FeSpace, p: ProblemSpec) -> AssembledSystem:
    """Dispatch on bc_mode / stabilization."""
    if p.bc_mode == "strong":
        if p.stabilization != "none":
            raise AssemblyError("stabilization is only assembled with weak "
                                "boundary conditions")
        return assemble_strong(space, p)
    if p.stabilization == "sd":
        return assemble_sd(space, p)
    if p.stabilization == "cip":
        return assemble_cip(space, p)
    if p.beta_norm == 0 and p.sigma == 0 and p.eps == 1.0:
        return assemble_poisson_nitsche(space, p)
    return assemble_convdiff(space, p)
