"""Continuous P1/P2 Lagrange spaces, reference bases and quadrature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (nq, 2) reference-triangle coordinates, or (nq,) on [0,1]
    weights: np.ndarray  # sum to 1/2 (triangle) or 1 (edge)
    degree: int


def _triangle_rule_deg6() -> QuadratureRule:
    # 12-point symmetric rule, exact to polynomial degree 6
    groups = [
        (0.873821971016996, 0.063089014491502, 0.050844906370207),
        (0.501426509658179, 0.249286745170910, 0.116786275726379),
    ]
    pts, wts = [], []
    for a, b, w in groups:
        for bary in ((a, b, b), (b, a, b), (b, b, a)):
            pts.append((bary[1], bary[2]))
            wts.append(w)
    a, b, c, w = 0.636502499121399, 0.310352451033785, 0.053145049844816, 0.082851075618374
    for bary in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
        pts.append((bary[1], bary[2]))
        wts.append(w)
    return QuadratureRule(np.array(pts), 0.5 * np.array(wts), 6)


def _edge_rule_gauss4() -> QuadratureRule:
    x, w = np.polynomial.legendre.leggauss(4)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 7)


def quadrature_for(purpose: str, k: int = 1) -> QuadratureRule:
    """Fixed over-integrating rules: degree-6 area rule, 4-point Gauss edge rule."""
    if k not in (1, 2):
        raise ValueError("polynomial order must be 1 or 2")
    if purpose == "area":
        return _triangle_rule_deg6()
    if purpose == "edge":
        return _edge_rule_gauss4()
    raise ValueError(f"unknown quadrature purpose '{purpose}'")


def ref_basis(k: int, pts: np.ndarray):
    """Values, gradients and Hessians of the reference basis at ``pts``.

    Returns (N, G, H) with shapes (nq, nd), (nq, nd, 2), (nd, 2, 2); the
    Hessians are constant on the reference element.
    """
    x, y = pts[:, 0], pts[:, 1]
    lam = np.stack([1.0 - x - y, x, y], axis=1)
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    if k == 1:
        N = lam
        G = np.broadcast_to(dlam, (pts.shape[0], 3, 2)).copy()
        H = np.zeros((3, 2, 2))
        return N, G, H
    if k != 2:
        raise ValueError("polynomial order must be 1 or 2")
    nq = pts.shape[0]
    N = np.empty((nq, 6))
    G = np.empty((nq, 6, 2))
    H = np.empty((6, 2, 2))
    for i in range(3):
        N[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        G[:, i, :] = (4.0 * lam[:, i, None] - 1.0) * dlam[i]
        H[i] = 4.0 * np.outer(dlam[i], dlam[i])
    # edge dofs: local edge m = (m, m+1)
    for m in range(3):
        i, j = m, (m + 1) % 3
        N[:, 3 + m] = 4.0 * lam[:, i] * lam[:, j]
        G[:, 3 + m, :] = 4.0 * (lam[:, i, None] * dlam[j] + lam[:, j, None] * dlam[i])
        H[3 + m] = 4.0 * (np.outer(dlam[i], dlam[j]) + np.outer(dlam[j], dlam[i]))
    return N, G, H


class FeSpace:
    """Continuous Lagrange space of order k in {1, 2} on a triangle mesh.

    P2 edge dofs are keyed by the sorted vertex pair of the edge, so the
    global numbering does not depend on element traversal order.
    """

    def __init__(self, mesh: Mesh, k: int):
        if k not in (1, 2):
            raise ValueError("polynomial order must be 1 or 2")
        self.mesh = mesh
        self.k = k

        nv = mesh.n_vertices
        if k == 1:
            self.element_dofs = mesh.triangles.copy()
            self.dof_coords = mesh.vertices.copy()
        else:
            edge_ids: dict[tuple[int, int], int] = {}
            elem_dofs = np.empty((mesh.n_triangles, 6), dtype=np.int64)
            mid_coords = []
            for t, tri in enumerate(mesh.triangles):
                elem_dofs[t, :3] = tri
                for m in range(3):
                    a, b = int(tri[m]), int(tri[(m + 1) % 3])
                    key = (a, b) if a < b else (b, a)
                    if key not in edge_ids:
                        edge_ids[key] = nv + len(mid_coords)
                        mid_coords.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
                    elem_dofs[t, 3 + m] = edge_ids[key]
            self.element_dofs = elem_dofs
            self.dof_coords = np.vstack([mesh.vertices, np.array(mid_coords)])
        self.n_dofs = self.dof_coords.shape[0]

        # geometry: Jacobians of the affine maps
        p = mesh.vertices[mesh.triangles]
        J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (nt,2,2)
        self.det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1]
        inv[:, 0, 1] = -J[:, 0, 1]
        inv[:, 1, 0] = -J[:, 1, 0]
        inv[:, 1, 1] = J[:, 0, 0]
        self.jac = J
        self.jac_inv = inv / self.det[:, None, None]

        # boundary dofs and the sides they lie on
        pairs = set()
        for e, (a, b) in enumerate(mesh.boundary_edges):
            side = int(mesh.boundary_side[e])
            pairs.add((int(a), side))
            pairs.add((int(b), side))
            if k == 2:
                t = int(mesh.boundary_tri[e])
                loc = self._local_edge(t, int(a), int(b))
                pairs.add((int(self.element_dofs[t, 3 + loc]), side))
        self.boundary_dof_sides = sorted(pairs)
        self.boundary_dofs = np.array(sorted({d for d, _ in pairs}), dtype=np.int64)

    @property
    def n_local(self) -> int:
        return 3 if self.k == 1 else 6

    def _local_edge(self, t: int, a: int, b: int) -> int:
        tri = self.mesh.triangles[t]
        for m in range(3):
            if {int(tri[m]), int(tri[(m + 1) % 3])} == {a, b}:
                return m
        raise ValueError(f"edge ({a},{b}) not on triangle {t}")

    def ref_coords(self, t: int, x: np.ndarray) -> np.ndarray:
        """Map physical points (n,2) on element t to reference coordinates."""
        v0 = self.mesh.vertices[self.mesh.triangles[t, 0]]
        return (x - v0) @ self.jac_inv[t].T

    def phys_coords(self, pts: np.ndarray) -> np.ndarray:
        """Map reference points (nq,2) to physical coords on all elements: (nt,nq,2)."""
        v0 = self.mesh.vertices[self.mesh.triangles[:, 0]]
        return v0[:, None, :] + np.einsum("tab,qb->tqa", self.jac, pts)

    def tabulate(self, pts: np.ndarray):
        """Basis values/physical gradients/laplacians at reference points.

        Returns (N, G, L): N is (nq, nd); G is (nt, nq, nd, 2); L is
        (nt, nd) since laplacians of mapped P1/P2 bases are constant per
        affine element.
        """
        N, Gref, Href = ref_basis(self.k, pts)
        G = np.einsum("qia,tba->tqib", Gref, self.jac_inv.transpose(0, 2, 1))
        # physical Hessian = Jinv^T Href Jinv; laplacian = trace
        JiT = self.jac_inv.transpose(0, 2, 1)
        L = np.einsum("tab,ibc,tcd->tiad", JiT, Href, self.jac_inv)
        L = L[:, :, 0, 0] + L[:, :, 1, 1]
        return N, G, L


@dataclass
class FeFunction:
    space: FeSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.n_dofs,):
            raise ValueError("coefficient vector length must equal the dof count")


def eval_function(f: FeFunction, element: int, pts: np.ndarray):
    """Evaluate (value, gradient, laplacian) at reference points of one element."""
    pts = np.atleast_2d(pts)
    sp = f.space
    N, Gref, Href = ref_basis(sp.k, pts)
    c = f.coeffs[sp.element_dofs[element]]
    vals = N @ c
    JiT = sp.jac_inv[element].T
    Gphys = np.einsum("qia,ba->qib", Gref, JiT)
    grads = np.einsum("qib,i->qb", Gphys, c)
    Hphys = np.einsum("ab,ibc,cd->iad", JiT, Href, sp.jac_inv[element])
    lap = float(np.einsum("iaa,i->", Hphys, c))
    return vals, grads, np.full(pts.shape[0], lap)


def nodal_interpolate(space: FeSpace, u) -> FeFunction:
    """Lagrange interpolant: coefficients are point values at the dof nodes."""
    x = space.dof_coords
    return FeFunction(space, np.asarray(u(x[:, 0], x[:, 1]), dtype=float)
                      * np.ones(space.n_dofs))


def inject_p1(f: FeFunction, target: FeSpace) -> FeFunction:
    """Embed a P1 function into a P1/P2 space on the same mesh."""
    if f.space.k != 1 or f.space.mesh is not target.mesh:
        raise ValueError("inject_p1 needs a P1 function on the target's mesh")
    if target.k == 1:
        return FeFunction(target, f.coeffs.copy())
    coeffs = np.zeros(target.n_dofs)
    coeffs[:f.space.n_dofs] = f.coeffs
    for t in range(target.mesh.n_triangles):
        tri = target.mesh.triangles[t]
        for m in range(3):
            a, b = int(tri[m]), int(tri[(m + 1) % 3])
            coeffs[target.element_dofs[t, 3 + m]] = 0.5 * (f.coeffs[a] + f.coeffs[b])
    return FeFunction(target, coeffs)
