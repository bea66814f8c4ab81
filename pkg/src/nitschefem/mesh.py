"""Triangulations of the unit square and boundary patch construction.

Structured meshes split every grid cell along the lower-left to
upper-right diagonal.  ``jitter`` displaces the interior vertices
deterministically while keeping the structured connectivity.
``build_unstructured`` additionally re-triangulates the jittered points
by Delaunay, which removes the correlated element orientations of the
grid connectivity; this is the mesh family used by the experiment
drivers (on grid-connectivity meshes the boundary-weak formulation
shows a visible L2 pollution that genuinely unstructured meshes do not
have).  Boundary edges are grouped into the four straight sides of the
square and, on demand, into patches of consecutive edges used by the
boundary stabilization construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# side ids: 0 = bottom (y=0), 1 = right (x=1), 2 = top (y=1), 3 = left (x=0)
N_SIDES = 4


class MeshError(ValueError):
    pass


@dataclass
class MeshStats:
    h: float
    h_min: float
    shape_regularity: float
    n_vertices: int
    n_triangles: int
    n_boundary_edges: int
    n_patches: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BoundaryPatch:
    """A run of consecutive boundary edges F_j and the elements around it.

    ``edges`` are indices into the mesh boundary arrays, ordered along the
    side.  ``triangles`` is the set P_j of elements touching F_j by a face
    or a vertex (extended patches additionally pull in the ring of elements
    connected to F_j through an interior node).  ``interior_vertices`` are
    the boundary nodes in the open face, ``interior_patch_vertices`` the
    interior-of-domain nodes whose whole element star lies in P_j.
    """

    pid: int
    side: int
    edges: list[int]
    triangles: list[int]
    interior_vertices: list[int]
    interior_patch_vertices: list[int]
    measure: float


@dataclass
class Mesh:
    vertices: np.ndarray          # (nv, 2)
    triangles: np.ndarray         # (nt, 3) CCW vertex indices
    neighbors: np.ndarray         # (nt, 3) neighbor opposite local vertex, -1 on boundary
    boundary_edges: np.ndarray    # (nb, 2) oriented CCW along the boundary
    boundary_tri: np.ndarray      # (nb,) owning triangle
    boundary_side: np.ndarray     # (nb,) side id
    boundary_normals: np.ndarray  # (nb, 2) outward unit normals
    n_per_side: int | None = None

    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    def edge_lengths(self) -> np.ndarray:
        """Lengths of the three edges of every triangle (edge k opposite vertex k)."""
        p = self.vertices[self.triangles]
        out = np.empty((self.n_triangles, 3))
        for k in range(3):
            a = p[:, (k + 1) % 3]
            b = p[:, (k + 2) % 3]
            out[:, k] = np.hypot(*(a - b).T)
        return out

    def h_per_triangle(self) -> np.ndarray:
        """Element diameter h_K, i.e. the longest edge."""
        return self.edge_lengths().max(axis=1)

    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_edges.ravel()] = True
        return mask

    def corner_triangles(self) -> np.ndarray:
        """Elements with all three vertices on the boundary."""
        mask = self.boundary_vertex_mask()
        return np.nonzero(mask[self.triangles].all(axis=1))[0]

    def boundary_edge_lengths(self) -> np.ndarray:
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        return np.hypot(*(b - a).T)

    def stats(self, n_patches: int = 0) -> MeshStats:
        hk = self.h_per_triangle()
        areas = self.signed_areas()
        per = self.edge_lengths().sum(axis=1)
        rho = 2.0 * areas / per
        return MeshStats(
            h=float(hk.max()),
            h_min=float(hk.min()),
            shape_regularity=float((hk / rho).max()),
            n_vertices=self.n_vertices,
            n_triangles=self.n_triangles,
            n_boundary_edges=self.boundary_edges.shape[0],
            n_patches=n_patches,
        )

    def vertex_star(self) -> list[list[int]]:
        """Triangles incident to each vertex."""
        if "star" not in self._cache:
            star: list[list[int]] = [[] for _ in range(self.n_vertices)]
            for t, tri in enumerate(self.triangles):
                for v in tri:
                    star[v].append(t)
            self._cache["star"] = star
        return self._cache["star"]

    def vertex_adjacency(self) -> list[set]:
        """Vertices connected to each vertex by a mesh edge."""
        if "adj" not in self._cache:
            adj: list[set] = [set() for _ in range(self.n_vertices)]
            for tri in self.triangles:
                for k in range(3):
                    a, b = tri[k], tri[(k + 1) % 3]
                    adj[a].add(b)
                    adj[b].add(a)
            self._cache["adj"] = adj
        return self._cache["adj"]


def _build_topology(vertices: np.ndarray, triangles: np.ndarray,
                    boundary_edges: np.ndarray, boundary_side: np.ndarray,
                    n_per_side: int | None) -> Mesh:
    """Fill in neighbor relations, edge ownership and outward normals."""
    edge_map: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for t, tri in enumerate(triangles):
        for k in range(3):
            key = tuple(sorted((tri[(k + 1) % 3], tri[(k + 2) % 3])))
            edge_map.setdefault(key, []).append((t, k))

    neighbors = -np.ones((triangles.shape[0], 3), dtype=np.int64)
    for users in edge_map.values():
        if len(users) == 2:
            (t0, k0), (t1, k1) = users
            neighbors[t0, k0] = t1
            neighbors[t1, k1] = t0
        elif len(users) > 2:
            raise MeshError("non-manifold edge")

    boundary_tri = np.empty(boundary_edges.shape[0], dtype=np.int64)
    normals = np.empty((boundary_edges.shape[0], 2))
    for i, (a, b) in enumerate(boundary_edges):
        users = edge_map[tuple(sorted((a, b)))]
        if len(users) != 1:
            raise MeshError(f"boundary edge ({a},{b}) not owned by exactly one triangle")
        boundary_tri[i] = users[0][0]
        d = vertices[b] - vertices[a]
        n = np.array([d[1], -d[0]])
        n /= np.hypot(*n)
        # orient outward: away from the owning triangle's centroid
        mid = 0.5 * (vertices[a] + vertices[b])
        cen = vertices[triangles[boundary_tri[i]]].mean(axis=0)
        if np.dot(n, mid - cen) < 0:
            n = -n
        normals[i] = n

    mesh = Mesh(vertices, triangles, neighbors, boundary_edges,
                boundary_tri, boundary_side, normals, n_per_side)
    if (mesh.signed_areas() <= 0).any():
        raise MeshError("mesh contains non-CCW or degenerate triangles")
    return mesh


def build_structured(n_per_side: int) -> Mesh:
    """Uniform triangulation of the unit square, n cells per side.

    Every cell is split along the diagonal from its lower-left to its
    upper-right corner, giving 2 n^2 CCW triangles.
    """
    if n_per_side < 2:
        raise MeshError("n_per_side must be >= 2")
    n = n_per_side
    idx = lambda i, j: j * (n + 1) + i
    xs = np.arange(n + 1) / n
    vertices = np.array([[xs[i], xs[j]] for j in range(n + 1) for i in range(n + 1)])

    tris = []
    for j in range(n):
        for i in range(n):
            v00, v10 = idx(i, j), idx(i + 1, j)
            v11, v01 = idx(i + 1, j + 1), idx(i, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    triangles = np.array(tris, dtype=np.int64)

    bedges, bside = [], []
    for i in range(n):                       # bottom, left to right
        bedges.append((idx(i, 0), idx(i + 1, 0))); bside.append(0)
    for j in range(n):                       # right, bottom to top
        bedges.append((idx(n, j), idx(n, j + 1))); bside.append(1)
    for i in range(n, 0, -1):                # top, right to left
        bedges.append((idx(i, n), idx(i - 1, n))); bside.append(2)
    for j in range(n, 0, -1):                # left, top to bottom
        bedges.append((idx(0, j), idx(0, j - 1))); bside.append(3)

    return _build_topology(vertices, triangles, np.array(bedges, dtype=np.int64),
                           np.array(bside, dtype=np.int64), n)


def jitter(mesh: Mesh, magnitude: float, seed: int, max_halvings: int = 30) -> Mesh:
    """Displace interior vertices by at most ``magnitude * h_min``.

    Deterministic for fixed (mesh, magnitude, seed).  Boundary vertices are
    left bit-exact.  If a displacement would flip an incident triangle the
    offset is halved (per vertex) until positivity is restored.
    """
    if not 0.0 <= magnitude <= 0.25:
        raise MeshError("jitter magnitude must lie in [0, 0.25]")
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-1.0, 1.0, size=(mesh.n_vertices, 2))
    if magnitude == 0.0:
        offsets = np.zeros_like(offsets)
    scale = magnitude * mesh.stats().h_min
    interior = ~mesh.boundary_vertex_mask()
    star = mesh.vertex_star()

    verts = mesh.vertices.copy()
    tris = mesh.triangles

    def star_ok(v: int) -> bool:
        for t in star[v]:
            p = verts[tris[t]]
            a2 = ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1])
                  - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1]))
            if a2 <= 0:
                return False
        return True

    for v in np.nonzero(interior)[0]:
        step = scale
        old = verts[v].copy()
        for attempt in range(max_halvings + 1):
            verts[v] = old + step * offsets[v]
            if star_ok(v):
                break
            step *= 0.5
        else:
            raise MeshError(f"could not jitter vertex {v} without inverting elements")

    return _build_topology(verts, tris.copy(), mesh.boundary_edges.copy(),
                           mesh.boundary_side.copy(), mesh.n_per_side)


def build_unstructured(n_per_side: int, magnitude: float = 0.2,
                       seed: int = 1) -> Mesh:
    """Delaunay triangulation of a jittered grid point cloud.

    Boundary vertices stay on the uniform grid (bit-exact on the
    boundary axes); interior vertices are jittered exactly as in
    ``jitter`` and the connectivity is then rebuilt by Delaunay, so the
    element orientations lose the grid correlation.  Deterministic for
    fixed (n_per_side, magnitude, seed).
    """
    from scipy.spatial import Delaunay

    base = build_structured(n_per_side)
    pts = jitter(base, magnitude, seed).vertices
    tris = Delaunay(pts).simplices.astype(np.int64)
    p = pts[tris]
    a2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
          - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    flip = a2 < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    # boundary vertices are unmoved, so the structured boundary walk is valid
    return _build_topology(pts, tris, base.boundary_edges.copy(),
                           base.boundary_side.copy(), n_per_side)


def _side_chains(mesh: Mesh) -> list[list[int]]:
    """Boundary edge indices of each side, ordered along the boundary walk."""
    chains = []
    for side in range(N_SIDES):
        ids = np.nonzero(mesh.boundary_side == side)[0]
        nxt = {int(mesh.boundary_edges[i, 0]): int(i) for i in ids}
        heads = set(mesh.boundary_edges[ids, 0]) - set(mesh.boundary_edges[ids, 1])
        if len(heads) != 1:
            raise MeshError(f"side {side} is not a simple edge chain")
        v = heads.pop()
        chain = []
        while v in nxt:
            e = nxt.pop(v)
            chain.append(e)
            v = int(mesh.boundary_edges[e, 1])
        if len(chain) != len(ids):
            raise MeshError(f"side {side} is not a simple edge chain")
        chains.append(chain)
    return chains


def build_patches(mesh: Mesh, edges_per_patch: int = 5,
                  extended: bool = False) -> list[BoundaryPatch]:
    """Partition each side into runs of ``edges_per_patch`` consecutive edges.

    The last run on a side absorbs the remainder, so every patch face has
    between ``edges_per_patch`` and ``2 * edges_per_patch - 1`` edges.  P_j
    collects all triangles with a face or vertex on F_j; with
    ``extended=True`` (gradient-jump stabilization variant) elements around
    interior nodes connected to at least two nodes of the closed face are
    included as well.
    """
    if edges_per_patch < 5:
        raise MeshError("edges_per_patch must be >= 5")
    chains = _side_chains(mesh)
    for side, chain in enumerate(chains):
        if len(chain) < 5:
            raise MeshError(f"side {side} has fewer than 5 boundary edges")

    star = mesh.vertex_star()
    adj = mesh.vertex_adjacency()
    bmask = mesh.boundary_vertex_mask()
    elens = mesh.boundary_edge_lengths()

    patches = []
    for side, chain in enumerate(chains):
        n_edges = len(chain)
        n_runs = max(1, n_edges // edges_per_patch)
        for r in range(n_runs):
            lo = r * edges_per_patch
            hi = (r + 1) * edges_per_patch if r < n_runs - 1 else n_edges
            run = chain[lo:hi]
            vs = [int(mesh.boundary_edges[run[0], 0])]
            for e in run:
                vs.append(int(mesh.boundary_edges[e, 1]))
            closed_face = set(vs)
            inner = vs[1:-1]

            tset = set()
            for v in closed_face:
                tset.update(star[v])
            if extended:
                ring = [v for v in range(mesh.n_vertices)
                        if not bmask[v] and len(adj[v] & closed_face) >= 2]
                for v in ring:
                    tset.update(star[v])
            tris = sorted(tset)

            in_patch = np.zeros(mesh.n_triangles, dtype=bool)
            in_patch[tris] = True
            interior_patch = [v for v in range(mesh.n_vertices)
                              if not bmask[v] and star[v]
                              and all(in_patch[t] for t in star[v])]

            patches.append(BoundaryPatch(
                pid=len(patches), side=side, edges=list(map(int, run)),
                triangles=tris, interior_vertices=inner,
                interior_patch_vertices=interior_patch,
                measure=float(elens[run].sum())))
    return patches


def write_mesh(mesh: Mesh, path) -> None:
    """Line-oriented ASCII mesh format (vertices / triangles / boundary)."""
    with open(path, "w") as fh:
        fh.write(f"vertices {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"triangles {mesh.n_triangles}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
        fh.write(f"boundary {mesh.boundary_edges.shape[0]}\n")
        for (a, b), s in zip(mesh.boundary_edges, mesh.boundary_side):
            fh.write(f"{a} {b} {s}\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0

    def expect(word):
        nonlocal pos
        if tokens[pos] != word:
            raise MeshError(f"expected '{word}' in mesh file, got '{tokens[pos]}'")
        pos += 1
        n = int(tokens[pos]); pos += 1
        return n

    nv = expect("vertices")
    verts = np.array(tokens[pos:pos + 2 * nv], dtype=float).reshape(nv, 2)
    pos += 2 * nv
    nt = expect("triangles")
    tris = np.array(tokens[pos:pos + 3 * nt], dtype=np.int64).reshape(nt, 3)
    pos += 3 * nt
    nb = expect("boundary")
    braw = np.array(tokens[pos:pos + 3 * nb], dtype=np.int64).reshape(nb, 3)
    return _build_topology(verts, tris, braw[:, :2], braw[:, 2], None)
