"""Exports: VTK legacy ASCII fields, FeFunction CSV, convergence CSV files."""

from __future__ import annotations

import numpy as np

from .fespace import FeFunction
from .mesh import Mesh


def _vis_grid(fn: FeFunction):
    """Point coordinates and triangles for visualization.

    P1 uses the mesh itself; P2 is emitted on the once-refined submesh whose
    vertices are the dof nodes (each triangle split into four through the
    edge midpoints).
    """
    space = fn.space
    mesh = space.mesh
    if space.k == 1:
        return space.dof_coords, mesh.triangles
    tris = []
    for t in range(mesh.n_triangles):
        v0, v1, v2, m01, m12, m20 = space.element_dofs[t]
        tris.extend([(v0, m01, m20), (m01, v1, m12),
                     (m20, m12, v2), (m01, m12, m20)])
    return space.dof_coords, np.array(tris, dtype=np.int64)


def write_vtk(fn: FeFunction, path, name: str = "u") -> None:
    """VTK legacy ASCII unstructured grid with one point scalar field."""
    points, tris = _vis_grid(fn)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{name}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(points)} double\n")
        for x, y in points:
            fh.write(f"{x:.12e} {y:.12e} 0.0\n")
        fh.write(f"CELLS {len(tris)} {4 * len(tris)}\n")
        for a, b, c in tris:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {len(tris)}\n")
        fh.write("\n".join(["5"] * len(tris)) + "\n")
        fh.write(f"POINT_DATA {len(points)}\n")
        fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
        for v in fn.coeffs:
            fh.write(f"{v:.12e}\n")


def write_function_csv(fn: FeFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write("dof_index,x,y,value\n")
        for i, ((x, y), v) in enumerate(zip(fn.space.dof_coords, fn.coeffs)):
            fh.write(f"{i},{x:.12e},{y:.12e},{v:.12e}\n")


def write_mesh_vtk(mesh: Mesh, path) -> None:
    """Mesh geometry only (no data), for quick inspection."""
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_vertices} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.12e} {y:.12e} 0.0\n")
        fh.write(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {mesh.n_triangles}\n")
        fh.write("\n".join(["5"] * mesh.n_triangles) + "\n")
