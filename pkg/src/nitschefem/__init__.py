"""Penalty-free non-symmetric Nitsche finite element kernel and experiments."""

from .assembly import AssembledSystem, ProblemSpec, assemble
from .fespace import FeFunction, FeSpace, nodal_interpolate, quadrature_for
from .mesh import (Mesh, MeshStats, build_patches, build_structured,
                   build_unstructured, jitter)

__all__ = [
    "AssembledSystem", "ProblemSpec", "assemble",
    "FeFunction", "FeSpace", "nodal_interpolate", "quadrature_for",
    "Mesh", "MeshStats", "build_patches", "build_structured",
    "build_unstructured", "jitter",
]

__version__ = "0.1.0"
