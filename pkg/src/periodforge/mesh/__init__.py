"""Mesh synthesis: domain grid, immersion, symmetry assembly and checks."""

from .checks import DiscreteReport, EndFit, boundary_loops, discrete_checks, fit_catenoidal_end
from .export import export_mesh, read_mesh
from .grid import BoundaryTag, DomainGrid, build_grid
from .surface import SurfaceMesh, assemble_piece, integrate_surface, tile_surface

__all__ = [
    "BoundaryTag",
    "DiscreteReport",
    "DomainGrid",
    "EndFit",
    "SurfaceMesh",
    "assemble_piece",
    "boundary_loops",
    "build_grid",
    "discrete_checks",
    "export_mesh",
    "fit_catenoidal_end",
    "integrate_surface",
    "read_mesh",
    "tile_surface",
]
