"""File output for surface meshes."""

from pathlib import Path
from typing import Union

from ..core.config import ExportFormat
from .surface import SurfaceMesh


def export_mesh(mesh: SurfaceMesh, format: Union[str, ExportFormat], path: Union[str, Path]) -> Path:
    """Write ``mesh`` as OBJ or PLY.

    Raises:
        ConfigurationError: If the format is unknown
        ExportError: If the file cannot be written
    """
    from ..exporters import get_exporter

    return get_exporter(format).write(mesh, path)


def read_mesh(path: Union[str, Path], format: Union[str, ExportFormat, None] = None) -> SurfaceMesh:
    """Read a mesh written by ``export_mesh``; the format defaults to the suffix."""
    from ..exporters import get_exporter

    fmt = format if format is not None else Path(path).suffix.lstrip(".")
    return get_exporter(fmt).read(path)
