"""Base interface for mesh exporters.

Every file format the package can write implements this interface; the
registry in this package maps ``ExportFormat`` values to instances.
"""

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Union

import numpy as np

from ..core.exceptions import ExportError
from ..mesh.surface import SurfaceMesh

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class BaseMeshExporter(ABC):
    """Abstract base class for triangle mesh writers and readers."""

    @property
    @abstractmethod
    def format_type(self) -> str:
        """Return the format identifier."""
        pass

    @abstractmethod
    def _write(self, mesh: SurfaceMesh, path: Path) -> None:
        pass

    @abstractmethod
    def _read(self, path: Path) -> SurfaceMesh:
        pass

    def write(self, mesh: SurfaceMesh, path: PathLike) -> Path:
        """Write vertices, normals and faces to ``path``.

        Raises:
            ExportError: If the file cannot be written
        """
        target = Path(path)
        try:
            self._write(mesh, target)
        except OSError as e:
            raise ExportError(str(target), e)
        logger.info(
            f"Wrote {mesh.n_vertices} vertices and {len(mesh.faces)} faces "
            f"to {target} ({self.format_type})"
        )
        return target

    def read(self, path: PathLike) -> SurfaceMesh:
        """Read a file written by ``write``; provenance is not stored.

        Raises:
            ExportError: If the file is missing or malformed
        """
        source = Path(path)
        try:
            return self._read(source)
        except (OSError, ValueError, IndexError) as e:
            raise ExportError(str(source), e)

    @staticmethod
    def _from_arrays(vertices: np.ndarray, normals: np.ndarray, faces: np.ndarray) -> SurfaceMesh:
        n = len(vertices)
        return SurfaceMesh(
            vertices=np.asarray(vertices, dtype=float).reshape(n, 3),
            faces=np.asarray(faces, dtype=int).reshape(-1, 3),
            normals=np.asarray(normals, dtype=float).reshape(n, 3),
            z=np.full(n, np.nan, dtype=complex),
            branch=np.zeros(n, dtype=int),
            copy_id=np.zeros(n, dtype=int),
            node=np.arange(n),
        )

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(format={self.format_type})"
