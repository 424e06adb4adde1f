"""Mesh file exporters.

Exporters are registered per ``ExportFormat``; ``get_exporter`` returns the
shared instance for a format name or enum value.
"""

import logging
from threading import RLock
from typing import Dict, List, Union

from ..core.config import ExportFormat
from ..core.exceptions import ConfigurationError
from .base import BaseMeshExporter
from .obj import ObjExporter
from .ply import PlyExporter

logger = logging.getLogger(__name__)

_lock = RLock()
_exporters: Dict[ExportFormat, BaseMeshExporter] = {}


def register_exporter(fmt: ExportFormat, exporter: BaseMeshExporter, overwrite: bool = False) -> None:
    """Register an exporter for a format.

    Raises:
        ConfigurationError: If the format is taken and overwrite is False
    """
    with _lock:
        if fmt in _exporters and not overwrite:
            raise ConfigurationError(f"Exporter for '{fmt.value}' is already registered")
        _exporters[fmt] = exporter
        logger.debug(f"Registered {exporter!r} for '{fmt.value}'")


def get_exporter(fmt: Union[str, ExportFormat]) -> BaseMeshExporter:
    """Exporter registered for ``fmt``.

    Raises:
        ConfigurationError: If the format is unknown or has no exporter
    """
    if isinstance(fmt, str) and not isinstance(fmt, ExportFormat):
        fmt = ExportFormat.from_string(fmt)
    with _lock:
        if fmt not in _exporters:
            raise ConfigurationError(f"No exporter registered for '{fmt.value}'")
        return _exporters[fmt]


def list_formats() -> List[str]:
    with _lock:
        return sorted(f.value for f in _exporters)


register_exporter(ExportFormat.OBJ, ObjExporter())
register_exporter(ExportFormat.PLY, PlyExporter())

__all__ = [
    "BaseMeshExporter",
    "ObjExporter",
    "PlyExporter",
    "get_exporter",
    "list_formats",
    "register_exporter",
]
