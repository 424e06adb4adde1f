"""ASCII Wavefront OBJ with per-vertex normals."""

from pathlib import Path

import numpy as np

from ..mesh.surface import SurfaceMesh
from .base import BaseMeshExporter


class ObjExporter(BaseMeshExporter):
    """Writes ``v``, ``vn`` and ``f i//i j//j k//k`` records, 1-based."""

    @property
    def format_type(self) -> str:
        return "obj"

    def _write(self, mesh: SurfaceMesh, path: Path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("# periodforge mesh\n")
            fh.write(f"# vertices {mesh.n_vertices} faces {len(mesh.faces)}\n")
            if mesh.n_vertices:
                np.savetxt(fh, mesh.vertices, fmt="v %.17g %.17g %.17g")
                np.savetxt(fh, mesh.normals, fmt="vn %.17g %.17g %.17g")
            if len(mesh.faces):
                idx = np.repeat(mesh.faces + 1, 2, axis=1)
                np.savetxt(fh, idx, fmt="f %d//%d %d//%d %d//%d")

    def _read(self, path: Path) -> SurfaceMesh:
        vertices, normals, faces = [], [], []
        with open(path, "r", encoding="ascii") as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "v":
                    vertices.append([float(p) for p in parts[1:4]])
                elif parts[0] == "vn":
                    normals.append([float(p) for p in parts[1:4]])
                elif parts[0] == "f":
                    faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
        if normals and len(normals) != len(vertices):
            raise ValueError(f"{len(normals)} normals for {len(vertices)} vertices")
        face_array = np.asarray(faces, dtype=int).reshape(-1, 3)
        if face_array.size and (face_array.min() < 0 or face_array.max() >= len(vertices)):
            raise ValueError("Face index out of range")
        return self._from_arrays(
            np.asarray(vertices), np.asarray(normals or np.zeros((len(vertices), 3))), face_array
        )
