"""Binary little-endian PLY with float32 positions and normals."""

from pathlib import Path

import numpy as np

from ..mesh.surface import SurfaceMesh
from .base import BaseMeshExporter

VERTEX_DTYPE = np.dtype(
    [("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("nx", "<f4"), ("ny", "<f4"), ("nz", "<f4")]
)
FACE_DTYPE = np.dtype([("count", "u1"), ("index", "<i4", (3,))])


def _header(n_vertices: int, n_faces: int) -> bytes:
    lines = [
        "ply",
        "format binary_little_endian 1.0",
        "comment periodforge mesh",
        f"element vertex {n_vertices}",
        "property float x",
        "property float y",
        "property float z",
        "property float nx",
        "property float ny",
        "property float nz",
        f"element face {n_faces}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    return ("\n".join(lines) + "\n").encode("ascii")


class PlyExporter(BaseMeshExporter):
    @property
    def format_type(self) -> str:
        return "ply"

    def _write(self, mesh: SurfaceMesh, path: Path) -> None:
        vertices = np.zeros(mesh.n_vertices, dtype=VERTEX_DTYPE)
        for i, name in enumerate(("x", "y", "z")):
            vertices[name] = mesh.vertices[:, i]
            vertices["n" + name] = mesh.normals[:, i]
        faces = np.zeros(len(mesh.faces), dtype=FACE_DTYPE)
        faces["count"] = 3
        faces["index"] = mesh.faces
        with open(path, "wb") as fh:
            fh.write(_header(len(vertices), len(faces)))
            fh.write(vertices.tobytes())
            fh.write(faces.tobytes())

    def _read(self, path: Path) -> SurfaceMesh:
        data = path.read_bytes()
        marker = b"end_header\n"
        end = data.find(marker)
        if not data.startswith(b"ply") or end < 0:
            raise ValueError("Not a PLY file")
        counts = {}
        for line in data[:end].decode("ascii").splitlines():
            parts = line.split()
            if parts[:1] == ["format"] and parts[1] != "binary_little_endian":
                raise ValueError(f"Unsupported PLY format {parts[1]}")
            if parts[:1] == ["element"]:
                counts[parts[1]] = int(parts[2])
        n_v, n_f = counts.get("vertex", 0), counts.get("face", 0)
        offset = end + len(marker)
        vertices = np.frombuffer(data, dtype=VERTEX_DTYPE, count=n_v, offset=offset)
        offset += n_v * VERTEX_DTYPE.itemsize
        faces = np.frombuffer(data, dtype=FACE_DTYPE, count=n_f, offset=offset)
        if n_f and np.any(faces["count"] != 3):
            raise ValueError("Only triangle faces are supported")
        xyz = np.stack([vertices[k] for k in ("x", "y", "z")], axis=1).astype(float)
        nxyz = np.stack([vertices[k] for k in ("nx", "ny", "nz")], axis=1).astype(float)
        return self._from_arrays(xyz, nxyz, faces["index"].astype(int))
