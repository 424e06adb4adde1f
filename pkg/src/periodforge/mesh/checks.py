"""Discrete sanity checks on generated meshes."""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..core.exceptions import GeometryError
from ..core.params import SurfaceParams
from ..curve import _D, _E, _P, branch_points, residue_dh
from .grid import BoundaryTag
from .surface import ROTATE_OX3, SurfaceMesh, arc_plane

logger = logging.getLogger(__name__)


@dataclass
class DiscreteReport:
    """Scalar summaries of how well a mesh matches the smooth surface."""

    gauss_map_max_angle: float
    mean_curvature_rms: float
    line_deviation: float
    plane_deviation: float
    rotation_deviation: float
    axis_orthogonality: float
    conformality_deviation: float
    end_loops: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class EndFit:
    """Least-squares fit x3 = (eta / 2) ln(x1^2 + x2^2) + mu near an end."""

    eta: float
    mu: float
    rms: float
    predicted_eta: float
    samples: int


def face_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    v = vertices[faces]
    return 0.5 * np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)


def cotangent_laplacian(vertices: np.ndarray, faces: np.ndarray) -> sparse.csr_matrix:
    """Symmetric cotangent weight matrix W with W_ij = (cot a_ij + cot b_ij) / 2."""
    n = len(vertices)
    areas = np.maximum(face_areas(vertices, faces), 1e-300)
    I, J, S = [], [], []
    for k in range(3):
        i, j, o = faces[:, (k + 1) % 3], faces[:, (k + 2) % 3], faces[:, k]
        a = vertices[i] - vertices[o]
        b = vertices[j] - vertices[o]
        cot = np.einsum("ij,ij->i", a, b) / (2.0 * areas)
        I.append(i)
        J.append(j)
        S.append(0.5 * cot)
    I, J, S = np.concatenate(I), np.concatenate(J), np.concatenate(S)
    W = sparse.csr_matrix(
        (np.concatenate([S, S]), (np.concatenate([I, J]), np.concatenate([J, I]))), shape=(n, n)
    )
    return W


def vertex_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Barycentric vertex areas, a third of every incident face."""
    areas = face_areas(vertices, faces) / 3.0
    out = np.zeros(len(vertices))
    for k in range(3):
        np.add.at(out, faces[:, k], areas)
    return out


def boundary_edges(faces: np.ndarray) -> np.ndarray:
    pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    pairs.sort(axis=1)
    unique, counts = np.unique(pairs, axis=0, return_counts=True)
    return unique[counts == 1]


def boundary_loops(mesh: SurfaceMesh) -> List[np.ndarray]:
    """Vertex ids of each connected component of the mesh boundary."""
    edges = boundary_edges(mesh.faces)
    if len(edges) == 0:
        return []
    n = mesh.n_vertices
    graph = sparse.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    on_boundary = np.unique(edges)
    return [on_boundary[labels[on_boundary] == lab] for lab in np.unique(labels[on_boundary])]


def end_loop_count(mesh: SurfaceMesh) -> int:
    """Boundary loops made entirely of end cut vertices."""
    cut = set(mesh.tags.get(BoundaryTag.END_CUT.value, np.zeros(0, dtype=int)).tolist())
    return sum(1 for loop in boundary_loops(mesh) if cut.issuperset(loop.tolist()))


def vertex_normals_from_faces(mesh: SurfaceMesh) -> np.ndarray:
    fn = mesh.face_normals()
    out = np.zeros_like(mesh.vertices)
    for k in range(3):
        np.add.at(out, mesh.faces[:, k], fn)
    norm = np.linalg.norm(out, axis=1, keepdims=True)
    return out / np.where(norm > 0, norm, 1.0)


def gauss_map_deviation(mesh: SurfaceMesh, interior: np.ndarray) -> float:
    """Largest angle between analytic and face-averaged normals, in radians."""
    if len(interior) == 0:
        return 0.0
    discrete = vertex_normals_from_faces(mesh)[interior]
    analytic = mesh.normals[interior]
    dots = np.einsum("ij,ij->i", discrete, analytic)
    if np.mean(dots) < 0:
        dots = -dots
    return float(np.max(np.arccos(np.clip(dots, -1.0, 1.0))))


def mean_edge_length(mesh: SurfaceMesh) -> float:
    v = mesh.vertices[mesh.faces]
    lengths = np.linalg.norm(v - np.roll(v, 1, axis=1), axis=2)
    return float(lengths.mean()) if lengths.size else 0.0


def mean_curvature_rms(mesh: SurfaceMesh, interior: np.ndarray) -> float:
    """RMS of |H| at interior vertices, scaled by the mean edge length."""
    if len(interior) == 0:
        return 0.0
    W = cotangent_laplacian(mesh.vertices, mesh.faces)
    degree = np.asarray(W.sum(axis=1)).ravel()
    LX = W @ mesh.vertices - degree[:, None] * mesh.vertices
    A = np.maximum(vertex_areas(mesh.vertices, mesh.faces), 1e-300)
    H = np.linalg.norm(LX, axis=1) / (2.0 * A)
    return float(np.sqrt(np.mean(H[interior] ** 2)) * mean_edge_length(mesh))


def conformality_deviation(mesh: SurfaceMesh, params: SurfaceParams) -> float:
    """Largest relative gap between mesh edge lengths and the induced metric.

    Only edges within copy 0 and well away from branch points are used;
    the predicted length is (|g| + 1/|g|) |h'| |dz| / 2 at the midpoint.
    """
    faces = mesh.faces[np.all(mesh.copy_id[mesh.faces] == 0, axis=1)]
    if len(faces) == 0:
        return 0.0
    pairs = np.unique(np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1), axis=0)
    za, zb = mesh.z[pairs[:, 0]], mesh.z[pairs[:, 1]]
    mid = 0.5 * (za + zb)
    dz = np.abs(zb - za)
    clear = np.ones(len(pairs), dtype=bool)
    for p in branch_points(params) + [np.exp(-1j * params.alpha)]:
        clear &= np.abs(mid - p) > 4.0 * dz
    if not np.any(clear):
        return 0.0
    mid, dz, pairs = mid[clear], dz[clear], pairs[clear]
    E, P = _E(params, mid), _P(params, mid)
    g_abs = params.c * np.sqrt(np.abs(P / (mid * _D(params, mid)))) * np.abs(mid / E)
    predicted = 0.5 * (g_abs + 1.0 / g_abs) * np.abs(E / P) * dz
    actual = np.linalg.norm(mesh.vertices[pairs[:, 1]] - mesh.vertices[pairs[:, 0]], axis=1)
    return float(np.max(np.abs(actual / predicted - 1.0)))


def _axis(mesh: SurfaceMesh) -> Optional[np.ndarray]:
    axis = mesh.info.get("axis")
    return None if axis is None else np.asarray(axis, dtype=float)


def discrete_checks(mesh: SurfaceMesh, params: SurfaceParams) -> DiscreteReport:
    """Geometric checks of an assembled piece (or a tiling of it).

    Raises:
        GeometryError: If the mesh has no faces or no recorded symmetry axis
    """
    if len(mesh.faces) == 0:
        raise GeometryError("Cannot check an empty mesh")
    axis = _axis(mesh)
    if axis is None:
        raise GeometryError("Mesh has no symmetry axis; assemble the piece first")

    boundary = np.unique(boundary_edges(mesh.faces))
    interior = np.setdiff1d(np.unique(mesh.faces), boundary)
    singular = np.isin(mesh.z, [0j, complex(params.x), np.exp(-1j * params.alpha)])
    interior = interior[~singular[interior]]

    line = mesh.vertices[mesh.tagged(BoundaryTag.SEG_S_L.value, copy=0)]
    line_dev = float(np.max(np.linalg.norm(line - np.outer(line @ axis, axis), axis=1))) if len(line) else 0.0

    normal, offset = arc_plane(mesh)
    arc = mesh.vertices[mesh.tagged(BoundaryTag.ARC_A_E.value, copy=0)]
    plane_dev = float(np.max(np.abs(arc @ normal - offset)))

    tree = cKDTree(mesh.vertices)
    distances, _ = tree.query(mesh.vertices @ ROTATE_OX3.T)
    rotation_dev = float(np.max(distances))

    es = mesh.vertices[mesh.tagged(BoundaryTag.SEG_E_S.value, copy=0)]
    far = es[np.argmax(np.linalg.norm(es, axis=1))] if len(es) else np.zeros(3)
    far_norm = np.linalg.norm(far)
    orthogonality = float(abs(axis @ far) / far_norm) if far_norm > 0 else 0.0

    report = DiscreteReport(
        gauss_map_max_angle=gauss_map_deviation(mesh, interior),
        mean_curvature_rms=mean_curvature_rms(mesh, interior),
        line_deviation=line_dev,
        plane_deviation=plane_dev,
        rotation_deviation=rotation_dev,
        axis_orthogonality=orthogonality,
        conformality_deviation=conformality_deviation(mesh, params),
        end_loops=end_loop_count(mesh),
    )
    logger.info(f"Discrete checks: {report}")
    return report


def fit_catenoidal_end(
    mesh: SurfaceMesh, params: SurfaceParams, radius: Optional[float] = None
) -> EndFit:
    """Fit the logarithmic growth of the end at ybar on sheets 0 and 1.

    The expected coefficient is -2 Re Res(dh, ybar); a positive residue
    makes this the bottom end.
    """
    if radius is None:
        eps = mesh.info.get("eps_end")
        if eps is None:
            raise GeometryError("End cut radius unknown; pass radius explicitly")
        radius = 3.0 * eps
    near = (np.abs(mesh.z - params.ybar) <= radius) & np.isin(mesh.copy_id, (0, 1))
    pts = mesh.vertices[near]
    if len(pts) < 3:
        raise GeometryError(f"Only {len(pts)} vertices within {radius:g} of the end")
    log_r2 = np.log(pts[:, 0] ** 2 + pts[:, 1] ** 2)
    A = np.stack([0.5 * log_r2, np.ones(len(pts))], axis=1)
    (eta, mu), *_ = np.linalg.lstsq(A, pts[:, 2], rcond=None)
    rms = float(np.sqrt(np.mean((A @ np.array([eta, mu]) - pts[:, 2]) ** 2)))
    fit = EndFit(
        eta=float(eta),
        mu=float(mu),
        rms=rms,
        predicted_eta=-2.0 * residue_dh(params).real,
        samples=len(pts),
    )
    logger.debug(f"End fit: {fit}")
    return fit
