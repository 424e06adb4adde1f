"""Immersion of the fundamental domain and assembly of the fundamental piece.

X(p) = Re of the integral of (phi1, phi2, phi3) from z = 0 is accumulated
over a spanning tree of grid edges. The regular root r is carried from node
to node by continuation along each edge, so one sheet of the double cover is
followed consistently over the slit domain.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components, depth_first_order
from scipy.spatial import cKDTree

from ..core.config import get_config
from ..core.exceptions import AccuracyError, GeometryError, SymmetryError
from ..core.params import SurfaceParams
from ..curve import _D, _E, _P, branch_points, continue_root_array, forms_from_root, gauss_normal
from .grid import BoundaryTag, DomainGrid

logger = logging.getLogger(__name__)

_GL_ORDER = 10
_MAX_PANELS = 64
# Closure tolerance relative to the mesh diameter.
CLOSURE_RTOL = 1e-6

ROTATE_OX3 = np.diag([-1.0, -1.0, 1.0])


@dataclass
class SurfaceMesh:
    """Triangle mesh of (part of) the surface with per-vertex provenance."""

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray
    z: np.ndarray
    branch: np.ndarray
    copy_id: np.ndarray
    node: np.ndarray
    tags: Dict[str, np.ndarray] = field(default_factory=dict)
    info: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def diameter(self) -> float:
        if self.n_vertices == 0:
            return 0.0
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def tagged(self, tag: str, copy: Optional[int] = None) -> np.ndarray:
        ids = self.tags.get(tag, np.zeros(0, dtype=int))
        if copy is not None:
            ids = ids[self.copy_id[ids] == copy]
        return ids

    def face_normals(self) -> np.ndarray:
        v = self.vertices[self.faces]
        n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        return n

    @classmethod
    def empty(cls) -> "SurfaceMesh":
        return cls(
            vertices=np.zeros((0, 3)),
            faces=np.zeros((0, 3), dtype=int),
            normals=np.zeros((0, 3)),
            z=np.zeros(0, dtype=complex),
            branch=np.zeros(0, dtype=int),
            copy_id=np.zeros(0, dtype=int),
            node=np.zeros(0, dtype=int),
        )


@dataclass
class _EdgeTable:
    """Per-edge integrals for edges oriented from a regular start node."""

    start: np.ndarray
    end: np.ndarray
    q_start: np.ndarray
    q_end: np.ndarray
    J: np.ndarray  # (E, 3) complex, on the branch with root q_start at the start


def _edge_rule(panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes t in (0, 1) and weights with t = u^2 / 2 on each half."""
    x, w = leggauss(_GL_ORDER)
    u = ((np.arange(panels)[:, None] + 0.5 * (x[None, :] + 1.0)) / panels).ravel()
    wu = np.tile(0.5 * w / panels, panels)
    left_t, left_w = 0.5 * u * u, wu * u
    right_t, right_w = 1.0 - 0.5 * u[::-1] ** 2, (wu * u)[::-1]
    return np.concatenate([left_t, right_t]), np.concatenate([left_w, right_w])


def _segment_distance(a: np.ndarray, b: np.ndarray, p: complex) -> np.ndarray:
    d = b - a
    t = np.clip(((p - a) * d.conjugate()).real / np.maximum(np.abs(d) ** 2, 1e-300), 0.0, 1.0)
    return np.abs(a + t * d - p)


def _panel_counts(params: SurfaceParams, za: np.ndarray, zb: np.ndarray) -> np.ndarray:
    length = np.abs(zb - za)
    nearest = np.full(len(za), np.inf)
    for p in branch_points(params):
        dist = _segment_distance(za, zb, p)
        own = (np.abs(za - p) < 1e-15) | (np.abs(zb - p) < 1e-15)
        nearest = np.where(own, nearest, np.minimum(nearest, dist))
    panels = np.ceil(2.0 * length / np.maximum(nearest, 1e-300))
    return np.clip(panels, 1, _MAX_PANELS).astype(int)


def _edge_table(params: SurfaceParams, grid: DomainGrid) -> _EdgeTable:
    edges = grid.edges()
    start, end = edges[:, 0].copy(), edges[:, 1].copy()
    singular = np.zeros(grid.n_nodes, dtype=bool)
    singular[list(grid.singular)] = True
    swap = singular[start]
    if np.any(swap & singular[end]):
        raise GeometryError("An edge joins two branch points; raise the resolution")
    start[swap], end[swap] = end[swap], start[swap]

    za, zb = grid.nodes[start], grid.nodes[end]
    panels = _panel_counts(params, za, zb)
    n = len(edges)
    q_start = np.zeros(n, dtype=complex)
    q_end = np.full(n, np.nan, dtype=complex)
    J = np.zeros((n, 3), dtype=complex)

    for k in np.unique(panels):
        t, wt = _edge_rule(int(k))
        for end_singular in (False, True):
            sel = np.nonzero((panels == k) & (singular[end] == end_singular))[0]
            if len(sel) == 0:
                continue
            a, b = za[sel, None], zb[sel, None]
            samples = a + t[None, :] * (b - a)
            path = [a, samples] if end_singular else [a, samples, b]
            z_path = np.concatenate(path, axis=1)
            roots = continue_root_array(_P(params, z_path) / (z_path * _D(params, z_path)))
            r = roots[:, 1 : 1 + len(t)]
            phi = forms_from_root(params, samples, r)
            dz = (b - a)[:, 0]
            for i in range(3):
                J[sel, i] = dz * (phi[i] @ wt)
            q_start[sel] = roots[:, 0]
            if not end_singular:
                q_end[sel] = roots[:, -1]
    return _EdgeTable(start, end, q_start, q_end, J)


def _sign(a: complex, b: complex) -> float:
    return 1.0 if (a * np.conj(b)).real >= 0.0 else -1.0


def _rotation_about(axis: np.ndarray) -> np.ndarray:
    u = axis / np.linalg.norm(axis)
    return 2.0 * np.outer(u, u) - np.eye(3)


def analytic_normals(params: SurfaceParams, z: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Gauss map normals from g = i c r z / E; g = 0 at z = 0, infinite at x."""
    with np.errstate(divide="ignore", invalid="ignore"):
        g = 1j * params.c * r * z / _E(params, z)
        normals = gauss_normal(g)
    up = ~np.isfinite(g) | (np.abs(g) > 1e12)
    normals[up] = (0.0, 0.0, 1.0)
    normals[z == 0] = (0.0, 0.0, -1.0)
    return normals


def integrate_surface(
    params: SurfaceParams, grid: DomainGrid, tree: str = "bfs", check: bool = True
) -> SurfaceMesh:
    """Immersion of one sheet over the slit grid, based at X(0) = 0.

    Args:
        params: Solved tuple
        grid: Domain triangulation from build_grid
        tree: "bfs" or "dfs" spanning tree order
        check: Raise when closure residuals exceed CLOSURE_RTOL * diameter

    Raises:
        AccuracyError: If a grid cycle or the slit does not close
        SymmetryError: If the branch of r disagrees across an edge
        GeometryError: If the tree order is unknown or misses a node
    """
    if tree not in ("bfs", "dfs"):
        raise GeometryError(f"Unknown spanning tree order {tree!r}")
    table = _edge_table(params, grid)
    n = grid.n_nodes
    singular = set(grid.singular)
    first, last = grid.cut_sides
    root = int(first[-1])
    seed = grid.node_id(1, grid.shape[1] - 1)

    regular = np.array([(a not in singular) and (b not in singular) for a, b in zip(table.start, table.end)])
    idx = np.nonzero(regular)[0]
    graph = coo_matrix(
        (np.arange(1, len(idx) + 1), (table.start[idx], table.end[idx])), shape=(n, n)
    ).tocsr()
    order_fn = breadth_first_order if tree == "bfs" else depth_first_order
    order, pred = order_fn(graph, seed, directed=False, return_predecessors=True)

    edge_of: Dict[Tuple[int, int], int] = {}
    for e, (a, b) in enumerate(zip(table.start, table.end)):
        edge_of[(int(a), int(b))] = e
        edge_of[(int(b), int(a))] = e

    X = np.full((n, 3), np.nan)
    r = np.full(n, np.nan, dtype=complex)
    X[root] = 0.0
    r[seed] = np.sqrt(complex(_P(params, grid.nodes[seed]) / (grid.nodes[seed] * _D(params, grid.nodes[seed]))))
    e = edge_of[(seed, root)]
    s = _sign(r[seed], table.q_start[e])
    X[seed] = -_real_step(table.J[e], s)

    def step(u: int, v: int) -> None:
        e = edge_of[(u, v)]
        if table.start[e] == u:
            s = _sign(r[u], table.q_start[e])
            X[v] = X[u] + _real_step(table.J[e], s)
            if v not in singular:
                r[v] = s * table.q_end[e]
        else:
            s = _sign(r[u], table.q_end[e])
            X[v] = X[u] - _real_step(table.J[e], s)
            r[v] = s * table.q_start[e]

    for v in order[1:]:
        step(int(pred[v]), int(v))
    for node in sorted(singular - {root}):
        for u in range(n):
            if (u, node) in edge_of and u not in singular and not np.isnan(X[u, 0]):
                step(u, node)
                break
    if np.isnan(X).any():
        raise GeometryError("Spanning tree does not reach every grid node")

    s = np.where((r[table.start] * np.conj(table.q_start)).real >= 0.0, 1.0, -1.0)
    steps = np.stack(
        [(s * table.J[:, 0]).real, (s * table.J[:, 1]).real, table.J[:, 2].real], axis=1
    )
    cycle = float(np.max(np.linalg.norm(X[table.start] + steps - X[table.end], axis=1)))
    ends = ~np.isin(table.end, list(singular))
    mismatch = np.abs(s[ends] * table.q_end[ends] - r[table.end[ends]])
    branch_residual = float(np.max(mismatch / np.maximum(1.0, np.abs(r[table.end[ends]]))))
    if check and branch_residual > 1e-6:
        raise SymmetryError("branch continuation", branch_residual, 1e-6)
    cut = float(np.max(np.linalg.norm(X[last] - X[first] @ ROTATE_OX3.T, axis=1)))

    r_nodes = r.copy()
    r_nodes[list(singular)] = 0.0
    normals = analytic_normals(params, grid.nodes, r_nodes)
    for node, z0 in grid.singular.items():
        normals[node] = (0.0, 0.0, -1.0) if z0 == 0 else (0.0, 0.0, 1.0)

    mesh = SurfaceMesh(
        vertices=X,
        faces=grid.cells.copy(),
        normals=normals,
        z=grid.nodes.copy(),
        branch=np.ones(n, dtype=int),
        copy_id=np.zeros(n, dtype=int),
        node=np.arange(n),
        tags={tag.value: ids.copy() for tag, ids in grid.boundary_tags.items()},
        info={
            "cycle_residual": cycle,
            "cut_residual": cut,
            "x_node": grid.node_id(grid.shape[0] // 4, grid.shape[1] - 1),
            "cut_a": first,
            "cut_b": last,
            "tree": tree,
            "eps_end": grid.eps_end,
        },
    )
    bound = CLOSURE_RTOL * max(mesh.diameter(), 1e-300)
    logger.info(
        f"Integrated {n} nodes ({tree}); cycle residual {cycle:.3e}, slit residual {cut:.3e}"
    )
    if check and max(cycle, cut) > bound:
        raise AccuracyError("mesh cycle closure", max(cycle, cut), bound)
    return mesh


def _real_step(J: np.ndarray, s: float) -> np.ndarray:
    return np.array([(s * J[0]).real, (s * J[1]).real, J[2].real])


def _transformed(mesh: SurfaceMesh, matrix: np.ndarray, copy: int, flip: bool, branch: int) -> SurfaceMesh:
    faces = mesh.faces[:, ::-1] if flip else mesh.faces
    normals = mesh.normals @ matrix.T
    if flip:
        normals = -normals
    return SurfaceMesh(
        vertices=mesh.vertices @ matrix.T,
        faces=faces.copy(),
        normals=normals,
        z=mesh.z.copy(),
        branch=mesh.branch * branch,
        copy_id=np.full(mesh.n_vertices, copy),
        node=mesh.node.copy(),
        tags={k: v.copy() for k, v in mesh.tags.items()},
    )


def _concatenate(parts: List[SurfaceMesh]) -> SurfaceMesh:
    offsets = np.cumsum([0] + [p.n_vertices for p in parts[:-1]])
    tags: Dict[str, List[np.ndarray]] = {}
    for p, off in zip(parts, offsets):
        for k, v in p.tags.items():
            tags.setdefault(k, []).append(v + off)
    return SurfaceMesh(
        vertices=np.concatenate([p.vertices for p in parts]),
        faces=np.concatenate([p.faces + off for p, off in zip(parts, offsets)]),
        normals=np.concatenate([p.normals for p in parts]),
        z=np.concatenate([p.z for p in parts]),
        branch=np.concatenate([p.branch for p in parts]),
        copy_id=np.concatenate([p.copy_id for p in parts]),
        node=np.concatenate([p.node for p in parts]),
        tags={k: np.concatenate(v) for k, v in tags.items()},
    )


def weld(mesh: SurfaceMesh, pairs: np.ndarray, tol: float) -> Tuple[SurfaceMesh, float]:
    """Merge paired vertices, averaging positions; returns the mismatch too."""
    if len(pairs) == 0:
        return mesh, 0.0
    gap = np.linalg.norm(mesh.vertices[pairs[:, 0]] - mesh.vertices[pairs[:, 1]], axis=1)
    mismatch = float(gap.max())
    if mismatch > tol:
        raise SymmetryError("weld", mismatch, tol)
    n = mesh.n_vertices
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    # relabel by first occurrence so representatives keep the lowest copy
    _, first_index, new_ids = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first_index)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    new_ids = rank[new_ids]
    m = len(order)

    counts = np.bincount(new_ids, minlength=m).astype(float)
    vertices = np.zeros((m, 3))
    np.add.at(vertices, new_ids, mesh.vertices)
    vertices /= counts[:, None]
    rep = np.sort(first_index)

    faces = new_ids[mesh.faces]
    keep = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    tags = {k: np.unique(new_ids[v]) for k, v in mesh.tags.items()}
    welded = SurfaceMesh(
        vertices=vertices,
        faces=faces[keep],
        normals=mesh.normals[rep],
        z=mesh.z[rep],
        branch=mesh.branch[rep],
        copy_id=mesh.copy_id[rep],
        node=mesh.node[rep],
        tags=tags,
        info=dict(mesh.info),
    )
    return welded, mismatch


def detect_axis(half: SurfaceMesh) -> Tuple[np.ndarray, str]:
    """Unit direction of X([0, x]) and the coordinate axis it runs along."""
    direction = half.vertices[half.info["x_node"]]
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        raise GeometryError("X(x) coincides with the basepoint")
    u = direction / norm
    name = ("Ox1", "Ox2", "Ox3")[int(np.argmax(np.abs(u)))]
    return u, name


def assemble_piece(
    half: SurfaceMesh, params: SurfaceParams, tol: Optional[float] = None
) -> SurfaceMesh:
    """Fundamental piece from one sheet over D-.

    The second sheet is the 180 degree rotation about Ox3, welded along the
    slit; the upper half P+ is the 180 degree rotation about the line
    through X([0, x]), welded along the real segments.

    Raises:
        SymmetryError: If paired vertices are further apart than tol
    """
    n = half.n_vertices
    tol = max(get_config().weld_tol, CLOSURE_RTOL * half.diameter()) if tol is None else tol
    axis, axis_name = detect_axis(half)
    rot_axis = _rotation_about(axis)

    parts = [
        _transformed(half, np.eye(3), 0, False, 1),
        _transformed(half, ROTATE_OX3, 1, False, -1),
        _transformed(half, rot_axis, 2, True, 1),
        _transformed(half, rot_axis @ ROTATE_OX3, 3, True, -1),
    ]
    merged = _concatenate(parts)

    cut_a, cut_b = half.info["cut_a"], half.info["cut_b"]
    s_l = half.tags[BoundaryTag.SEG_S_L.value]
    e_s = half.tags[BoundaryTag.SEG_E_S.value]

    def gid(copy: int, ids: np.ndarray) -> np.ndarray:
        return copy * n + ids

    links = [
        (gid(0, cut_b), gid(1, cut_a)),
        (gid(0, cut_a), gid(1, cut_b)),
        (gid(2, cut_b), gid(3, cut_a)),
        (gid(2, cut_a), gid(3, cut_b)),
        (gid(0, s_l), gid(2, s_l)),
        (gid(1, s_l), gid(3, s_l)),
        (gid(0, e_s), gid(3, e_s)),
        (gid(1, e_s), gid(2, e_s)),
    ]
    pairs = np.concatenate([np.stack([a, b], axis=1) for a, b in links])
    piece, mismatch = weld(merged, pairs, tol)
    piece.info.update(
        {
            "axis": axis.tolist(),
            "axis_name": axis_name,
            "weld_mismatch": mismatch,
            "weld_tol": tol,
            "cycle_residual": half.info.get("cycle_residual"),
            "cut_residual": half.info.get("cut_residual"),
            "eps_end": half.info.get("eps_end"),
        }
    )
    logger.info(
        f"Assembled piece: {piece.n_vertices} vertices, {len(piece.faces)} faces, "
        f"axis {axis_name}, weld mismatch {mismatch:.3e}"
    )
    return piece


def arc_plane(piece: SurfaceMesh) -> Tuple[np.ndarray, float]:
    """Unit normal n and offset d > 0 of the plane n.X = d through the copy-0 arc."""
    pts = piece.vertices[piece.tagged(BoundaryTag.ARC_A_E.value, copy=0)]
    if len(pts) < 3:
        raise GeometryError("Too few arc vertices to fit the symmetry plane")
    centre = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centre)
    normal = vt[-1]
    offset = float(normal @ centre)
    if offset < 0:
        normal, offset = -normal, -offset
    return normal, offset


def _translation_mismatch(piece: SurfaceMesh, normal: np.ndarray, offset: float) -> float:
    """Largest distance of an arc vertex from the planes n.X = +d and n.X = -d."""
    heights = piece.vertices[piece.tags.get(BoundaryTag.ARC_A_E.value, [])] @ normal
    if not np.any(heights < 0.0):
        raise GeometryError("No arc vertices on the far side of the piece")
    return float(np.max(np.abs(np.abs(heights) - offset)))


def _region_seams(tiled: SurfaceMesh, normal: np.ndarray, offset: float, copies: int) -> np.ndarray:
    """Vertex pairs joining the arcs shared by neighbouring regions."""
    arc = tiled.tags[BoundaryTag.ARC_A_E.value]
    region = tiled.copy_id[arc] // 4
    heights = tiled.vertices[arc] @ normal
    pairs = []
    for k in range(2 * copies):
        seam = (2 * (k - copies) + 1) * offset
        near = np.abs(heights - seam) < offset
        left = arc[near & (region == k)]
        right = arc[near & (region == k + 1)]
        if len(left) == 0 or len(right) == 0:
            raise GeometryError(f"Regions {k} and {k + 1} share no arc vertices")
        _, idx = cKDTree(tiled.vertices[right]).query(tiled.vertices[left])
        pairs.append(np.stack([left, right[idx]], axis=1))
    return np.concatenate(pairs)


def tile_surface(piece: SurfaceMesh, copies: int, tol: Optional[float] = None) -> SurfaceMesh:
    """Lay out 2 * copies + 1 fundamental regions along the translation direction.

    Odd regions are mirror images in the arc plane; the translation is
    twice the distance between the two arc planes of the piece. Every arc
    vertex must lie within tol of one of those planes, and neighbouring
    regions are welded along the arc they share.

    Raises:
        GeometryError: If copies is negative or the arcs are missing
        SymmetryError: If the arcs are off their planes or the seams do not close
    """
    if copies < 0:
        raise GeometryError(f"copies must be non-negative, got {copies}")
    tol = max(get_config().weld_tol, CLOSURE_RTOL * piece.diameter()) if tol is None else tol
    normal, offset = arc_plane(piece)
    mismatch = _translation_mismatch(piece, normal, offset)
    if mismatch > tol:
        raise SymmetryError("translation", mismatch, tol)
    translation = 4.0 * offset * normal
    if copies == 0:
        tiled = _concatenate([piece])
        tiled.info = dict(
            piece.info, translation=translation.tolist(), translation_mismatch=mismatch, regions=1
        )
        return tiled

    reflect = np.eye(3) - 2.0 * np.outer(normal, normal)
    shift_reflected = 2.0 * offset * normal
    regions = []
    for k in range(-copies, copies + 1):
        if k % 2 == 0:
            part = _transformed(piece, np.eye(3), 0, False, 1)
            part.vertices = part.vertices + (k // 2) * translation
        else:
            part = _transformed(piece, reflect, 0, True, 1)
            part.normals = -part.normals
            part.vertices = part.vertices + shift_reflected + ((k - 1) // 2) * translation
        part.copy_id = piece.copy_id + 4 * (k + copies)
        regions.append(part)
    merged = _concatenate(regions)
    tiled, seam_mismatch = weld(merged, _region_seams(merged, normal, offset, copies), tol)
    tiled.info = dict(
        piece.info,
        translation=translation.tolist(),
        translation_mismatch=mismatch,
        seam_mismatch=seam_mismatch,
        regions=len(regions),
    )
    logger.info(
        f"Tiled {len(regions)} regions, translation {translation}, "
        f"seam mismatch {seam_mismatch:.3e}"
    )
    return tiled
