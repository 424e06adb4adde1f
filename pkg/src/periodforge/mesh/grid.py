"""Triangulation of the lower half disk around the end at ybar.

Nodes sit on rays from ybar to a graded sample of the boundary, at radii
growing geometrically from the end cut. The boundary is walked
0 -> x -> 1 -> -i -> -1 -> 0, so the first and last rays both end at
z = 0; they are kept as two copies, which slits the annulus into a disk
on which w has a single-valued branch.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from ..core.config import get_config
from ..core.exceptions import GeometryError
from ..core.params import SurfaceParams

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 8


class BoundaryTag(str, Enum):
    SEG_E_S = "seg_E_S"
    SEG_S_L = "seg_S_L"
    SEG_L_A = "seg_L_A"
    ARC_A_E = "arc_A_E"
    END_CUT = "end_cut"


@dataclass
class DomainGrid:
    """Structured ray/level triangulation of D- minus a disk around ybar."""

    nodes: np.ndarray
    cells: np.ndarray
    boundary_tags: Dict[BoundaryTag, np.ndarray]
    shape: Tuple[int, int]
    ybar: complex
    eps_end: float
    singular: Dict[int, complex] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def node_id(self, ray: int, level: int) -> int:
        return ray * self.shape[1] + level

    @property
    def cut_sides(self) -> Tuple[np.ndarray, np.ndarray]:
        """Node ids of the first and last ray, ordered from the end cut outward."""
        n_rays, n_levels = self.shape
        first = np.arange(n_levels)
        return first, first + (n_rays - 1) * n_levels

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted id pairs."""
        c = self.cells
        pairs = np.concatenate([c[:, [0, 1]], c[:, [1, 2]], c[:, [2, 0]]])
        pairs.sort(axis=1)
        return np.unique(pairs, axis=0)

    def signed_areas(self) -> np.ndarray:
        a, b, c = (self.nodes[self.cells[:, i]] for i in range(3))
        return 0.5 * ((b - a).conjugate() * (c - a)).imag


def graded(n: int, ratio: float, max_ratio: float = 16.0) -> np.ndarray:
    """n + 1 points of [0, 1] refined geometrically toward both ends."""
    k = np.arange(n)
    cap = max(0, int(math.floor(math.log(max_ratio) / math.log(ratio))))
    exponent = np.minimum(np.minimum(k, n - 1 - k), cap)
    sizes = ratio ** exponent.astype(float)
    points = np.concatenate([[0.0], np.cumsum(sizes)])
    return points / points[-1]


def boundary_nodes(params: SurfaceParams, n: int, ratio: float) -> np.ndarray:
    """4n + 1 boundary samples, starting and ending at z = 0."""
    g = graded(n, ratio)
    x = params.x
    seg_s_l = x * g
    seg_l_a = x + (1.0 - x) * g
    arc = np.exp(-1j * math.pi * g)
    arc[0], arc[-1] = 1.0, -1.0
    seg_e_s = -1.0 + g
    seg_s_l[-1] = x
    return np.concatenate([seg_s_l, seg_l_a[1:], arc[1:], seg_e_s[1:]]).astype(complex)


def distance_to_boundary(z: complex) -> float:
    return min(-z.imag, 1.0 - abs(z))


def build_grid(
    params: SurfaceParams,
    resolution: int,
    eps_end: Optional[float] = None,
    levels: Optional[int] = None,
) -> DomainGrid:
    """Graded triangulation of D- minus the end disk at ybar.

    Args:
        params: Tuple fixing x and ybar
        resolution: Boundary segments per side; also the number of radial levels
        eps_end: End cut radius, a fraction of the distance to the boundary by default
        levels: Radial levels, ``resolution`` when omitted

    Raises:
        GeometryError: If the resolution is too small or the end disk meets the boundary
    """
    if resolution < MIN_RESOLUTION:
        raise GeometryError(f"resolution must be at least {MIN_RESOLUTION}, got {resolution}")
    config = get_config()
    ybar = params.ybar
    room = distance_to_boundary(ybar)
    if room <= 0.0:
        raise GeometryError(f"ybar={ybar} is not interior to the lower half disk")
    if eps_end is None:
        eps_end = config.eps_end_fraction * room
    if not 0.0 < eps_end < room:
        raise GeometryError(
            f"End cut radius {eps_end:g} must lie in (0, {room:g}) for ybar={ybar}"
        )
    n_levels = (levels or resolution) + 1

    outer = boundary_nodes(params, resolution, config.grid_grading)
    n_rays = len(outer)
    direction = outer - ybar
    reach = np.abs(direction)
    frac = np.linspace(0.0, 1.0, n_levels)
    radii = eps_end * (reach[:, None] / eps_end) ** frac[None, :]
    nodes = ybar + radii * (direction / reach)[:, None]
    nodes[:, -1] = outer
    nodes = nodes.reshape(-1)

    ids = np.arange(n_rays * n_levels).reshape(n_rays, n_levels)
    a = ids[:-1, :-1].ravel()
    b = ids[1:, :-1].ravel()
    c = ids[:-1, 1:].ravel()
    d = ids[1:, 1:].ravel()
    cells = np.concatenate([np.stack([a, b, c], axis=1), np.stack([b, d, c], axis=1)])

    n = resolution
    last = n_levels - 1
    tags = {
        BoundaryTag.SEG_S_L: ids[0 : n + 1, last],
        BoundaryTag.SEG_L_A: ids[n : 2 * n + 1, last],
        BoundaryTag.ARC_A_E: ids[2 * n : 3 * n + 1, last],
        BoundaryTag.SEG_E_S: ids[3 * n : 4 * n + 1, last],
        BoundaryTag.END_CUT: ids[:, 0],
    }
    singular = {
        int(ids[0, last]): 0j,
        int(ids[n, last]): complex(params.x),
        int(ids[-1, last]): 0j,
    }
    grid = DomainGrid(
        nodes=nodes,
        cells=cells,
        boundary_tags=tags,
        shape=(n_rays, n_levels),
        ybar=ybar,
        eps_end=eps_end,
        singular=singular,
    )
    if np.any(grid.signed_areas() <= 0.0):
        raise GeometryError("Triangulation has cells with non-positive orientation")
    logger.debug(
        f"Built grid with {grid.n_nodes} nodes and {len(cells)} cells, eps_end={eps_end:.3e}"
    )
    return grid
