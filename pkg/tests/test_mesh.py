"""Tests for grid construction, surface assembly and discrete checks."""

import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from periodforge.core.exceptions import GeometryError, SymmetryError
from periodforge.mesh import (
    BoundaryTag,
    SurfaceMesh,
    assemble_piece,
    boundary_loops,
    build_grid,
    discrete_checks,
    fit_catenoidal_end,
    integrate_surface,
    tile_surface,
)
from periodforge.mesh.checks import (
    boundary_edges,
    end_loop_count,
    face_areas,
    gauss_map_deviation,
    mean_curvature_rms,
)
from periodforge.mesh.grid import MIN_RESOLUTION, boundary_nodes, graded
from periodforge.mesh.surface import CLOSURE_RTOL, ROTATE_OX3, arc_plane, detect_axis, weld


def make_mesh(vertices, faces, **extra) -> SurfaceMesh:
    vertices = np.asarray(vertices, dtype=float)
    n = len(vertices)
    fields = dict(
        vertices=vertices,
        faces=np.asarray(faces, dtype=int).reshape(-1, 3),
        normals=np.tile([0.0, 0.0, 1.0], (n, 1)),
        z=np.zeros(n, dtype=complex),
        branch=np.ones(n, dtype=int),
        copy_id=np.zeros(n, dtype=int),
        node=np.arange(n),
    )
    fields.update(extra)
    return SurfaceMesh(**fields)


def hexagon_fan() -> SurfaceMesh:
    """Flat fan of six triangles around the origin."""
    angles = np.arange(6) * math.pi / 3
    ring = np.stack([np.cos(angles), np.sin(angles), np.zeros(6)], axis=1)
    vertices = np.vstack([[0.0, 0.0, 0.0], ring])
    faces = [[0, k + 1, (k + 1) % 6 + 1] for k in range(6)]
    return make_mesh(vertices, faces)


class TestGrid:
    """Test the domain triangulation."""

    def test_graded(self):
        points = graded(16, 1.5)

        assert len(points) == 17
        assert points[0] == 0.0
        assert points[-1] == pytest.approx(1.0)
        assert np.all(np.diff(points) > 0)
        np.testing.assert_allclose(points, 1.0 - points[::-1], atol=1e-14)

    def test_boundary_nodes(self, half_i_params):
        nodes = boundary_nodes(half_i_params, 8, 1.5)

        assert len(nodes) == 33
        assert nodes[0] == 0 and nodes[-1] == 0
        assert nodes[8] == pytest.approx(0.5)
        assert nodes[16] == pytest.approx(1.0)
        assert nodes[24] == pytest.approx(-1j)
        assert np.all(np.abs(nodes) <= 1.0 + 1e-12)
        assert np.all(nodes.imag <= 1e-12)

    def test_build_grid(self, half_i_params):
        grid = build_grid(half_i_params, MIN_RESOLUTION)

        assert grid.shape == (4 * 8 + 1, 9)
        assert grid.n_nodes == 33 * 9
        assert set(grid.boundary_tags) == set(BoundaryTag)
        assert np.all(grid.signed_areas() > 0)
        assert np.all(np.abs(grid.nodes - grid.ybar) >= grid.eps_end * (1 - 1e-12))
        assert np.all(grid.nodes.imag <= 1e-12)
        assert sorted(grid.singular.values(), key=abs) == [0j, 0j, 0.5]

    def test_grid_eps_default(self, half_i_params):
        grid = build_grid(half_i_params, 8)
        assert grid.eps_end == pytest.approx(0.05 * 0.5)

    def test_node_count_quadratic(self, half_i_params):
        small = build_grid(half_i_params, 8).n_nodes
        large = build_grid(half_i_params, 16).n_nodes
        assert 3.5 < large / small < 4.5

    def test_cut_sides(self, half_i_params):
        grid = build_grid(half_i_params, 8)
        first, last = grid.cut_sides

        np.testing.assert_allclose(grid.nodes[first], grid.nodes[last])
        assert grid.nodes[first[-1]] == 0

    def test_resolution_too_small(self, half_i_params):
        with pytest.raises(GeometryError):
            build_grid(half_i_params, 4)

    def test_end_disk_meets_boundary(self, half_i_params):
        with pytest.raises(GeometryError):
            build_grid(half_i_params, 8, eps_end=0.6)


class TestIntegrateUnsolved:
    """The immersion over the slit domain is single-valued for any tuple."""

    def test_basepoint_and_cycles(self, half_i_params):
        grid = build_grid(half_i_params, 16)
        mesh = integrate_surface(half_i_params, grid, check=False)
        root = int(grid.cut_sides[0][-1])

        np.testing.assert_array_equal(mesh.vertices[root], 0.0)
        assert mesh.info["cycle_residual"] < CLOSURE_RTOL * mesh.diameter()
        np.testing.assert_allclose(mesh.normals[root], [0.0, 0.0, -1.0])
        np.testing.assert_allclose(np.linalg.norm(mesh.normals, axis=1), 1.0, atol=1e-10)

    def test_tree_orders_agree(self, half_i_params):
        grid = build_grid(half_i_params, 12)
        bfs = integrate_surface(half_i_params, grid, tree="bfs", check=False)
        dfs = integrate_surface(half_i_params, grid, tree="dfs", check=False)

        gap = np.max(np.linalg.norm(bfs.vertices - dfs.vertices, axis=1))
        assert gap < CLOSURE_RTOL * bfs.diameter()
        assert dfs.info["tree"] == "dfs"

    def test_unknown_tree(self, half_i_params):
        grid = build_grid(half_i_params, 8)
        with pytest.raises(GeometryError):
            integrate_surface(half_i_params, grid, tree="random")


class TestWeldAndAxis:
    """Test the assembly primitives on synthetic meshes."""

    def test_weld_merges_pairs(self):
        mesh = make_mesh(
            [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 0, 1e-12], [0, 1, 0], [1, 1, 0]],
            [[0, 1, 2], [3, 5, 4]],
            tags={"edge": np.array([1, 2, 3, 4])},
        )

        welded, mismatch = weld(mesh, np.array([[1, 3], [2, 4]]), tol=1e-9)

        assert welded.n_vertices == 4
        assert mismatch == pytest.approx(1e-12)
        assert len(welded.faces) == 2
        assert welded.faces.max() == 3
        np.testing.assert_array_equal(welded.tags["edge"], [1, 2])

    def test_weld_rejects_gap(self):
        mesh = make_mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 0, 1e-3]], [[0, 1, 2]])

        with pytest.raises(SymmetryError) as exc_info:
            weld(mesh, np.array([[1, 3]]), tol=1e-9)

        assert exc_info.value.residual == pytest.approx(1e-3)

    def test_weld_nothing(self):
        mesh = hexagon_fan()
        welded, mismatch = weld(mesh, np.zeros((0, 2), dtype=int), tol=1e-9)
        assert welded is mesh
        assert mismatch == 0.0

    def test_detect_axis(self):
        mesh = make_mesh([[0, 0, 0], [0.01, -2.0, 0.0]], [], info={"x_node": 1})

        axis, name = detect_axis(mesh)

        assert name == "Ox2"
        assert np.linalg.norm(axis) == pytest.approx(1.0)

    def test_detect_axis_degenerate(self):
        mesh = make_mesh([[0, 0, 0]], [], info={"x_node": 0})
        with pytest.raises(GeometryError):
            detect_axis(mesh)


class TestTilingSynthetic:
    """Test tiling with a piece whose arcs lie in the planes x1 = 1 and x1 = -1."""

    def make_piece(self, far_x1: float = -1.0) -> SurfaceMesh:
        vertices = [
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [1.0, 0.0, 1.0],
            [-1.0, 0.0, 0.0],
            [-1.0, 1.0, 0.0],
            [far_x1, 0.0, 1.0],
            [0.2, 0.3, 0.1],
        ]
        return make_mesh(
            vertices,
            [[0, 1, 6], [1, 2, 6], [4, 3, 6], [5, 4, 6]],
            copy_id=np.array([0, 0, 0, 1, 1, 1, 0]),
            tags={BoundaryTag.ARC_A_E.value: np.arange(6)},
            info={"axis": [0.0, 1.0, 0.0]},
        )

    def test_arc_plane(self):
        normal, offset = arc_plane(self.make_piece())

        np.testing.assert_allclose(normal, [1.0, 0.0, 0.0], atol=1e-12)
        assert offset == pytest.approx(1.0)

    def test_no_copies(self):
        piece = self.make_piece()
        tiled = tile_surface(piece, 0)

        np.testing.assert_array_equal(tiled.vertices, piece.vertices)
        assert tiled.info["regions"] == 1
        assert tiled.info["translation_mismatch"] == pytest.approx(0.0, abs=1e-12)

    def test_three_regions_are_welded(self):
        """Test neighbouring regions share their seam vertices instead of duplicating them."""
        piece = self.make_piece()
        tiled = tile_surface(piece, 1)

        assert tiled.info["regions"] == 3
        np.testing.assert_allclose(tiled.info["translation"], [4.0, 0.0, 0.0], atol=1e-12)
        assert tiled.n_vertices == 3 * piece.n_vertices - 2 * 3
        assert len(tiled.faces) == 3 * len(piece.faces)
        assert tiled.info["seam_mismatch"] == pytest.approx(0.0, abs=1e-12)
        assert tiled.vertices[:, 0].min() == pytest.approx(-3.0)
        assert tiled.vertices[:, 0].max() == pytest.approx(3.0)
        assert len(cKDTree(tiled.vertices).query_pairs(1e-9)) == 0

    def test_five_regions(self):
        piece = self.make_piece()
        tiled = tile_surface(piece, 2)

        assert tiled.n_vertices == 5 * piece.n_vertices - 4 * 3
        assert tiled.vertices[:, 0].max() == pytest.approx(5.0)

    def test_seam_mismatch_recorded(self):
        """Test an arc vertex slightly off its plane opens the seam by twice the offset."""
        tiled = tile_surface(self.make_piece(far_x1=-1.001), 1, tol=1e-2)

        assert tiled.info["translation_mismatch"] == pytest.approx(1e-3)
        assert tiled.info["seam_mismatch"] == pytest.approx(2e-3)

    def test_translation_mismatch(self):
        """Test arcs that are not on parallel planes cannot be tiled by a translation."""
        with pytest.raises(SymmetryError) as exc_info:
            tile_surface(self.make_piece(far_x1=-1.1), 1)

        assert exc_info.value.what == "translation"

    def test_missing_far_arc(self):
        piece = self.make_piece()
        piece.tags = {BoundaryTag.ARC_A_E.value: np.arange(3)}

        with pytest.raises(GeometryError):
            tile_surface(piece, 1)

    def test_negative_copies(self):
        with pytest.raises(GeometryError):
            tile_surface(self.make_piece(), -1)


class TestChecksSynthetic:
    """Test the discrete check helpers on small flat meshes."""

    def test_face_areas(self):
        areas = face_areas(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float), np.array([[0, 1, 2]]))
        assert areas == pytest.approx([0.5])

    def test_boundary(self):
        mesh = hexagon_fan()

        assert len(boundary_edges(mesh.faces)) == 6
        loops = boundary_loops(mesh)
        assert len(loops) == 1
        assert sorted(loops[0].tolist()) == [1, 2, 3, 4, 5, 6]

    def test_end_loop_count(self):
        mesh = hexagon_fan()
        assert end_loop_count(mesh) == 0

        mesh.tags[BoundaryTag.END_CUT.value] = np.arange(1, 7)
        assert end_loop_count(mesh) == 1

    def test_flat_mean_curvature(self):
        assert mean_curvature_rms(hexagon_fan(), np.array([0])) == pytest.approx(0.0, abs=1e-12)

    def test_gauss_map_sign_insensitive(self):
        mesh = hexagon_fan()
        mesh.normals = -mesh.normals
        assert gauss_map_deviation(mesh, np.array([0])) == pytest.approx(0.0, abs=1e-7)

    def test_checks_need_faces(self, half_i_params):
        with pytest.raises(GeometryError):
            discrete_checks(SurfaceMesh.empty(), half_i_params)

    def test_checks_need_axis(self, half_i_params):
        with pytest.raises(GeometryError):
            discrete_checks(hexagon_fan(), half_i_params)


class TestEndFitSynthetic:
    """Test the logarithmic end fit on exact samples."""

    def test_exact_fit(self, half_i_params):
        radii = np.geomspace(0.5, 5.0, 12)
        angles = np.linspace(0.0, 2.0 * math.pi, 12, endpoint=False)
        x1, x2 = radii * np.cos(angles), radii * np.sin(angles)
        x3 = 0.25 * np.log(x1**2 + x2**2) + 1.0
        mesh = make_mesh(
            np.stack([x1, x2, x3], axis=1),
            [],
            z=np.full(12, half_i_params.ybar + 0.01),
        )

        fit = fit_catenoidal_end(mesh, half_i_params, radius=0.1)

        assert fit.eta == pytest.approx(0.5)
        assert fit.mu == pytest.approx(1.0)
        assert fit.rms == pytest.approx(0.0, abs=1e-12)
        assert fit.samples == 12
        assert fit.predicted_eta == pytest.approx(-0.4)

    def test_too_few_samples(self, half_i_params):
        mesh = make_mesh([[1.0, 0.0, 0.0]], [], z=np.array([half_i_params.ybar]))
        with pytest.raises(GeometryError):
            fit_catenoidal_end(mesh, half_i_params, radius=0.1)

    def test_radius_required(self, half_i_params):
        with pytest.raises(GeometryError):
            fit_catenoidal_end(hexagon_fan(), half_i_params)


@pytest.mark.slow
class TestSolvedPiece:
    """End-to-end geometry of a solved fundamental piece."""

    def test_assembly_metadata(self, solved_piece):
        assert solved_piece.info["axis_name"] in ("Ox1", "Ox2", "Ox3")
        assert solved_piece.info["weld_mismatch"] <= solved_piece.info["weld_tol"]
        assert set(np.unique(solved_piece.copy_id)) == {0, 1, 2, 3}

    def test_symmetries(self, solved_piece, mesh_params):
        report = discrete_checks(solved_piece, mesh_params)
        scale = solved_piece.diameter()

        assert report.end_loops == 2
        assert report.line_deviation < 1e-6 * scale
        assert report.plane_deviation < 1e-6 * scale
        assert report.rotation_deviation < 1e-6 * scale
        assert report.axis_orthogonality < 1e-4
        assert report.gauss_map_max_angle < math.radians(5.0)
        assert report.conformality_deviation < 0.25

    def test_rotation_invariance(self, solved_piece):
        tree = cKDTree(solved_piece.vertices)
        distances, _ = tree.query(solved_piece.vertices @ ROTATE_OX3.T)
        assert distances.max() < 1e-6 * solved_piece.diameter()

    def test_mean_curvature_refines(self, mesh_params, solved_piece):
        coarse_half = integrate_surface(mesh_params, build_grid(mesh_params, 16))
        coarse = discrete_checks(assemble_piece(coarse_half, mesh_params), mesh_params)
        fine = discrete_checks(solved_piece, mesh_params)

        assert fine.mean_curvature_rms < 0.75 * coarse.mean_curvature_rms
        assert fine.gauss_map_max_angle < coarse.gauss_map_max_angle

    def test_tiling(self, solved_piece):
        tiled = tile_surface(solved_piece, 1)
        translation = np.asarray(tiled.info["translation"])
        scale = solved_piece.diameter()

        assert abs(translation[2]) < 1e-8 * np.linalg.norm(translation)
        assert tiled.info["translation_mismatch"] < 1e-6 * scale
        assert tiled.info["seam_mismatch"] < 1e-6 * scale
        seam = len(solved_piece.tagged(BoundaryTag.ARC_A_E.value))
        assert tiled.n_vertices < 3 * solved_piece.n_vertices
        assert tiled.n_vertices >= 3 * solved_piece.n_vertices - 2 * seam

    def test_end_growth_sign(self, solved_piece, mesh_params):
        fit = fit_catenoidal_end(solved_piece, mesh_params)

        assert fit.samples >= 3
        assert np.sign(fit.eta) == np.sign(fit.predicted_eta)


@pytest.fixture(scope="module")
def refined_pieces(mesh_params):
    """Assembled pieces of mesh_params at resolutions 64 and 128."""
    return {
        n: assemble_piece(integrate_surface(mesh_params, build_grid(mesh_params, n)), mesh_params)
        for n in (64, 128)
    }


@pytest.mark.slow
class TestRefinedPiece:
    """Geometry of the solved piece at production resolutions."""

    def test_path_independence(self, refined_pieces):
        piece = refined_pieces[64]
        assert piece.info["cycle_residual"] < 1e-8 * piece.diameter()

    def test_symmetries_at_64(self, refined_pieces, mesh_params):
        piece = refined_pieces[64]
        report = discrete_checks(piece, mesh_params)
        scale = piece.diameter()

        assert report.line_deviation < 1e-6 * scale
        assert report.plane_deviation < 1e-6 * scale
        assert report.rotation_deviation < 1e-6 * scale
        assert report.axis_orthogonality < 1e-4
        assert report.gauss_map_max_angle < math.radians(2.0)
        assert report.conformality_deviation < 0.05

    def test_mean_curvature_shrinks(self, refined_pieces, mesh_params):
        coarse = discrete_checks(refined_pieces[64], mesh_params)
        fine = discrete_checks(refined_pieces[128], mesh_params)

        assert fine.mean_curvature_rms <= 0.6 * coarse.mean_curvature_rms
        assert fine.gauss_map_max_angle < coarse.gauss_map_max_angle
