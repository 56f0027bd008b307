import numpy as np
import pytest

from wall_strain.core.contours import Contour, ReferencePoint
from wall_strain.core.fem import DisplacementSolution
from wall_strain.core.mesh import Mesh, build_annular_mesh
from wall_strain.core.strain import (
    StrainField,
    compute_strain_field,
    element_strain,
    nodal_strain_average,
    radial_displacement,
    sector_aggregate,
    sector_index,
)
from wall_strain.errors import NodeAtReference

from .conftest import ellipse_points

ORIGIN = ReferencePoint((0.0, 0.0))
TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def unit_circle(deg):
    rad = np.radians(np.atleast_1d(deg))
    return np.column_stack([np.cos(rad), np.sin(rad)])


class TestElementStrain:
    @pytest.mark.parametrize("field, expected", [
        (lambda x, y: (x, 0 * y), (1.0, 0.0, 0.0)),
        (lambda x, y: (0 * x, y), (0.0, 1.0, 0.0)),
        (lambda x, y: (y, 0 * x), (0.0, 0.0, 1.0)),
    ])
    def test_unit_triangle(self, field, expected):
        u, v = field(TRIANGLE[:, 0], TRIANGLE[:, 1])
        sol = DisplacementSolution(np.column_stack([u, v]))
        np.testing.assert_allclose(element_strain([0, 1, 2], TRIANGLE, sol), expected, atol=1e-15)

    def test_affine_field_is_constant_on_mesh(self):
        mesh = build_annular_mesh(Contour(ellipse_points(3, 2, n=20)), Contour(ellipse_points(5, 4, n=20)), 3)
        G = np.array([[0.01, -0.004], [0.002, 0.03]])
        sol = DisplacementSolution(mesh.nodes @ G.T + [1.0, -2.0])
        field = compute_strain_field(mesh, sol)
        expected = [G[0, 0], G[1, 1], G[0, 1] + G[1, 0]]
        np.testing.assert_allclose(field.values, np.tile(expected, (mesh.n_elements, 1)), atol=1e-14)
        assert np.all(field.areas > 0)

    @pytest.mark.parametrize("angle", [0.0, 1e-6])
    def test_rigid_motion_is_strain_free(self, angle):
        mesh = build_annular_mesh(Contour(ellipse_points(3, 2, n=20)), Contour(ellipse_points(5, 4, n=20)), 3)
        rot = np.array([[0.0, -angle], [angle, 0.0]])
        sol = DisplacementSolution(mesh.nodes @ rot.T + [0.3, 0.7])
        assert np.abs(compute_strain_field(mesh, sol).values).max() < 1e-12


class TestNodalAverage:
    def test_single_element(self):
        mesh = Mesh.from_triangles(TRIANGLE, [[0, 1, 2]])
        field = StrainField(np.array([[0.1, 0.2, 0.3]]), np.array([0.5]), np.array([[1 / 3, 1 / 3]]))
        np.testing.assert_allclose(nodal_strain_average(mesh, field), np.tile([0.1, 0.2, 0.3], (3, 1)))

    def test_area_weighting(self):
        nodes = [[0, 0], [1, 0], [0, 2], [0, -2], [3, 0]]
        mesh = Mesh.from_triangles(nodes, [[0, 1, 2], [0, 3, 4]])
        np.testing.assert_allclose(mesh.element_areas, [1.0, 3.0])
        field = StrainField(np.array([[0.0, 0.0, 0.0], [4.0, 0.0, 0.0]]), mesh.element_areas,
                            mesh.element_centroids)
        assert nodal_strain_average(mesh, field)[0, 0] == pytest.approx(3.0)


class TestRadialDisplacement:
    @pytest.mark.parametrize("node, disp, expected", [
        ((2.0, 0.0), (1.0, 0.0), 1.0),
        ((0.0, 3.0), (1.0, 0.0), 0.0),
        ((1.0, 1.0), (1.0, 1.0), np.sqrt(2.0)),
    ])
    def test_projection(self, node, disp, expected):
        sol = DisplacementSolution(np.array([disp]))
        assert radial_displacement(sol, np.array([node]), ORIGIN)[0] == pytest.approx(expected)

    def test_node_at_reference(self):
        sol = DisplacementSolution(np.zeros((2, 2)))
        with pytest.raises(NodeAtReference):
            radial_displacement(sol, np.array([[1.0, 0.0], [0.0, 0.0]]), ORIGIN)


class TestSectors:
    @pytest.mark.parametrize("deg, sector", [(10.0, 1), (350.0, 16), (0.0, 1), (100.0, 5), (190.0, 9)])
    def test_sector_index(self, deg, sector):
        assert sector_index(unit_circle(deg), ORIGIN, 16).tolist() == [sector]

    def test_uniform_field(self):
        positions = unit_circle(np.arange(0.5, 360.0, 3.0))
        values = np.tile([0.02, -0.01, 0.005], (len(positions), 1))
        report = sector_aggregate(values, positions, ORIGIN, 16)
        np.testing.assert_allclose(report.means, np.tile([0.02, -0.01, 0.005], (16, 1)))
        assert report.counts.sum() == len(positions)

    def test_weighted_sum_is_conserved(self):
        rng = np.random.default_rng(11)
        positions = unit_circle(rng.uniform(0, 360, 300)) * rng.uniform(1, 2, (300, 1))
        values = rng.normal(size=(300, 3))
        weights = rng.uniform(0.1, 1.0, 300)
        report = sector_aggregate(values, positions, ORIGIN, 16, weights=weights)
        np.testing.assert_allclose((report.means * report.weights[:, None]).sum(axis=0),
                                   (values * weights[:, None]).sum(axis=0))

    def test_single_sector_is_global_mean(self):
        rng = np.random.default_rng(5)
        positions = unit_circle(rng.uniform(0, 360, 50))
        values = rng.normal(size=(50, 3))
        weights = rng.uniform(0.5, 2.0, 50)
        report = sector_aggregate(values, positions, ORIGIN, 1, weights=weights)
        np.testing.assert_allclose(report.means[0], np.average(values, axis=0, weights=weights))

    def test_empty_sector_is_absent(self):
        positions = unit_circle([5.0, 100.0, 200.0, 300.0])
        report = sector_aggregate(np.ones((4, 3)), positions, ORIGIN, 8)
        assert report.empty_sectors == [2, 4, 6, 8]
        assert np.isnan(report.means[1]).all()
        assert not np.isnan(report.means[0]).any()

    def test_frame_layout(self):
        report = sector_aggregate(np.ones((4, 3)), unit_circle([5.0, 100.0, 200.0, 300.0]), ORIGIN, 4)
        df = report.to_frame()
        assert df.columns.tolist() == ["sector", "mean_eps_x", "mean_eps_y", "mean_gamma_xy"]
        assert df["sector"].tolist() == [1, 2, 3, 4]
