# pylint: disable=missing-function-docstring, missing-module-docstring, missing-class-docstring

import math
import unittest

import numpy as np

from msktap.core import ConfigurationError
from msktap.geometry import SensitivityDomain, SensitivityTable, contains, quadrature
from msktap.state import SpaceGrid, VelocityGrid


class TestSensitivityDomain(unittest.TestCase):
    def test_from_degrees(self):
        dom = SensitivityDomain.from_degrees(90.0, 2.0)
        self.assertAlmostEqual(dom.half_angle, math.pi / 2)
        self.assertFalse(dom.is_full_disk)

    def test_full_disk(self):
        self.assertTrue(SensitivityDomain.from_degrees(180.0, 1.0).is_full_disk)

    def test_rejects_zero_half_angle(self):
        with self.assertRaises(ConfigurationError):
            SensitivityDomain(0.0, 1.0)

    def test_rejects_nonpositive_radius(self):
        with self.assertRaises(ConfigurationError):
            SensitivityDomain(1.0, 0.0)

    def test_rejects_unknown_weighting(self):
        with self.assertRaises(ConfigurationError):
            SensitivityDomain(1.0, 1.0, "gaussian")


class TestContains(unittest.TestCase):
    def setUp(self):
        self.space = SpaceGrid(10.0, 10.0, 10, 10, "absorbing")
        self.dom = SensitivityDomain.from_degrees(60.0, 2.0)
        self.x = np.array([5.0, 5.0])
        self.omega = np.array([1.0, 0.0])

    def test_vertex(self):
        self.assertTrue(contains(self.dom, self.x, self.omega, self.x, self.space))

    def test_on_axis_interior_point(self):
        self.assertTrue(contains(self.dom, self.x, self.omega, self.x + 1.0 * self.omega, self.space))

    def test_behind_the_particle(self):
        self.assertFalse(contains(self.dom, self.x, self.omega, self.x - 1.0 * self.omega, self.space))

    def test_beyond_the_radius(self):
        self.assertFalse(contains(self.dom, self.x, self.omega, self.x + 2.5 * self.omega, self.space))

    def test_undefined_heading_uses_full_disk(self):
        self.assertTrue(contains(self.dom, self.x, np.zeros(2), self.x - 1.0 * self.omega, self.space))

    def test_periodic_wrap(self):
        space = SpaceGrid(10.0, 10.0, 10, 10)
        self.assertTrue(contains(self.dom, np.array([9.5, 5.0]), self.omega, np.array([0.5, 5.0]), space))


class TestQuadrature(unittest.TestCase):
    def test_full_coverage(self):
        # Arrange
        space = SpaceGrid(4.0, 4.0, 4, 4)
        dom = SensitivityDomain.from_degrees(180.0, 10.0)

        # Act
        members = quadrature(dom, 5, np.array([1.0, 0.0]), space)

        # Assert
        self.assertEqual(sorted(cell for cell, _ in members), list(range(16)))
        self.assertAlmostEqual(sum(weight for _, weight in members), 1.0, places=14)

    def test_degenerate_radius_keeps_home_cell(self):
        space = SpaceGrid(4.0, 4.0, 4, 4)
        dom = SensitivityDomain.from_degrees(180.0, 0.4)
        self.assertEqual(quadrature(dom, 6, np.array([0.0, 1.0]), space), [(6, 1.0)])

    def test_indicator_weights_are_cell_areas(self):
        space = SpaceGrid(8.0, 8.0, 4, 4)
        dom = SensitivityDomain.from_degrees(180.0, 2.5, "indicator")
        members = quadrature(dom, 5, np.array([1.0, 0.0]), space)
        self.assertTrue(all(weight == 4.0 for _, weight in members))

    def test_sector_matches_center_testing(self):
        # Arrange
        space = SpaceGrid(4.0, 4.0, 4, 4)
        dom = SensitivityDomain.from_degrees(45.0, 2.5)
        omega = np.array([math.cos(math.pi / 4), math.sin(math.pi / 4)])
        home = space.cell_index(1, 1)

        # Act
        members = [cell for cell, _ in quadrature(dom, home, omega, space)]

        # Assert
        expected = [
            cell
            for cell in range(space.n_cells)
            if contains(dom, space.centers[home], omega, space.centers[cell], space)
        ]
        self.assertEqual(members, expected)
        self.assertIn(space.cell_index(2, 2), members)
        self.assertNotIn(space.cell_index(0, 0), members)

    def test_rotation_permutes_membership(self):
        # Arrange
        space = SpaceGrid(6.0, 6.0, 6, 6)
        dom = SensitivityDomain.from_degrees(45.0, 2.5)
        home = space.cell_index(2, 2)

        def offsets(omega):
            cells = [cell for cell, _ in quadrature(dom, home, np.array(omega), space)]
            steps = [np.rint(space.displacement(space.centers[home], space.centers[c])).astype(int) for c in cells]
            return {(int(dx), int(dy)) for dx, dy in steps}

        # Act
        east = offsets([1.0, 0.0])
        north = offsets([0.0, 1.0])

        # Assert
        self.assertEqual({(-dy, dx) for dx, dy in east}, north)


class TestHalfPeriodOffsets(unittest.TestCase):
    def setUp(self):
        self.space = SpaceGrid(4.0, 4.0, 4, 4, "periodic")
        self.dom = SensitivityDomain.from_degrees(45.0, 2.0)

    def _offsets(self, home_ix: int, home_iy: int, omega: list[float]) -> set[tuple[int, int]]:
        home = self.space.cell_index(home_ix, home_iy)
        cells = [cell for cell, _ in quadrature(self.dom, home, np.array(omega), self.space)]
        return {
            ((ix - home_ix) % 4, (iy - home_iy) % 4) for ix, iy in (self.space.cell_coords(cell) for cell in cells)
        }

    def test_rotation_permutes_membership(self):
        # Arrange
        headings = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]

        # Act
        memberships = [self._offsets(0, 0, omega) for omega in headings]

        # Assert
        self.assertIn((2, 0), memberships[0])
        self.assertIn((2, 0), memberships[2])
        for current, rotated in zip(memberships, memberships[1:]):
            self.assertEqual({(-dy % 4, dx) for dx, dy in current}, rotated)

    def test_translation_invariance(self):
        # Arrange
        expected = self._offsets(0, 0, [1.0, 0.0])

        # Act & Assert
        for ix in range(4):
            for iy in range(4):
                self.assertEqual(self._offsets(ix, iy, [1.0, 0.0]), expected)

    def test_half_period_cell_seen_both_ways(self):
        centers = self.space.centers
        a, b = centers[self.space.cell_index(0, 0)], centers[self.space.cell_index(2, 0)]
        self.assertTrue(contains(self.dom, a, np.array([1.0, 0.0]), b, self.space))
        self.assertTrue(contains(self.dom, a, np.array([-1.0, 0.0]), b, self.space))
        self.assertTrue(contains(self.dom, b, np.array([1.0, 0.0]), a, self.space))

    def test_table_matches_quadrature(self):
        velocity = VelocityGrid.polar(4, 1, 1.0)
        table = SensitivityTable.build(self.dom, self.space, velocity)
        for node in range(velocity.size):
            for cell in range(self.space.n_cells):
                expected = quadrature(self.dom, cell, velocity.unit_directions[node], self.space)
                np.testing.assert_array_equal(np.flatnonzero(table.weights[node, cell]), [c for c, _ in expected])


class TestSensitivityTable(unittest.TestCase):
    def test_rows_match_quadrature(self):
        # Arrange
        space = SpaceGrid(3.0, 3.0, 3, 3)
        velocity = VelocityGrid.polar(4, 1, 1.0)
        dom = SensitivityDomain.from_degrees(90.0, 1.5)

        # Act
        table = SensitivityTable.build(dom, space, velocity)

        # Assert
        self.assertEqual(table.weights.shape, (4, 9, 9))
        for node in range(velocity.size):
            for cell in range(space.n_cells):
                expected = quadrature(dom, cell, velocity.unit_directions[node], space)
                members = np.flatnonzero(table.weights[node, cell])
                np.testing.assert_array_equal(members, [member for member, _ in expected])
                self.assertAlmostEqual(table.weights[node, cell].sum(), 1.0, places=14)

    def test_homogeneous_table(self):
        table = SensitivityTable.homogeneous()
        np.testing.assert_array_equal(table.weights, np.ones((1, 1, 1)))
        self.assertTrue(table.domain.is_full_disk)


if __name__ == "__main__":
    unittest.main()
