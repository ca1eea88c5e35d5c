# pylint: disable=missing-function-docstring, missing-module-docstring, missing-class-docstring

import unittest

import numpy as np

from msktap.core import ConfigurationError, DeterministicRandomCore
from msktap.geometry import SensitivityDomain, SensitivityTable
from msktap.kernels import build_kernel_set
from msktap.operators import (
    Geometries,
    fs_fs_conservative,
    fs_proliferative,
    fs_sfs_conservative,
    full_rhs,
    homogeneous_rhs,
    sfs_fs_conservative,
    sfs_proliferative,
    sfs_sfs_conservative,
)
from msktap.oracle import oracle_operator
from msktap.state import ActivityGrid, DistributionField, PhaseGrid, SpaceGrid, VelocityGrid, density

FS_DOMAIN = SensitivityDomain.from_degrees(90.0, 1.5)
SFS_DOMAIN = SensitivityDomain.from_degrees(180.0, 1.0)

COUPLED_BLOCKS = [
    {"scope": "alpha", "pair": [0, 0], "form": "density-modulated", "params": {"alpha0": 0.8, "kappa": 0.5}},
    {"scope": "A", "pair": [0, 0], "form": "velocity-alignment", "params": {"lambda": 0.6, "lambda_activity": 0.3}},
    {"scope": "E", "pair": [0, 0], "gain": {"form": "density-saturated", "params": {"p": 0.4, "sigma": 1.0}}},
    {"scope": "gamma_fs_sfs", "pair": [0, 0], "params": {"alpha0": 0.6}},
    {"scope": "B", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.4}},
    {"scope": "beta", "pair": [0, 0], "form": "activity-weighted", "params": {"alpha0": 0.5, "kappa": 1.0}},
    {"scope": "C", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.5}},
    {"scope": "gamma_sfs_fs", "pair": [0, 0], "params": {"alpha0": 0.7}},
    {"scope": "D", "pair": [0, 0], "form": "density-excitation", "params": {"mu": 0.5, "rho_ref": 1.0}},
    {
        "scope": "F",
        "pair": [0, 0],
        "gain": {"form": "activity-gated", "params": {"p": 0.3}},
        "loss": {"form": "constant", "params": {"l": 0.2}},
    },
]


def _grids(nx=3, ny=3, directions=4, nu=3, nw=2):
    space = SpaceGrid(float(nx), float(ny), nx, ny)
    velocity = VelocityGrid.polar(directions, 1, 1.0)
    return PhaseGrid(space, velocity, ActivityGrid(nu)), PhaseGrid(space, velocity, ActivityGrid(nw))


def _coupled_system(seed="operators"):
    fs_grid, sfs_grid = _grids()
    kernels = build_kernel_set(COUPLED_BLOCKS, fs_grid, sfs_grid, 1, 1)
    geoms = Geometries(
        SensitivityTable.build(FS_DOMAIN, fs_grid.space, fs_grid.velocity),
        SensitivityTable.build(SFS_DOMAIN, sfs_grid.space, sfs_grid.velocity),
    )
    rng = DeterministicRandomCore(seed)
    f = DistributionField(fs_grid, rng.uniform((1, *fs_grid.shape), 0.1, 1.0))
    phi = DistributionField(sfs_grid, rng.uniform((1, *sfs_grid.shape), 0.1, 1.0))
    return f, phi, kernels, geoms


def _fs_only(blocks, grid=None):
    grid = grid or _grids()[0]
    kernels = build_kernel_set(blocks, grid, None, 1, 0)
    geoms = Geometries(SensitivityTable.build(FS_DOMAIN, grid.space, grid.velocity))
    return grid, kernels, geoms


def _cell_integrals(values: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    return np.einsum("sxvu,vu->sx", values, grid.weights)


class TestConservativeOperators(unittest.TestCase):
    def test_zero_field_gives_zero(self):
        # Arrange
        f, phi, kernels, geoms = _coupled_system()
        f = f.with_values(np.zeros(f.values.shape))
        phi = phi.with_values(np.zeros(phi.values.shape))

        # Act
        fs_rhs, sfs_rhs = full_rhs(f, phi, kernels, geoms)

        # Assert
        np.testing.assert_array_equal(fs_rhs, 0.0)
        np.testing.assert_array_equal(sfs_rhs, 0.0)

    def test_identity_kernel_gives_zero(self):
        # Arrange
        grid, kernels, geoms = _fs_only(
            [{"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}}, {"scope": "A", "pair": [0, 0]}]
        )
        f = DistributionField(grid, DeterministicRandomCore("identity").uniform((1, *grid.shape)))

        # Act
        result = fs_fs_conservative(f, kernels, geoms)

        # Assert
        np.testing.assert_allclose(result, 0.0, atol=1e-14)

    def test_every_conservative_operator_conserves_per_cell(self):
        # Arrange
        f, phi, kernels, geoms = _coupled_system()
        outputs = {
            "A": (fs_fs_conservative(f, kernels, geoms), f.grid),
            "B": (fs_sfs_conservative(f, phi, kernels, geoms), f.grid),
            "C": (sfs_sfs_conservative(phi, kernels, geoms, f=f), phi.grid),
            "D": (sfs_fs_conservative(phi, f, kernels, geoms), phi.grid),
        }

        # Act & Assert
        for name, (values, grid) in outputs.items():
            with self.subTest(operator=name):
                self.assertGreater(np.abs(values).max(), 0.0)
                np.testing.assert_allclose(_cell_integrals(values, grid), 0.0, atol=1e-13)

    def test_matches_the_oracle(self):
        # Arrange
        f, phi, kernels, geoms = _coupled_system("oracle agreement")
        computed = {
            "fs_fs_conservative": fs_fs_conservative(f, kernels, geoms),
            "fs_sfs_conservative": fs_sfs_conservative(f, phi, kernels, geoms),
            "sfs_sfs_conservative": sfs_sfs_conservative(phi, kernels, geoms, f=f),
            "sfs_fs_conservative": sfs_fs_conservative(phi, f, kernels, geoms),
            "fs_proliferative": fs_proliferative(f, kernels, geoms),
            "sfs_proliferative": sfs_proliferative(phi, f, kernels, geoms),
        }

        # Act & Assert
        for kind, values in computed.items():
            with self.subTest(kind=kind):
                reference = oracle_operator(kind, f, phi, kernels, FS_DOMAIN, SFS_DOMAIN)
                scale = max(float(np.abs(reference).max()), 1e-300)
                self.assertLessEqual(float(np.abs(values - reference).max()) / scale, 1e-10)

    def test_missing_sfs_geometry(self):
        f, phi, kernels, geoms = _coupled_system()
        with self.assertRaises(ConfigurationError):
            sfs_sfs_conservative(phi, kernels, Geometries(geoms.fs), f=f)

    def test_sfs_sfs_density_modulated_without_fs_field(self):
        # Arrange
        f, phi, _, geoms = _coupled_system()
        blocks = [
            {"scope": "beta", "pair": [0, 0], "form": "density-modulated", "params": {"alpha0": 0.5, "kappa": 0.5}},
            {"scope": "C", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.5}},
        ]
        kernels = build_kernel_set(blocks, f.grid, phi.grid, 1, 1)

        # Act
        alone = sfs_sfs_conservative(phi, kernels, geoms)

        # Assert
        np.testing.assert_array_equal(alone, sfs_sfs_conservative(phi, kernels, geoms, f=f))
        expected = oracle_operator("sfs_sfs_conservative", f, phi, kernels, FS_DOMAIN, SFS_DOMAIN)
        np.testing.assert_allclose(alone, expected, rtol=1e-10, atol=1e-12)
        self.assertGreater(float(np.abs(alone).max()), 0.0)


class TestProliferativeOperators(unittest.TestCase):
    def test_balanced_gain_and_loss_cancel(self):
        # Arrange
        grid, kernels, geoms = _fs_only(
            [
                {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}},
                {"scope": "A", "pair": [0, 0]},
                {
                    "scope": "E",
                    "pair": [0, 0],
                    "gain": {"form": "constant", "params": {"p": 0.5}},
                    "loss": {"form": "constant", "params": {"l": 0.5}},
                },
            ]
        )
        f = DistributionField(grid, DeterministicRandomCore("balanced").uniform((1, *grid.shape)))

        # Act
        result = fs_proliferative(f, kernels, geoms)

        # Assert
        np.testing.assert_array_equal(result, 0.0)

    def test_pure_loss_in_a_single_cell(self):
        # Arrange
        grid = PhaseGrid(SpaceGrid(1.0, 1.0, 1, 1), VelocityGrid.polar(4, 1, 1.0), ActivityGrid(3))
        alpha0, ell = 0.7, 0.3
        _, kernels, geoms = _fs_only(
            [
                {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": alpha0}},
                {"scope": "A", "pair": [0, 0]},
                {"scope": "E", "pair": [0, 0], "loss": {"form": "constant", "params": {"l": ell}}},
            ],
            grid,
        )
        f = DistributionField(grid, DeterministicRandomCore("pure loss").uniform((1, *grid.shape)))
        rho = density(f, 0)[0]

        # Act
        result = fs_proliferative(f, kernels, geoms)

        # Assert
        np.testing.assert_allclose(result, -alpha0 * ell * rho * f.values, rtol=1e-13)

    def test_without_kernel_is_zero(self):
        grid, kernels, geoms = _fs_only(
            [{"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}}, {"scope": "A", "pair": [0, 0]}]
        )
        f = DistributionField(grid, np.ones((1, *grid.shape)))
        np.testing.assert_array_equal(fs_proliferative(f, kernels, geoms), 0.0)


class TestFullRhs(unittest.TestCase):
    def test_thread_count_does_not_change_the_result(self):
        # Arrange
        f, phi, kernels, geoms = _coupled_system("threads")

        # Act
        serial = full_rhs(f, phi, kernels, geoms, threads=1)
        parallel = full_rhs(f, phi, kernels, geoms, threads=4)

        # Assert
        np.testing.assert_array_equal(serial[0], parallel[0])
        np.testing.assert_array_equal(serial[1], parallel[1])

    def test_sums_the_operators(self):
        # Arrange
        f, phi, kernels, geoms = _coupled_system("sum")

        # Act
        fs_rhs, sfs_rhs = full_rhs(f, phi, kernels, geoms)

        # Assert
        expected_fs = (
            fs_fs_conservative(f, kernels, geoms)
            + fs_sfs_conservative(f, phi, kernels, geoms)
            + fs_proliferative(f, kernels, geoms)
        )
        expected_sfs = (
            sfs_sfs_conservative(phi, kernels, geoms, f=f)
            + sfs_fs_conservative(phi, f, kernels, geoms)
            + sfs_proliferative(phi, f, kernels, geoms)
        )
        np.testing.assert_allclose(fs_rhs, expected_fs, rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(sfs_rhs, expected_sfs, rtol=1e-14, atol=1e-15)

    def test_without_sfs(self):
        grid, kernels, geoms = _fs_only(
            [
                {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}},
                {"scope": "A", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.3}},
            ]
        )
        f = DistributionField(grid, DeterministicRandomCore("fs only").uniform((1, *grid.shape)))
        fs_rhs, sfs_rhs = full_rhs(f, None, kernels, geoms)
        self.assertIsNone(sfs_rhs)
        self.assertEqual(fs_rhs.shape, f.values.shape)


class TestHomogeneousRhs(unittest.TestCase):
    def setUp(self):
        self.grid = PhaseGrid.homogeneous(ActivityGrid(4))

    def test_consensus_conserves_mass(self):
        # Arrange
        kernels = build_kernel_set(
            [
                {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}},
                {"scope": "A", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.3}},
            ],
            self.grid,
            None,
            1,
            0,
        )
        f = np.array([[0.1, 0.4, 0.3, 0.2]])

        # Act
        fs_rhs, sfs_rhs = homogeneous_rhs(f, None, kernels)

        # Assert
        self.assertIsNone(sfs_rhs)
        self.assertEqual(fs_rhs.shape, (1, 4))
        self.assertAlmostEqual(float(fs_rhs.sum()) * 0.25, 0.0, places=15)
        self.assertGreater(np.abs(fs_rhs).max(), 0.0)

    def test_pure_loss_matches_the_closed_form(self):
        # Arrange
        kernels = build_kernel_set(
            [
                {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}},
                {"scope": "A", "pair": [0, 0]},
                {"scope": "E", "pair": [0, 0], "loss": {"form": "constant", "params": {"l": 0.5}}},
            ],
            self.grid,
            None,
            1,
            0,
        )
        f = np.full((1, 4), 2.0)

        # Act
        fs_rhs, _ = homogeneous_rhs(f, None, kernels)

        # Assert
        np.testing.assert_allclose(fs_rhs, -1.0 * 0.5 * 2.0 * f)

    def test_rejects_velocity_forms(self):
        kernels = build_kernel_set(
            [
                {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}},
                {"scope": "A", "pair": [0, 0], "form": "velocity-alignment", "params": {"lambda": 0.5}},
            ],
            self.grid,
            None,
            1,
            0,
        )
        with self.assertRaises(ConfigurationError):
            homogeneous_rhs(np.ones((1, 4)), None, kernels)

    def test_rejects_spatial_grids(self):
        _, kernels, _ = _fs_only(
            [{"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}}, {"scope": "A", "pair": [0, 0]}]
        )
        with self.assertRaises(ConfigurationError):
            homogeneous_rhs(np.ones((1, 3)), None, kernels)


if __name__ == "__main__":
    unittest.main()
