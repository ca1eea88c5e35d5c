# pylint: disable=missing-function-docstring, missing-module-docstring, missing-class-docstring

from pathlib import Path
from unittest.mock import patch
import tempfile
import unittest

import numpy as np

from msktap.core import ConfigurationError, DeterministicRandomCore, KernelDefinitionError
from msktap.kernels import (
    NORMALIZATION_TOLERANCE,
    KernelSet,
    LocalContext,
    NodeState,
    ProliferationKernel,
    RateKernel,
    TransitionKernel,
    build_kernel_set,
    check_normalized,
    evaluate_proliferation,
    evaluate_rate,
    evaluate_transition,
    normalization_defect,
    normalize_transition,
    read_tabulated_csv,
    transition_targets,
)
from msktap.state import ActivityGrid, DistributionField, PhaseGrid, SpaceGrid, VelocityGrid


def _grid(directions=2, nu=4, nx=1, ny=1, boundary="periodic", exits=()) -> PhaseGrid:
    space = SpaceGrid(float(nx), float(ny), nx, ny, boundary, exits)
    return PhaseGrid(space, VelocityGrid.polar(directions, 1, 1.0), ActivityGrid(nu))


def _transition(form, params=None, grid=None, table=None, scope="A") -> TransitionKernel:
    grid = grid or _grid()
    return TransitionKernel(scope, (0, 0), form, params or {}, grid, grid, table)


class TestEvaluateRate(unittest.TestCase):
    def setUp(self):
        self.grid = _grid()
        self.state = NodeState(0, 1)

    def test_zero_constant(self):
        kernel = RateKernel("alpha", (0, 0), "constant", {"alpha0": 0.0}, self.grid, self.grid)
        self.assertEqual(evaluate_rate(kernel, self.state, self.state), 0.0)
        self.assertTrue(kernel.is_zero)

    def test_unit_constant(self):
        kernel = RateKernel("alpha", (0, 0), "constant", {"alpha0": 1.0}, self.grid, self.grid)
        for v in range(2):
            for u in range(4):
                self.assertEqual(evaluate_rate(kernel, NodeState(v, u), self.state), 1.0)

    def test_density_modulated(self):
        kernel = RateKernel("alpha", (0, 0), "density-modulated", {"alpha0": 1.0, "kappa": 0.5}, self.grid, self.grid)
        self.assertEqual(evaluate_rate(kernel, self.state, self.state, 2.0), 2.0)

    def test_density_modulated_needs_density(self):
        kernel = RateKernel("alpha", (0, 0), "density-modulated", {"alpha0": 1.0, "kappa": 0.5}, self.grid, self.grid)
        with self.assertRaises(KernelDefinitionError):
            evaluate_rate(kernel, self.state, self.state)

    def test_activity_weighted(self):
        kernel = RateKernel("alpha", (0, 0), "activity-weighted", {"alpha0": 2.0, "kappa": 1.0}, self.grid, self.grid)
        self.assertAlmostEqual(evaluate_rate(kernel, NodeState(0, 3), self.state), 2.0 * 1.875)

    def test_negative_rate(self):
        kernel = RateKernel("alpha", (0, 0), "constant", {"alpha0": -1.0}, self.grid, self.grid)
        with self.assertRaises(KernelDefinitionError):
            evaluate_rate(kernel, self.state, self.state)


class TestEvaluateTransition(unittest.TestCase):
    def test_identity_is_a_delta(self):
        # Arrange
        kernel = _transition("identity")
        in_state = NodeState(1, 2)
        expected = 1.0 / (0.5 * 0.25)

        # Act & Assert
        for v in range(2):
            for u in range(4):
                value = evaluate_transition(kernel, in_state, NodeState(0, 0), NodeState(v, u))
                self.assertEqual(value, expected if (v, u) == (1, 2) else 0.0)

    def test_consensus_without_mu_is_identity_in_activity(self):
        kernel = _transition("activity-consensus", {"mu": 0.0})
        self.assertGreater(evaluate_transition(kernel, NodeState(0, 0), NodeState(1, 3), NodeState(0, 0)), 0.0)

    def test_full_consensus_lands_on_the_field_activity(self):
        # Arrange
        kernel = _transition("activity-consensus", {"mu": 1.0})
        candidate = NodeState(0, 0)
        field_state = NodeState(0, 3)

        # Act
        values = [evaluate_transition(kernel, candidate, field_state, NodeState(0, u)) for u in range(4)]

        # Assert
        self.assertEqual([value > 0 for value in values], [False, False, False, True])

    def test_consensus_tie_keeps_own_side(self):
        # 0.5 * 0.375 + 0.5 * 0.625 = 0.5 lies between nodes 1 and 2
        kernel = _transition("activity-consensus", {"mu": 0.5})
        targets = transition_targets(kernel)
        self.assertEqual(targets[0, 0, 1, 0, 2] % 4, 1)
        self.assertEqual(targets[0, 0, 2, 0, 1] % 4, 2)

    def test_alignment_turns_toward_the_field_heading(self):
        # Arrange
        grid = _grid(directions=4)
        kernel = _transition("velocity-alignment", {"lambda": 0.9, "lambda_activity": 0.0}, grid)

        # Act
        value = evaluate_transition(kernel, NodeState(0, 1), NodeState(1, 0), NodeState(1, 1))

        # Assert
        self.assertGreater(value, 0.0)

    def test_tabulated_reads_the_table(self):
        # Arrange
        grid = _grid(directions=1, nu=2)
        table = np.arange(1.0, 9.0).reshape(1, 2, 1, 2, 1, 2)
        kernel = normalize_transition(_transition("tabulated", {"path": "t.csv"}, grid, table))

        # Act
        value = evaluate_transition(kernel, NodeState(0, 1), NodeState(0, 0), NodeState(0, 1))

        # Assert
        self.assertAlmostEqual(value, 6.0 / ((5.0 + 6.0) * 0.5))

    def test_context_form_needs_context(self):
        kernel = _transition("density-excitation", {"mu": 0.5, "rho_ref": 1.0}, scope="D")
        with self.assertRaises(KernelDefinitionError):
            evaluate_transition(kernel, NodeState(0, 0), NodeState(0, 0), NodeState(0, 0))


class TestNormalization(unittest.TestCase):
    def test_built_in_forms_up_to_eight_nodes(self):
        for directions in (1, 3, 8):
            for nu in (1, 2, 8):
                grid = _grid(directions=directions, nu=nu)
                for form, params in (
                    ("identity", {}),
                    ("activity-consensus", {"mu": 0.7}),
                    ("velocity-alignment", {"lambda": 0.5, "lambda_activity": 0.5}),
                ):
                    with self.subTest(form=form, directions=directions, nu=nu):
                        self.assertLessEqual(normalization_defect(_transition(form, params, grid)), 1e-12)

    def test_context_forms(self):
        # Arrange
        grid = _grid(directions=4, nu=3, nx=3, ny=3, boundary="absorbing", exits=(("right", 1, 1),))
        rng = DeterministicRandomCore("context")
        fs_field = DistributionField(grid, rng.uniform((1, *grid.shape)))
        sfs_field = DistributionField(grid, rng.uniform((1, *grid.shape)))
        context = LocalContext.build(fs_field, sfs_field)
        kernels = [
            _transition("crowd-decision", {"lambda0": 0.2, "lambda_activity": 0.6, "exit_weight": 1.0,
                                           "avoid_weight": 0.5, "rho_ref": 1.0, "rho_max": 2.0}, grid),
            _transition("signal-avoidance", {"lambda_signal": 0.8, "mu": 0.3}, grid, scope="B"),
            _transition("density-excitation", {"mu": 0.5, "rho_ref": 1.0}, grid, scope="D"),
        ]  # fmt: skip

        # Act & Assert
        for kernel in kernels:
            self.assertLessEqual(normalization_defect(kernel, context), 1e-12, kernel.kernel_id)

    def test_normalize_uniform_slice(self):
        # Arrange
        grid = _grid(directions=1, nu=2)
        kernel = _transition("tabulated", {"path": "t.csv"}, grid, np.ones((1, 2, 1, 2, 1, 2)))

        # Act
        result = normalize_transition(kernel)

        # Assert
        np.testing.assert_allclose(result.table, np.ones((1, 2, 1, 2, 1, 2)))

    def test_normalize_is_idempotent(self):
        grid = _grid(directions=2, nu=3)
        table = DeterministicRandomCore("idempotent").uniform((2, 3, 2, 3, 2, 3), 0.1, 1.0)
        once = normalize_transition(_transition("tabulated", {"path": "t.csv"}, grid, table))
        twice = normalize_transition(once)
        np.testing.assert_allclose(twice.table, once.table, rtol=1e-14)
        self.assertLessEqual(normalization_defect(once), NORMALIZATION_TOLERANCE)

    def test_normalize_divides_by_the_weighted_sum(self):
        # Arrange
        grid = _grid(directions=2, nu=2)
        table = DeterministicRandomCore("slices").uniform((2, 2, 2, 2, 2, 2), 0.1, 1.0)

        # Act
        result = normalize_transition(_transition("tabulated", {"path": "t.csv"}, grid, table))

        # Assert
        weighted_sum = float(np.sum(table[1, 0, 0, 1] * grid.weights))
        np.testing.assert_allclose(result.table[1, 0, 0, 1], table[1, 0, 0, 1] / weighted_sum, rtol=1e-14)

    def test_all_zero_slice_names_the_tuple(self):
        # Arrange
        grid = _grid(directions=1, nu=2)
        table = np.ones((1, 2, 1, 2, 1, 2))
        table[0, 1, 0, 0] = 0.0

        # Act & Assert
        with self.assertRaises(KernelDefinitionError) as context:
            normalize_transition(_transition("tabulated", {"path": "t.csv"}, grid, table))
        self.assertIn("(0, 1, 0, 0)", str(context.exception))

    def test_negative_entries(self):
        grid = _grid(directions=1, nu=2)
        with self.assertRaises(KernelDefinitionError):
            normalize_transition(_transition("tabulated", {"path": "t.csv"}, grid, -np.ones((1, 2, 1, 2, 1, 2))))

    def test_check_normalized_rejects_scaled_table(self):
        grid = _grid(directions=1, nu=2)
        kernel = normalize_transition(_transition("tabulated", {"path": "t.csv"}, grid, np.ones((1, 2, 1, 2, 1, 2))))
        scaled = _transition("tabulated", {"path": "t.csv"}, grid, 1.5 * kernel.table)
        with self.assertRaises(KernelDefinitionError):
            check_normalized(scaled)


class TestEvaluateProliferation(unittest.TestCase):
    def setUp(self):
        self.grid = _grid(nu=2)

    def _kernel(self, gain_form, gain_params, loss_form, loss_params):
        return ProliferationKernel("E", (0, 0), gain_form, gain_params, self.grid, self.grid, loss_form, loss_params)

    def test_zero_constants(self):
        kernel = self._kernel("constant", {"p": 0.0}, "constant", {"l": 0.0})
        self.assertEqual(evaluate_proliferation(kernel, NodeState(0, 0), NodeState(0, 0), 1.0), (0.0, 0.0))

    def test_activity_gated_loss(self):
        # u_field of node 0 on a 2-node grid is 0.25; node 1 is 0.75
        grid = PhaseGrid(SpaceGrid(1.0, 1.0, 1, 1), VelocityGrid.polar(1, 1, 1.0), ActivityGrid(4))
        field_grid = PhaseGrid(grid.space, grid.velocity, ActivityGrid(2))
        kernel = ProliferationKernel("E", (0, 0), "zero", {}, grid, field_grid, "activity-gated", {"l": 2.0})
        _, loss = evaluate_proliferation(kernel, NodeState(0, 0), NodeState(0, 1))
        self.assertEqual(loss, 1.5)

    def test_density_saturated_gain(self):
        kernel = self._kernel("density-saturated", {"p": 1.0, "sigma": 1.0}, "zero", {})
        gain, loss = evaluate_proliferation(kernel, NodeState(0, 0), NodeState(0, 0), 1.0)
        self.assertEqual((gain, loss), (0.5, 0.0))

    def test_density_saturated_needs_density(self):
        kernel = self._kernel("density-saturated", {"p": 1.0, "sigma": 1.0}, "zero", {})
        with self.assertRaises(KernelDefinitionError):
            evaluate_proliferation(kernel, NodeState(0, 0), NodeState(0, 0))


class TestLocalContext(unittest.TestCase):
    def test_exit_direction_points_to_the_nearest_exit(self):
        # Arrange
        grid = _grid(nx=4, ny=4, boundary="absorbing", exits=(("right", 0, 3),))
        field = DistributionField(grid, np.ones((1, *grid.shape)))

        # Act
        context = LocalContext.build(field)

        # Assert
        np.testing.assert_allclose(context.exit_direction, np.tile([1.0, 0.0], (16, 1)), atol=1e-15)

    def test_avoidance_points_down_the_gradient(self):
        # Arrange
        grid = _grid(nx=4, ny=1, boundary="absorbing")
        values = np.ones((1, *grid.shape)) * np.array([1.0, 2.0, 3.0, 4.0])[None, :, None, None]

        # Act
        context = LocalContext.build(DistributionField(grid, values))

        # Assert
        np.testing.assert_allclose(context.avoidance, np.tile([-1.0, 0.0], (4, 1)))

    def test_flat_density_has_no_avoidance(self):
        grid = _grid(nx=3, ny=3)
        context = LocalContext.build(DistributionField(grid, np.ones((1, *grid.shape))))
        np.testing.assert_array_equal(context.avoidance, np.zeros((9, 2)))


class TestReadTabulatedCsv(unittest.TestCase):
    def test_reads_entries(self):
        grid = _grid(directions=1, nu=2)
        with tempfile.TemporaryDirectory() as tmp:
            # Arrange
            path = Path(tmp) / "kernel.csv"
            path.write_text("vc,uc,vs,us,v,u,value\n0,1,0,0,0,1,2.5\n", encoding="utf-8")

            # Act
            table = read_tabulated_csv(path, grid, grid)

        # Assert
        self.assertEqual(table.shape, (1, 2, 1, 2, 1, 2))
        self.assertEqual(table[0, 1, 0, 0, 0, 1], 2.5)
        self.assertEqual(table.sum(), 2.5)

    def test_bad_row_reports_line(self):
        grid = _grid(directions=1, nu=2)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "kernel.csv"
            path.write_text("vc,uc,vs,us,v,u,value\n0,0,0,0,0,0,1\n0,5,0,0,0,0,1\n", encoding="utf-8")
            with self.assertRaises(ConfigurationError) as context:
                read_tabulated_csv(path, grid, grid)
        self.assertIn("line 3", str(context.exception))


class TestBuildKernelSet(unittest.TestCase):
    def setUp(self):
        self.fs = _grid()
        self.sfs = _grid(nu=3)

    def test_builds_every_kind(self):
        # Arrange
        blocks = [
            {"scope": "alpha", "pair": [0, 0], "form": "constant", "params": {"alpha0": 1.0}},
            {"scope": "A", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.3}},
            {"scope": "E", "pair": [0, 0], "loss": {"form": "constant", "params": {"l": 0.1}}},
            {"scope": "gamma_sfs_fs", "pair": [0, 0], "params": {"alpha0": 0.5}},
            {"scope": "D", "pair": [0, 0], "form": "density-excitation", "params": {"mu": 0.5}},
        ]

        # Act
        kernels = build_kernel_set(blocks, self.fs, self.sfs, 1, 1)

        # Assert
        self.assertIsInstance(kernels, KernelSet)
        self.assertEqual(kernels.rate("gamma_sfs_fs", (0, 0)).form, "constant")
        self.assertIs(kernels.transition("D", (0, 0)).candidate, self.sfs)
        self.assertEqual(kernels.proliferation("E", (0, 0)).form, "zero")
        self.assertEqual(len(kernels.all_kernels()), 5)

    def test_missing_transition_names_the_pair(self):
        blocks = [{"scope": "alpha", "pair": [1, 0], "form": "constant", "params": {"alpha0": 1.0}}]
        with self.assertRaises(ConfigurationError) as context:
            build_kernel_set(blocks, self.fs, None, 2, 0)
        self.assertIn("[1, 0]", str(context.exception))

    def test_zero_rate_needs_no_transition(self):
        blocks = [{"scope": "alpha", "pair": [0, 0], "form": "constant", "params": {"alpha0": 0.0}}]
        kernels = build_kernel_set(blocks, self.fs, None, 1, 0)
        self.assertIsNone(kernels.transition("A", (0, 0)))

    def test_unknown_scope(self):
        with self.assertRaises(ConfigurationError):
            build_kernel_set([{"scope": "Z", "pair": [0, 0]}], self.fs, None, 1, 0)

    def test_unknown_parameter(self):
        blocks = [{"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0, "beta": 2.0}}]
        with self.assertRaises(ConfigurationError):
            build_kernel_set(blocks, self.fs, None, 1, 0)

    def test_unit_parameter_out_of_range(self):
        blocks = [
            {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}},
            {"scope": "A", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 1.5}},
        ]
        with self.assertRaises(ConfigurationError):
            build_kernel_set(blocks, self.fs, None, 1, 0)

    def test_pair_out_of_range(self):
        with self.assertRaises(ConfigurationError):
            build_kernel_set([{"scope": "alpha", "pair": [0, 2], "params": {"alpha0": 1.0}}], self.fs, None, 2, 0)

    def test_sfs_scope_without_sfs(self):
        with self.assertRaises(ConfigurationError):
            build_kernel_set([{"scope": "beta", "pair": [0, 0], "params": {"alpha0": 1.0}}], self.fs, None, 1, 0)

    def test_duplicate_kernel(self):
        block = {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 0.0}}
        with self.assertRaises(ConfigurationError):
            build_kernel_set([block, block], self.fs, None, 1, 0)

    def test_tabulated_kernel_is_normalized_on_load(self):
        with tempfile.TemporaryDirectory() as tmp:
            # Arrange
            rows = ["vc,uc,vs,us,v,u,value"]
            for vc in range(2):
                for uc in range(4):
                    for vs in range(2):
                        for us in range(4):
                            rows.append(f"{vc},{uc},{vs},{us},{vc},{uc},3.0")
            Path(tmp, "kernel.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
            blocks = [
                {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}},
                {"scope": "A", "pair": [0, 0], "form": "tabulated", "params": {"path": "kernel.csv"}},
            ]

            # Act
            kernels = build_kernel_set(blocks, self.fs, None, 1, 0, Path(tmp))

        # Assert
        kernel = kernels.transition("A", (0, 0))
        self.assertLessEqual(normalization_defect(kernel), NORMALIZATION_TOLERANCE)
        self.assertAlmostEqual(kernel.table[1, 2, 0, 0, 1, 2], 1.0 / (0.5 * 0.25))

    def test_missing_tabulated_file(self):
        blocks = [
            {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}},
            {"scope": "A", "pair": [0, 0], "form": "tabulated", "params": {"path": "/nonexistent/kernel.csv"}},
        ]
        with self.assertRaises(ConfigurationError):
            build_kernel_set(blocks, self.fs, None, 1, 0)

    @patch("msktap.kernels.logger")
    def test_proliferation_without_rate_warns(self, mock_logger):
        blocks = [{"scope": "E", "pair": [0, 0], "loss": {"form": "constant", "params": {"l": 1.0}}}]
        build_kernel_set(blocks, self.fs, None, 1, 0)
        mock_logger.warning.assert_called_once()

    def test_homogeneous_violations(self):
        blocks = [
            {"scope": "alpha", "pair": [0, 0], "params": {"alpha0": 1.0}},
            {"scope": "A", "pair": [0, 0], "form": "velocity-alignment", "params": {"lambda": 0.5}},
        ]
        kernels = build_kernel_set(blocks, self.fs, None, 1, 0)
        self.assertEqual(kernels.homogeneous_violations(), ["A[0,0]:velocity-alignment"])


if __name__ == "__main__":
    unittest.main()
