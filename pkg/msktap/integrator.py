"""
Time integration of the full system (transport + collisions, operator splitting) and of the spatially
homogeneous system (collisions only).
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable
import logging

import numpy as np

from msktap.config import IntegratorConfig, SystemConfig
from msktap.core import ConfigurationError, NegativityError
from msktap.imaging import write_density_frame
from msktap.kernels import KernelSet
from msktap.operators import Geometries, full_rhs, homogeneous_rhs
from msktap.state import (
    HOMOGENEOUS_COLUMNS,
    MOMENT_COLUMNS,
    DistributionField,
    density,
    homogeneous_row,
    moment_rows,
    moments,
    save_snapshot,
    write_moments_csv,
)
from msktap.transport import TransportScheme, advect

logger = logging.getLogger(__name__)

Values = tuple[np.ndarray, np.ndarray | None]


@dataclass(frozen=True, eq=False)
class SimulationState:
    t: float
    f: DistributionField
    phi: DistributionField | None = None


@dataclass(eq=False)
class Trajectory:
    """Moment rows emitted during a run, plus the final state."""

    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    final: SimulationState | None = None
    steps: int = 0
    history: list[tuple[float, np.ndarray, np.ndarray | None]] = field(default_factory=list)

    @property
    def is_homogeneous(self) -> bool:
        return self.columns == HOMOGENEOUS_COLUMNS

    def write_csv(self, path: Path) -> int:
        return write_moments_csv(path, self.rows, self.is_homogeneous)

    def series(self, label: str, column: str) -> np.ndarray:
        """One column of the rows whose subsystem label matches, in emission order."""
        index = self.columns.index(column)
        label_index = self.columns.index("subsystem")
        return np.array([row[index] for row in self.rows if row[label_index] == label], dtype=float)


def _advance(values: Values, rhs: Callable[[Values], Values], dt: float, stepper: str) -> Values:
    fs_values, sfs_values = values
    k1_fs, k1_sfs = rhs(values)
    if stepper == "euler":
        return fs_values + dt * k1_fs, None if sfs_values is None else sfs_values + dt * k1_sfs
    predicted = (fs_values + dt * k1_fs, None if sfs_values is None else sfs_values + dt * k1_sfs)
    k2_fs, k2_sfs = rhs(predicted)
    new_fs = fs_values + 0.5 * dt * (k1_fs + k2_fs)
    new_sfs = None if sfs_values is None else sfs_values + 0.5 * dt * (k1_sfs + k2_sfs)
    return new_fs, new_sfs


def _check_negativity(values: np.ndarray, scale: str, step_index: int, tolerance: float) -> None:
    flat = int(np.argmin(values))
    lowest = float(values.flat[flat])
    if lowest < -tolerance:
        position = np.unravel_index(flat, values.shape)
        cell = int(position[1]) if values.ndim == 4 else 0
        raise NegativityError(step_index, scale, int(position[0]), cell, lowest)


def step(
    state: SimulationState,
    cfg: IntegratorConfig,
    kernels: KernelSet,
    geoms: Geometries,
    scheme: TransportScheme | None = None,
    step_index: int = 0,
) -> SimulationState:
    """
    Advance the full system by one time step: transport, then collisions (Lie), or half transport, collisions,
    half transport (Strang). Every collision stage reads only the pre-stage state.

    Args:
        state (SimulationState): Current state
        cfg (IntegratorConfig): dt, splitting, stepper and negativity tolerance
        kernels (KernelSet): Kernel set
        geoms (Geometries): Sensitivity weights
        scheme (TransportScheme | None): Transport scheme and CFL limit
        step_index (int): Step counter, reported by negativity errors

    Returns:
        SimulationState: The state at t + dt
    """
    dt = cfg.dt
    f, phi = state.f, state.phi
    transport_dt = dt if cfg.splitting == "lie" else 0.5 * dt
    f = advect(f, transport_dt, scheme)
    phi = None if phi is None else advect(phi, transport_dt, scheme)

    def rhs(values: Values) -> Values:
        fs_field = f.with_values(values[0])
        sfs_field = None if phi is None or values[1] is None else phi.with_values(values[1])
        return full_rhs(fs_field, sfs_field, kernels, geoms, cfg.threads)

    fs_values, sfs_values = _advance((f.values, None if phi is None else phi.values), rhs, dt, cfg.stepper)
    f = f.with_values(fs_values)
    phi = None if phi is None or sfs_values is None else phi.with_values(sfs_values)
    if cfg.splitting == "strang":
        f = advect(f, transport_dt, scheme)
        phi = None if phi is None else advect(phi, transport_dt, scheme)

    _check_negativity(f.values, "fs", step_index, cfg.negativity_tolerance)
    if phi is not None:
        _check_negativity(phi.values, "sfs", step_index, cfg.negativity_tolerance)
    return SimulationState(state.t + dt, f, phi)


def _emit(trajectory: Trajectory, state: SimulationState) -> None:
    if trajectory.is_homogeneous:
        for i in range(state.f.subsystem_count):
            trajectory.rows.append(homogeneous_row(state.t, f"fs{i}", state.f, i))
        if state.phi is not None:
            for j in range(state.phi.subsystem_count):
                trajectory.rows.append(homogeneous_row(state.t, f"sfs{j}", state.phi, j))
        sfs_values = None if state.phi is None else state.phi.values[:, 0, 0, :].copy()
        trajectory.history.append((state.t, state.f.values[:, 0, 0, :].copy(), sfs_values))
        return
    space = state.f.grid.space
    for i in range(state.f.subsystem_count):
        trajectory.rows.extend(moment_rows(state.t, f"fs{i}", moments(state.f, i), space))
    if state.phi is not None:
        for j in range(state.phi.subsystem_count):
            trajectory.rows.extend(moment_rows(state.t, f"sfs{j}", moments(state.phi, j), space))


def _write_outputs(config: SystemConfig, state: SimulationState, step_index: int, out_dir: Path | None) -> None:
    if out_dir is None:
        return
    output = config.output
    if output.snapshot_stride > 0 and step_index % output.snapshot_stride == 0:
        snapshot_dir = out_dir / "snapshots"
        snapshot_dir.mkdir(parents=True, exist_ok=True)
        save_snapshot(snapshot_dir / f"step_{step_index:06d}.npz", state.t, state.f, state.phi)
    if output.frame_stride > 0 and step_index % output.frame_stride == 0 and not config.is_homogeneous:
        frame_dir = out_dir / "frames"
        frame_dir.mkdir(parents=True, exist_ok=True)
        space = state.f.grid.space
        for i in range(state.f.subsystem_count):
            filepath = frame_dir / f"fs{i}_{step_index:06d}.png"
            write_density_frame(filepath, density(state.f, i), space, output.frame_scale)


def run(config: SystemConfig, out_dir: Path | None = None, threads: int | None = None) -> Trajectory:
    """
    Integrate a configured system from its initial data to t_end, emitting moments every output stride.

    Args:
        config (SystemConfig): Validated configuration
        out_dir (Path | None): Directory for snapshots and frames, when they are enabled
        threads (int | None): Worker count override for operator evaluation

    Returns:
        Trajectory: Moment rows (spatial columns, or activity-only columns in homogeneous mode)
    """
    if config.is_homogeneous:
        return run_homogeneous(config, out_dir)
    cfg = config.integrator
    if threads is not None:
        cfg = replace(cfg, threads=threads)
    kernels = config.build_kernels()
    geoms = config.geometries()
    f, phi = config.initial_fields()
    state = SimulationState(0.0, f, phi)
    trajectory = Trajectory(MOMENT_COLUMNS)

    _emit(trajectory, state)
    _write_outputs(config, state, 0, out_dir)
    n_steps = cfg.n_steps
    for step_index in range(1, n_steps + 1):
        state = step(state, cfg, kernels, geoms, config.transport, step_index)
        # time from the step counter so emitted t values do not accumulate rounding
        state = SimulationState(step_index * cfg.dt, state.f, state.phi)
        if step_index % cfg.output_stride == 0:
            _emit(trajectory, state)
            logger.info("step %d/%d, t = %.6g", step_index, n_steps, state.t)
        _write_outputs(config, state, step_index, out_dir)
    trajectory.final = state
    trajectory.steps = n_steps
    return trajectory


def run_homogeneous(config: SystemConfig, out_dir: Path | None = None) -> Trajectory:
    """
    Integrate the spatially homogeneous system, where distributions depend on time and activity only.

    Args:
        config (SystemConfig): Homogeneous-mode configuration
        out_dir (Path | None): Directory for snapshots, when they are enabled

    Returns:
        Trajectory: Rows (t, subsystem, u_mean, mass) and the activity distributions at every emission
    """
    if not config.is_homogeneous:
        raise ConfigurationError("run_homogeneous needs a homogeneous-mode config (see to_homogeneous)", "system.mode")
    cfg = config.integrator
    kernels = config.build_kernels()
    f, phi = config.initial_fields()
    state = SimulationState(0.0, f, phi)
    trajectory = Trajectory(HOMOGENEOUS_COLUMNS)

    def rhs(values: Values) -> Values:
        fs_rhs, sfs_rhs = homogeneous_rhs(values[0], values[1], kernels)
        return fs_rhs, sfs_rhs

    _emit(trajectory, state)
    _write_outputs(config, state, 0, out_dir)
    fs_values = f.values[:, 0, 0, :]
    sfs_values = None if phi is None else phi.values[:, 0, 0, :]
    n_steps = cfg.n_steps
    for step_index in range(1, n_steps + 1):
        fs_values, sfs_values = _advance((fs_values, sfs_values), rhs, cfg.dt, cfg.stepper)
        _check_negativity(fs_values, "fs", step_index, cfg.negativity_tolerance)
        if sfs_values is not None:
            _check_negativity(sfs_values, "sfs", step_index, cfg.negativity_tolerance)
        state = SimulationState(
            step_index * cfg.dt,
            f.with_values(fs_values[:, None, None, :]),
            None if phi is None or sfs_values is None else phi.with_values(sfs_values[:, None, None, :]),
        )
        if step_index % cfg.output_stride == 0:
            _emit(trajectory, state)
            logger.info("step %d/%d, t = %.6g", step_index, n_steps, state.t)
        _write_outputs(config, state, step_index, out_dir)
    trajectory.final = state
    trajectory.steps = n_steps
    return trajectory
