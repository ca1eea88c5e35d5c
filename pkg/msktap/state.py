"""
Phase-space discretization, distribution storage and moment extraction.

Space is a uniform Nx x Ny cell grid, velocity a finite node set with quadrature weights and activity the
midpoints of a uniform partition of [0, 1]. Distribution values are stored as arrays indexed
(subsystem, cell, velocity node, activity node), where cell = ix * Ny + iy.
"""

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator
import json
import math

import numpy as np

from msktap.core import ConfigurationError, DeterministicRandomCore, DomainError
from msktap.utils import EXIT_SIDES, parse_exit_segment, write_csv

BOUNDARY_TYPES = ("periodic", "absorbing")
PROFILE_KINDS = ("uniform", "gaussian", "random")
MOMENT_COLUMNS = ("t", "subsystem", "ix", "iy", "rho", "vx_mean", "vy_mean", "u_mean", "defined")
HOMOGENEOUS_COLUMNS = ("t", "subsystem", "u_mean", "mass")
ZERO_SPEED_FRACTION = 1e-12


def normalize_activity(u: float, u_m: float, u_M: float) -> float:
    """
    Map a raw activity value from [u_m, u_M] onto [0, 1].

    Args:
        u (float): Raw activity
        u_m (float): Lower bound of the raw activity
        u_M (float): Upper bound of the raw activity

    Returns:
        float: (u - u_m) / (u_M - u_m)
    """
    if not u_M > u_m:
        raise DomainError(f"activity bounds are inverted or empty: [{u_m}, {u_M}]")
    if u < u_m or u > u_M:
        raise DomainError(f"activity {u} lies outside [{u_m}, {u_M}]")
    return (u - u_m) / (u_M - u_m)


@dataclass(frozen=True)
class SpaceGrid:
    lx: float
    ly: float
    nx: int
    ny: int
    boundary: str = "periodic"
    exits: tuple[tuple[str, int, int], ...] = ()

    def __post_init__(self):
        if not isinstance(self.nx, int) or not isinstance(self.ny, int) or self.nx < 1 or self.ny < 1:
            raise ConfigurationError(f"cell counts must be integers >= 1. Found {self.nx} x {self.ny}", "space")
        if not self.lx > 0 or not self.ly > 0:
            raise ConfigurationError(f"extent must be positive. Found {self.lx} x {self.ly}", "space")
        if self.boundary not in BOUNDARY_TYPES:
            raise ConfigurationError(f"boundary must be one of {BOUNDARY_TYPES}. Found '{self.boundary}'", "space")
        for side, start, stop in self.exits:
            if side not in EXIT_SIDES:
                raise ConfigurationError(f"exit side must be one of {EXIT_SIDES}. Found '{side}'", "space.exits")
            side_length = self.ny if side in ("left", "right") else self.nx
            if start < 0 or stop >= side_length or stop < start:
                raise ConfigurationError(
                    f"exit {side}:{start}-{stop} does not lie on the boundary (side has {side_length} cells)",
                    "space.exits",
                )

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def is_periodic(self) -> bool:
        return self.boundary == "periodic"

    @cached_property
    def centers(self) -> np.ndarray:
        ix, iy = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        return np.stack([(ix.ravel() + 0.5) * self.dx, (iy.ravel() + 0.5) * self.dy], axis=1)

    def cell_index(self, ix: int, iy: int) -> int:
        return ix * self.ny + iy

    def cell_coords(self, cell: int) -> tuple[int, int]:
        return divmod(cell, self.ny)

    def displacement(self, x: np.ndarray, x_star: np.ndarray) -> np.ndarray:
        """Displacement from x to x_star; the shortest image is used under periodic boundary."""
        delta = np.asarray(x_star, dtype=float) - np.asarray(x, dtype=float)
        if self.is_periodic:
            extent = np.array([self.lx, self.ly])
            delta = delta - extent * np.round(delta / extent)
        return delta

    def open_faces(self, side: str) -> np.ndarray:
        """
        Boolean mask over the cells along one side, true where a boundary face lets mass leave.

        Args:
            side (str): One of left, right, bottom, top

        Returns:
            np.ndarray: Mask of length Ny (left/right) or Nx (bottom/top)
        """
        length = self.ny if side in ("left", "right") else self.nx
        if self.is_periodic:
            return np.zeros(length, dtype=bool)
        if not self.exits:
            return np.ones(length, dtype=bool)
        mask = np.zeros(length, dtype=bool)
        for exit_side, start, stop in self.exits:
            if exit_side == side:
                mask[start : stop + 1] = True
        return mask

    def exit_points(self) -> np.ndarray:
        """Midpoints of every exit face, shape (k, 2)."""
        points = []
        for side, start, stop in self.exits:
            for cell in range(start, stop + 1):
                if side == "left":
                    points.append((0.0, (cell + 0.5) * self.dy))
                elif side == "right":
                    points.append((self.lx, (cell + 0.5) * self.dy))
                elif side == "bottom":
                    points.append(((cell + 0.5) * self.dx, 0.0))
                else:
                    points.append(((cell + 0.5) * self.dx, self.ly))
        return np.array(points, dtype=float).reshape(-1, 2)

    def describe(self) -> dict[str, Any]:
        return {
            "lx": self.lx,
            "ly": self.ly,
            "nx": self.nx,
            "ny": self.ny,
            "boundary": self.boundary,
            "exits": [f"{side}:{start}-{stop}" for side, start, stop in self.exits],
        }


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if nodes.shape[0] < 1:
            raise ConfigurationError("a velocity grid needs at least one node", "velocity")
        if weights.shape[0] != nodes.shape[0]:
            raise ConfigurationError(f"{nodes.shape[0]} nodes but {weights.shape[0]} weights", "velocity")
        if not np.all(np.isfinite(nodes)) or not np.all(weights > 0):
            raise ConfigurationError("velocity nodes must be finite and weights positive", "velocity")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def polar(cls, directions: int, speeds: int, v_max: float, measure: float = 1.0) -> "VelocityGrid":
        """
        Default layout: `directions` uniformly spaced headings times `speeds` speeds in (0, v_max].

        Node index is speed_level * directions + direction. Weights are equal and sum to `measure`.
        """
        if directions < 1 or speeds < 1 or not v_max > 0 or not measure > 0:
            raise ConfigurationError("directions, speeds, v_max and measure must all be positive", "velocity")
        angles = 2.0 * np.pi * np.arange(directions) / directions
        levels = v_max * np.arange(1, speeds + 1) / speeds
        nodes = np.array([(s * math.cos(a), s * math.sin(a)) for s in levels for a in angles])
        # exact zeros keep symmetric grids exactly symmetric
        nodes[np.abs(nodes) < 1e-15 * v_max] = 0.0
        weights = np.full(len(nodes), measure / len(nodes))
        return cls(nodes, weights)

    @classmethod
    def at_rest(cls) -> "VelocityGrid":
        return cls(np.zeros((1, 2)), np.ones(1))

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @cached_property
    def speeds(self) -> np.ndarray:
        return np.hypot(self.nodes[:, 0], self.nodes[:, 1])

    @property
    def v_max(self) -> float:
        return float(self.speeds.max())

    @cached_property
    def unit_directions(self) -> np.ndarray:
        """Unit heading per node; zero rows where the speed is below ZERO_SPEED_FRACTION * v_max."""
        directions = np.zeros_like(self.nodes)
        moving = self.speeds > ZERO_SPEED_FRACTION * self.v_max
        directions[moving] = self.nodes[moving] / self.speeds[moving, None]
        return directions

    @cached_property
    def speed_levels(self) -> np.ndarray:
        return np.unique(np.round(self.speeds, 12))

    @cached_property
    def speed_level_index(self) -> np.ndarray:
        return np.argmin(np.abs(self.speeds[:, None] - self.speed_levels[None, :]), axis=1)

    def describe(self) -> dict[str, Any]:
        return {"nodes": self.nodes.tolist(), "weights": self.weights.tolist()}


@dataclass(frozen=True)
class ActivityGrid:
    size: int
    raw_min: float = 0.0
    raw_max: float = 1.0

    def __post_init__(self):
        if not isinstance(self.size, int) or self.size < 1:
            raise ConfigurationError(f"activity node count must be an integer >= 1. Found {self.size}", "activity")
        if not self.raw_max > self.raw_min:
            raise ConfigurationError(f"raw bounds inverted: [{self.raw_min}, {self.raw_max}]", "activity")

    @property
    def delta(self) -> float:
        return 1.0 / self.size

    @cached_property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.size) + 0.5) / self.size

    def normalize(self, raw_value: float) -> float:
        return normalize_activity(raw_value, self.raw_min, self.raw_max)

    def describe(self) -> dict[str, Any]:
        return {"size": self.size, "raw_min": self.raw_min, "raw_max": self.raw_max}


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    space: SpaceGrid
    velocity: VelocityGrid
    activity: ActivityGrid

    @classmethod
    def homogeneous(cls, activity: ActivityGrid) -> "PhaseGrid":
        """One cell of unit area and one resting velocity node of unit weight: only activity remains."""
        return cls(SpaceGrid(1.0, 1.0, 1, 1, "periodic"), VelocityGrid.at_rest(), activity)

    @property
    def is_homogeneous(self) -> bool:
        return self.space.n_cells == 1 and self.velocity.size == 1 and self.velocity.v_max == 0.0

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.space.n_cells, self.velocity.size, self.activity.size

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weight w_v * du for every (velocity node, activity node), shape (Nv, Nu)."""
        return np.outer(self.velocity.weights, np.full(self.activity.size, self.activity.delta))

    def describe(self) -> dict[str, Any]:
        return {
            "space": self.space.describe(),
            "velocity": self.velocity.describe(),
            "activity": self.activity.describe(),
        }

    @classmethod
    def from_description(cls, description: dict[str, Any]) -> "PhaseGrid":
        space = dict(description["space"])
        exits = tuple(parse_exit_segment(raw) for raw in space.pop("exits", []))
        return cls(
            SpaceGrid(exits=exits, **space),
            VelocityGrid(np.array(description["velocity"]["nodes"]), np.array(description["velocity"]["weights"])),
            ActivityGrid(**description["activity"]),
        )


@dataclass(frozen=True, eq=False)
class DistributionField:
    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 4 or values.shape[1:] != self.grid.shape:
            raise ValueError(f"values must have shape (S, {self.grid.shape}). Found {values.shape}")
        if values.shape[0] < 1:
            raise ValueError("a distribution field needs at least one subsystem")
        if not np.all(np.isfinite(values)):
            raise ValueError("distribution values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: PhaseGrid, subsystem_count: int) -> "DistributionField":
        return cls(grid, np.zeros((subsystem_count,) + grid.shape))

    @property
    def subsystem_count(self) -> int:
        return self.values.shape[0]

    def with_values(self, values: np.ndarray) -> "DistributionField":
        return DistributionField(self.grid, values)


@dataclass(frozen=True, eq=False)
class MomentField:
    density: np.ndarray
    mean_velocity: np.ndarray
    mean_activity: np.ndarray
    defined_mask: np.ndarray = field(repr=False)


def _check_subsystem(dist: DistributionField, subsystem: int) -> None:
    if not 0 <= subsystem < dist.subsystem_count:
        raise IndexError(f"subsystem {subsystem} out of range for a field with {dist.subsystem_count} subsystems")


def density(dist: DistributionField, subsystem: int) -> np.ndarray:
    """
    Local density per cell: the quadrature of f over velocity and activity.

    Args:
        dist (DistributionField): The distribution
        subsystem (int): Which subsystem

    Returns:
        np.ndarray: Density per cell, shape (n_cells,)
    """
    _check_subsystem(dist, subsystem)
    return np.einsum("xvu,vu->x", dist.values[subsystem], dist.grid.weights)


def moments(dist: DistributionField, subsystem: int) -> MomentField:
    """
    Density, mean velocity and mean activity per cell. Cells with zero density are flagged undefined and
    their mean fields are NaN.

    Args:
        dist (DistributionField): The distribution
        subsystem (int): Which subsystem

    Returns:
        MomentField: The moments
    """
    rho = density(dist, subsystem)
    values = dist.values[subsystem]
    weights = dist.grid.weights
    momentum = np.einsum("xvu,vu,vk->xk", values, weights, dist.grid.velocity.nodes)
    activity_moment = np.einsum("xvu,vu,u->x", values, weights, dist.grid.activity.nodes)
    defined = rho > 0.0
    mean_velocity = np.full_like(momentum, np.nan)
    mean_activity = np.full_like(rho, np.nan)
    mean_velocity[defined] = momentum[defined] / rho[defined, None]
    mean_activity[defined] = activity_moment[defined] / rho[defined]
    return MomentField(rho, mean_velocity, mean_activity, defined)


def total_mass(dist: DistributionField, subsystem: int) -> float:
    return float(density(dist, subsystem).sum() * dist.grid.space.cell_area)


def activity_profile(activity: ActivityGrid, mean: float, spread: float) -> np.ndarray:
    """Discrete Gaussian in normalized activity with unit integral; spread <= 0 puts all mass on one node."""
    if spread <= 0.0:
        profile = np.zeros(activity.size)
        profile[int(np.argmin(np.abs(activity.nodes - mean)))] = 1.0
    else:
        profile = np.exp(-0.5 * ((activity.nodes - mean) / spread) ** 2)
    return profile / (profile.sum() * activity.delta)


def make_profile(grid: PhaseGrid, profile: dict[str, Any], seed_phrase: str = "msktap") -> np.ndarray:
    """
    Build an initial distribution for one subsystem.

    Args:
        grid (PhaseGrid): Target grid
        profile (dict[str, Any]): Profile description with keys kind, density, activity_mean (raw units),
          activity_spread, and for gaussian profiles center and width
        seed_phrase (str): Seed for the random profile

    Returns:
        np.ndarray: Values of shape (n_cells, Nv, Nu)
    """
    kind = profile.get("kind", "uniform")
    if kind not in PROFILE_KINDS:
        raise ConfigurationError(f"profile kind must be one of {PROFILE_KINDS}. Found '{kind}'", "initial")
    peak = float(profile.get("density", 1.0))
    if peak < 0:
        raise ConfigurationError("profile density must be >= 0", "initial")
    space = grid.space
    if kind == "uniform":
        spatial = np.full(space.n_cells, peak)
    elif kind == "gaussian":
        center = np.asarray(profile.get("center", [space.lx / 2, space.ly / 2]), dtype=float)
        width = float(profile.get("width", min(space.lx, space.ly) / 4))
        offsets = np.array([space.displacement(center, point) for point in space.centers])
        spatial = peak * np.exp(-0.5 * np.sum(offsets**2, axis=1) / width**2)
    else:
        spatial = peak * DeterministicRandomCore(seed_phrase).uniform((space.n_cells,), 0.5, 1.5)
    raw_mean = profile.get("activity_mean", None)
    mean = 0.5 if raw_mean is None else grid.activity.normalize(float(raw_mean))
    spread = float(profile.get("activity_spread", 0.2))
    velocity_profile = np.full(grid.velocity.size, 1.0 / grid.velocity.weights.sum())
    return spatial[:, None, None] * velocity_profile[None, :, None] * activity_profile(grid.activity, mean, spread)


def moment_rows(t: float, label: str, moment_field: MomentField, space: SpaceGrid) -> Iterator[tuple]:
    for cell in range(space.n_cells):
        ix, iy = space.cell_coords(cell)
        yield (
            float(t),
            label,
            ix,
            iy,
            float(moment_field.density[cell]),
            float(moment_field.mean_velocity[cell, 0]),
            float(moment_field.mean_velocity[cell, 1]),
            float(moment_field.mean_activity[cell]),
            int(moment_field.defined_mask[cell]),
        )


def save_snapshot(
    path: Path, t: float, fs_field: DistributionField, sfs_field: DistributionField | None = None
) -> None:
    """
    Write a self-describing snapshot: grid descriptors as JSON plus the raw value arrays.

    Args:
        path (Path): Destination (.npz)
        t (float): Simulation time
        fs_field (DistributionField): FS distribution
        sfs_field (DistributionField | None): SFS distribution, if the system has one

    Returns:
        None
    """
    descriptor = {"t": t, "fs_grid": fs_field.grid.describe()}
    arrays = {"fs": fs_field.values}
    if sfs_field is not None:
        descriptor["sfs_grid"] = sfs_field.grid.describe()
        arrays["sfs"] = sfs_field.values
    np.savez(path, descriptor=np.array(json.dumps(descriptor)), **arrays)


def load_snapshot(path: Path) -> tuple[float, DistributionField, DistributionField | None]:
    with np.load(path, allow_pickle=False) as archive:
        descriptor = json.loads(str(archive["descriptor"]))
        fs_field = DistributionField(PhaseGrid.from_description(descriptor["fs_grid"]), archive["fs"])
        sfs_field = None
        if "sfs_grid" in descriptor:
            sfs_field = DistributionField(PhaseGrid.from_description(descriptor["sfs_grid"]), archive["sfs"])
    return float(descriptor["t"]), fs_field, sfs_field


def homogeneous_row(t: float, label: str, dist: DistributionField, subsystem: int) -> tuple:
    moment_field = moments(dist, subsystem)
    u_mean = float(np.nan)
    if moment_field.defined_mask.all():
        u_mean = float(np.sum(moment_field.mean_activity * moment_field.density) / moment_field.density.sum())
    return float(t), label, u_mean, total_mass(dist, subsystem)


def write_moments_csv(path: Path, rows: Iterable[tuple], homogeneous: bool = False) -> int:
    """
    Write moment rows with the spatial columns, or the activity-only columns of a homogeneous run.

    Args:
        path (Path): Destination
        rows (Iterable[tuple]): Rows from moment_rows or homogeneous_row
        homogeneous (bool): Use the homogeneous columns

    Returns:
        int: Number of rows written
    """
    return write_csv(path, HOMOGENEOUS_COLUMNS if homogeneous else MOMENT_COLUMNS, rows)
