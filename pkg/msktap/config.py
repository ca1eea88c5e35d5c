"""
Typed system configuration.

A configuration document is plain JSON (see msktap/config.json for a complete example). `validate_config` checks
it key by key and returns a SystemConfig holding the grids, domains, integrator settings and the kernel blocks.
The resolved document is kept verbatim so that it can be echoed into a run manifest and re-run.
"""

from copy import deepcopy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any
import json
import logging

from msktap.core import ConfigurationError, get_digest_of_string
from msktap.geometry import SensitivityDomain, SensitivityTable
from msktap.kernels import KernelSet, build_kernel_set
from msktap.operators import Geometries
from msktap.state import ActivityGrid, DistributionField, PhaseGrid, SpaceGrid, VelocityGrid, make_profile
from msktap.transport import TransportScheme
from msktap.utils import parse_exit_segment

logger = logging.getLogger(__name__)

MODES = ("spatial", "homogeneous")
SPLITTINGS = ("lie", "strang")
STEPPERS = ("euler", "heun")
SECTIONS = (
    "system",
    "space",
    "velocity",
    "sfs_velocity",
    "activity",
    "sensitivity",
    "transport",
    "integrator",
    "kernels",
    "initial",
    "output",
)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    splitting: str = "lie"
    stepper: str = "heun"
    negativity_tolerance: float = 1e-10
    output_stride: int = 1
    threads: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive. Found {self.dt}", "integrator.dt")
        if not self.t_end >= 0:
            raise ConfigurationError(f"t_end must be >= 0. Found {self.t_end}", "integrator.t_end")
        if self.splitting not in SPLITTINGS:
            raise ConfigurationError(f"splitting must be one of {SPLITTINGS}", "integrator.splitting")
        if self.stepper not in STEPPERS:
            raise ConfigurationError(f"stepper must be one of {STEPPERS}", "integrator.stepper")
        if not self.negativity_tolerance >= 0:
            raise ConfigurationError("negativity_tolerance must be >= 0", "integrator.negativity_tolerance")
        if self.output_stride < 1:
            raise ConfigurationError("output_stride must be >= 1", "integrator.output_stride")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1", "integrator.threads")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class OutputConfig:
    snapshot_stride: int = 0
    frame_stride: int = 0
    frame_scale: int = 8


@dataclass(frozen=True, eq=False)
class SystemConfig:
    name: str
    seed: str
    mode: str
    n: int
    m: int
    fs_grid: PhaseGrid
    sfs_grid: PhaseGrid | None
    fs_domain: SensitivityDomain
    sfs_domain: SensitivityDomain | None
    transport: TransportScheme
    integrator: IntegratorConfig
    output: OutputConfig
    kernel_blocks: list[dict[str, Any]] = field(repr=False)
    initial_fs: list[dict[str, Any]] = field(repr=False)
    initial_sfs: list[dict[str, Any]] = field(repr=False)
    document: dict[str, Any] = field(repr=False)
    base_dir: Path | None = None

    @property
    def is_homogeneous(self) -> bool:
        return self.mode == "homogeneous"

    @property
    def digest(self) -> str:
        return get_digest_of_string(json.dumps(self.document, sort_keys=True))

    def build_kernels(self) -> KernelSet:
        return build_kernel_set(self.kernel_blocks, self.fs_grid, self.sfs_grid, self.n, self.m, self.base_dir)

    def geometries(self) -> Geometries:
        if self.is_homogeneous:
            return Geometries.homogeneous()
        fs_table = SensitivityTable.build(self.fs_domain, self.fs_grid.space, self.fs_grid.velocity)
        sfs_table = None
        if self.sfs_grid is not None and self.sfs_domain is not None:
            sfs_table = SensitivityTable.build(self.sfs_domain, self.sfs_grid.space, self.sfs_grid.velocity)
        return Geometries(fs_table, sfs_table)

    def initial_fields(self) -> tuple[DistributionField, DistributionField | None]:
        fs_values = [
            make_profile(self.fs_grid, item, f"{self.seed}:fs{index}") for index, item in enumerate(self.initial_fs)
        ]
        fs_field = DistributionField(self.fs_grid, fs_values)
        if self.sfs_grid is None:
            return fs_field, None
        sfs_values = [
            make_profile(self.sfs_grid, item, f"{self.seed}:sfs{index}") for index, item in enumerate(self.initial_sfs)
        ]
        return fs_field, DistributionField(self.sfs_grid, sfs_values)

    def to_homogeneous(self) -> "SystemConfig":
        """
        The same system reduced to spatial homogeneity: one cell, one resting velocity node, and every initial
        profile replaced by a uniform one with the same density.

        Returns:
            SystemConfig: The homogeneous configuration
        """
        document = deepcopy(self.document)
        document["system"]["mode"] = "homogeneous"
        initial = document.setdefault("initial", {})
        for scale in ("fs", "sfs"):
            profiles = initial.get(scale, [])
            for profile in profiles:
                profile["kind"] = "uniform"
                for key in ("center", "width"):
                    profile.pop(key, None)
        return validate_config(document, self.base_dir)


def _is_tabulated(block: Any) -> bool:
    return isinstance(block, dict) and block.get("form", None) == "tabulated"


def _section(document: dict[str, Any], key: str, required: bool = True) -> dict[str, Any]:
    value = document.get(key, None)
    if value is None:
        if required:
            raise ConfigurationError(f"{key} not found in config", key)
        return {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"{key} (in config) must be an object", key)
    return value


def _number(section: dict[str, Any], key: str, path: str, default: float | None = None) -> float:
    value = section.get(key, default)
    if value is None:
        raise ConfigurationError(f"{key} not found in config", f"{path}.{key}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{key} (in config) must have a numeric value. Found {value!r}", f"{path}.{key}")
    return float(value)


def _integer(section: dict[str, Any], key: str, path: str, default: int | None = None) -> int:
    value = section.get(key, default)
    if value is None:
        raise ConfigurationError(f"{key} not found in config", f"{path}.{key}")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{key} (in config) must have an integer value. Found {value!r}", f"{path}.{key}")
    return value


def _string(section: dict[str, Any], key: str, path: str, default: str | None = None) -> str:
    value = section.get(key, default)
    if value is None:
        raise ConfigurationError(f"{key} not found in config", f"{path}.{key}")
    if not isinstance(value, str):
        raise ConfigurationError(f"{key} (in config) must be a string. Found {value!r}", f"{path}.{key}")
    return value


def _velocity_grid(section: dict[str, Any], path: str) -> VelocityGrid:
    if "nodes" in section:
        weights = section.get("weights", None)
        if weights is None:
            raise ConfigurationError("explicit nodes need explicit weights", f"{path}.weights")
        return VelocityGrid(section["nodes"], weights)
    return VelocityGrid.polar(
        _integer(section, "directions", path),
        _integer(section, "speeds", path, 1),
        _number(section, "v_max", path),
        _number(section, "measure", path, 1.0),
    )


def _activity_grid(section: dict[str, Any], path: str) -> ActivityGrid:
    return ActivityGrid(
        _integer(section, "size", path), _number(section, "raw_min", path, 0.0), _number(section, "raw_max", path, 1.0)
    )


def _domain(section: dict[str, Any], path: str) -> SensitivityDomain:
    return SensitivityDomain.from_degrees(
        _number(section, "half_angle_deg", path, 180.0),
        _number(section, "radius", path),
        _string(section, "weighting", path, "uniform-normalized"),
    )


def _profiles(initial: dict[str, Any], scale: str, count: int) -> list[dict[str, Any]]:
    profiles = initial.get(scale, None)
    if profiles is None:
        return [{"kind": "uniform", "density": 1.0} for _ in range(count)]
    if not isinstance(profiles, list) or not all(isinstance(item, dict) for item in profiles):
        raise ConfigurationError("must be a list of profile objects", f"initial.{scale}")
    if len(profiles) != count:
        raise ConfigurationError(f"expected {count} profiles, found {len(profiles)}", f"initial.{scale}")
    return profiles


def validate_config(document: dict[str, Any], base_dir: Path | None = None) -> SystemConfig:
    """
    Validate a configuration document and build the typed system configuration.

    Args:
        document (dict[str, Any]): The parsed JSON document
        base_dir (Path | None): Directory that relative paths in the document are resolved against

    Returns:
        SystemConfig: The validated configuration; its kernels have been built once to surface kernel errors
    """
    if "preset" in document:
        raise ConfigurationError("preset documents must be expanded with scenarios.build_preset first", "preset")
    unknown = sorted(set(document) - set(SECTIONS))
    if unknown:
        raise ConfigurationError(f"unknown sections {unknown}. Valid sections: {list(SECTIONS)}")
    document = deepcopy(document)
    if base_dir is not None:
        # manifests are written elsewhere, so tabulated kernel paths are pinned to absolute ones
        for block in document.get("kernels", None) or []:
            params = block.get("params", None) if isinstance(block, dict) else None
            if _is_tabulated(block) and isinstance(params, dict) and isinstance(params.get("path"), str):
                if not Path(params["path"]).is_absolute():
                    params["path"] = str((base_dir / params["path"]).resolve())

    system = _section(document, "system")
    name = _string(system, "name", "system", "unnamed")
    seed = _string(system, "seed", "system", "msktap")
    mode = _string(system, "mode", "system", "spatial")
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}. Found '{mode}'", "system.mode")
    n = _integer(system, "n", "system")
    m = _integer(system, "m", "system", 0)
    if n < 1 or m < 0:
        raise ConfigurationError(f"need n >= 1 and m >= 0. Found n={n}, m={m}", "system")

    activity = _section(document, "activity")
    fs_activity = _activity_grid(_section(activity, "fs"), "activity.fs")
    sfs_activity = _activity_grid(activity["sfs"], "activity.sfs") if "sfs" in activity else fs_activity

    sensitivity = _section(document, "sensitivity", required=mode == "spatial")
    if mode == "spatial":
        raw_space = _section(document, "space")
        exits = raw_space.get("exits", [])
        if not isinstance(exits, list):
            raise ConfigurationError("exits (in config) must be a list of strings like 'right:4-7'", "space.exits")
        space = SpaceGrid(
            _number(raw_space, "lx", "space"),
            _number(raw_space, "ly", "space"),
            _integer(raw_space, "nx", "space"),
            _integer(raw_space, "ny", "space"),
            _string(raw_space, "boundary", "space", "periodic"),
            tuple(parse_exit_segment(raw) for raw in exits),
        )
        if space.exits and space.is_periodic:
            raise ConfigurationError("exits need an absorbing boundary", "space.exits")
        fs_velocity = _velocity_grid(_section(document, "velocity"), "velocity")
        raw_sfs_velocity = _section(document, "sfs_velocity", required=False)
        sfs_velocity = _velocity_grid(raw_sfs_velocity, "sfs_velocity") if raw_sfs_velocity else fs_velocity
        fs_grid = PhaseGrid(space, fs_velocity, fs_activity)
        sfs_grid = PhaseGrid(space, sfs_velocity, sfs_activity) if m > 0 else None
        fs_domain = _domain(_section(sensitivity, "fs"), "sensitivity.fs")
        sfs_domain = _domain(_section(sensitivity, "sfs"), "sensitivity.sfs") if m > 0 else None
    else:
        fs_grid = PhaseGrid.homogeneous(fs_activity)
        sfs_grid = PhaseGrid.homogeneous(sfs_activity) if m > 0 else None
        fs_domain = SensitivityTable.homogeneous().domain
        sfs_domain = fs_domain if m > 0 else None

    raw_transport = _section(document, "transport", required=False)
    transport = TransportScheme(
        _string(raw_transport, "scheme", "transport", "upwind"), _number(raw_transport, "cfl", "transport", 1.0)
    )

    raw_integrator = _section(document, "integrator")
    integrator = IntegratorConfig(
        _number(raw_integrator, "dt", "integrator"),
        _number(raw_integrator, "t_end", "integrator"),
        _string(raw_integrator, "splitting", "integrator", "lie"),
        _string(raw_integrator, "stepper", "integrator", "heun"),
        _number(raw_integrator, "negativity_tolerance", "integrator", 1e-10),
        _integer(raw_integrator, "output_stride", "integrator", 1),
        _integer(raw_integrator, "threads", "integrator", 1),
    )
    if abs(integrator.n_steps * integrator.dt - integrator.t_end) > 1e-9 * max(1.0, integrator.t_end):
        logger.warning(
            "t_end %s is not a multiple of dt %s; running %d steps", integrator.t_end, integrator.dt, integrator.n_steps
        )

    raw_output = _section(document, "output", required=False)
    output = OutputConfig(
        _integer(raw_output, "snapshot_stride", "output", 0),
        _integer(raw_output, "frame_stride", "output", 0),
        _integer(raw_output, "frame_scale", "output", 8),
    )

    kernel_blocks = document.get("kernels", [])
    if not isinstance(kernel_blocks, list):
        raise ConfigurationError("kernels (in config) must be a list of kernel blocks", "kernels")

    initial = _section(document, "initial", required=False)
    initial_fs = _profiles(initial, "fs", n)
    initial_sfs = _profiles(initial, "sfs", m)

    config = SystemConfig(
        name,
        seed,
        mode,
        n,
        m,
        fs_grid,
        sfs_grid,
        fs_domain,
        sfs_domain,
        transport,
        integrator,
        output,
        kernel_blocks,
        initial_fs,
        initial_sfs,
        document,
        base_dir,
    )
    kernels = config.build_kernels()
    if config.is_homogeneous:
        violations = kernels.homogeneous_violations()
        if violations:
            raise ConfigurationError(f"kernels depend on space or velocity: {violations}", "kernels")
    config.initial_fields()
    logger.info("validated config '%s' (%s, n=%d, m=%d)", name, mode, n, m)
    return config


def describe(config: SystemConfig) -> list[str]:
    """Human-readable summary lines of a validated configuration."""
    lines = [f"name: {config.name}", f"mode: {config.mode}"]
    lines.append(f"subsystems: {config.n} FS, {config.m} SFS")
    space = config.fs_grid.space
    lines.append(f"space: {space.nx} x {space.ny} cells over {space.lx} x {space.ly}, boundary {space.boundary}")
    if space.exits:
        lines.append("exits: " + ", ".join(f"{side}:{start}-{stop}" for side, start, stop in space.exits))
    lines.append(f"velocity nodes: {config.fs_grid.velocity.size} (v_max {config.fs_grid.velocity.v_max})")
    lines.append(f"activity nodes: {config.fs_grid.activity.size}")
    lines.append(f"kernels: {len(config.kernel_blocks)}")
    integrator = config.integrator
    lines.append(
        f"integrator: {integrator.stepper}, {integrator.splitting} splitting, dt {integrator.dt}, "
        + f"{integrator.n_steps} steps"
    )
    lines.append(f"digest: {config.digest}")
    return lines
