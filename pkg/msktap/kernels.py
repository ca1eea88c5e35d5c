"""
Rate, transition and proliferation/destruction kernels.

Kernels are immutable and bound to the grids of the candidate (or test) scale and the field scale. Built-in
transition forms send every conditioning tuple (v_c, u_c, v*, u*) to exactly one output node, so they are
represented by an integer map of flat output indices (v * Nu + u). Tabulated kernels carry a dense array of
density values indexed (v_c, u_c, v*, u*, v, u).
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping
import csv
import logging

import numpy as np

from msktap.core import ConfigurationError, KernelDefinitionError
from msktap.state import DistributionField, PhaseGrid, density

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-12

# scope -> (candidate scale, field scale)
RATE_SCOPES = {
    "alpha": ("fs", "fs"),
    "beta": ("sfs", "sfs"),
    "gamma_fs_sfs": ("fs", "sfs"),
    "gamma_sfs_fs": ("sfs", "fs"),
}
# transition / proliferation scope -> the rate scope that drives it
TRANSITION_SCOPES = {"A": "alpha", "B": "gamma_fs_sfs", "C": "beta", "D": "gamma_sfs_fs"}
PROLIFERATION_SCOPES = {"E": "alpha", "F": "gamma_sfs_fs"}

# form -> {parameter: default}; a default of None marks a required parameter
RATE_FORMS: dict[str, dict[str, Any]] = {
    "constant": {"alpha0": None},
    "density-modulated": {"alpha0": None, "kappa": None},
    "activity-weighted": {"alpha0": None, "kappa": None},
}
TRANSITION_FORMS: dict[str, dict[str, Any]] = {
    "identity": {},
    "activity-consensus": {"mu": None},
    "velocity-alignment": {"lambda": None, "lambda_activity": 0.0},
    "tabulated": {"path": None},
    "crowd-decision": {
        "lambda0": 0.2,
        "lambda_activity": 0.6,
        "exit_weight": 1.0,
        "avoid_weight": 0.5,
        "rho_ref": 1.0,
        "rho_max": 0.0,
    },
    "signal-avoidance": {"lambda_signal": 0.8, "mu": 0.0},
    "density-excitation": {"mu": None, "rho_ref": 1.0},
}
GAIN_FORMS: dict[str, dict[str, Any]] = {
    "zero": {},
    "constant": {"p": None},
    "density-saturated": {"p": None, "sigma": None},
    "activity-gated": {"p": None},
}
LOSS_FORMS: dict[str, dict[str, Any]] = {"zero": {}, "constant": {"l": None}, "activity-gated": {"l": None}}

# forms reading the local context, and forms that need space or velocity to make sense
CONTEXT_FORMS = {"density-modulated", "crowd-decision", "signal-avoidance", "density-excitation", "density-saturated"}
SPATIAL_FORMS = {"crowd-decision", "signal-avoidance"}
VELOCITY_FORMS = {"velocity-alignment", "crowd-decision", "signal-avoidance"}
UNIT_PARAMETERS = {"mu", "lambda", "lambda0", "lambda_signal"}


@dataclass(frozen=True)
class NodeState:
    """A state on a grid: velocity node index and activity node index."""

    velocity: int
    activity: int


@dataclass(frozen=True, eq=False)
class LocalContext:
    """
    What a particle learns about its surroundings before deciding: home-cell densities of every subsystem,
    the direction away from crowding (minus the FS density gradient) and the direction to the nearest exit.
    """

    fs_density: np.ndarray
    sfs_density: np.ndarray
    avoidance: np.ndarray
    exit_direction: np.ndarray

    @classmethod
    def build(
        cls, fs_field: DistributionField | None, sfs_field: DistributionField | None = None, fs_count: int = 0
    ) -> "LocalContext":
        """Without an FS field (fs_count zero-density FSs are assumed) the space is taken from the SFS field."""
        if fs_field is None:
            if sfs_field is None:
                raise ValueError("a local context needs an FS or an SFS field")
            space = sfs_field.grid.space
            fs_density = np.zeros((fs_count, space.n_cells))
        else:
            space = fs_field.grid.space
            fs_density = np.stack([density(fs_field, i) for i in range(fs_field.subsystem_count)])
        if sfs_field is None:
            sfs_density = np.zeros((0, space.n_cells))
        else:
            sfs_density = np.stack([density(sfs_field, j) for j in range(sfs_field.subsystem_count)])

        crowd = fs_density.sum(axis=0).reshape(space.nx, space.ny)
        gradient = np.zeros((space.nx, space.ny, 2))
        for axis, spacing, count in ((0, space.dx, space.nx), (1, space.dy, space.ny)):
            if count < 2:
                continue
            if space.is_periodic:
                gradient[..., axis] = (np.roll(crowd, -1, axis=axis) - np.roll(crowd, 1, axis=axis)) / (2 * spacing)
            else:
                gradient[..., axis] = np.gradient(crowd, spacing, axis=axis)
        gradient = gradient.reshape(-1, 2)
        magnitude = np.hypot(gradient[:, 0], gradient[:, 1])
        flat = magnitude <= 1e-12 * (1.0 + float(np.abs(crowd).max()))
        avoidance = np.zeros_like(gradient)
        avoidance[~flat] = -gradient[~flat] / magnitude[~flat, None]

        exit_direction = np.zeros((space.n_cells, 2))
        points = space.exit_points()
        if len(points):
            offsets = points[None, :, :] - space.centers[:, None, :]
            distances = np.hypot(offsets[..., 0], offsets[..., 1])
            nearest = offsets[np.arange(space.n_cells), np.argmin(distances, axis=1)]
            lengths = np.hypot(nearest[:, 0], nearest[:, 1])
            moving = lengths > 0
            exit_direction[moving] = nearest[moving] / lengths[moving, None]
        return cls(fs_density, sfs_density, avoidance, exit_direction)

    def density_of(self, scale: str, subsystem: int) -> np.ndarray:
        return self.fs_density[subsystem] if scale == "fs" else self.sfs_density[subsystem]


@dataclass(frozen=True, eq=False)
class _Kernel:
    scope: str
    pair: tuple[int, int]
    form: str
    params: Mapping[str, Any]
    candidate: PhaseGrid
    field_grid: PhaseGrid

    @property
    def kernel_id(self) -> str:
        return f"{self.scope}[{self.pair[0]},{self.pair[1]}]:{self.form}"

    @property
    def needs_context(self) -> bool:
        return self.form in CONTEXT_FORMS


@dataclass(frozen=True, eq=False)
class RateKernel(_Kernel):
    @property
    def is_zero(self) -> bool:
        return float(self.params["alpha0"]) == 0.0


@dataclass(frozen=True, eq=False)
class TransitionKernel(_Kernel):
    table: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_tabulated(self) -> bool:
        return self.form == "tabulated"


@dataclass(frozen=True, eq=False)
class ProliferationKernel(_Kernel):
    loss_form: str = "zero"
    loss_params: Mapping[str, Any] = field(default_factory=dict)

    @property
    def kernel_id(self) -> str:
        return f"{self.scope}[{self.pair[0]},{self.pair[1]}]:{self.form}/{self.loss_form}"

    @property
    def needs_context(self) -> bool:
        return self.form in CONTEXT_FORMS or self.loss_form in CONTEXT_FORMS


def _check_values(values: np.ndarray, kernel: _Kernel) -> np.ndarray:
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise KernelDefinitionError(f"kernel {kernel.kernel_id} evaluated to a negative or non-finite value")
    return values


def _require_context(kernel: _Kernel, context: LocalContext | None) -> LocalContext:
    if context is None:
        raise KernelDefinitionError(f"kernel {kernel.kernel_id} needs a LocalContext to be evaluated")
    return context


# Rates


def _rate_values(kernel: RateKernel, cells: Any, u_cand: Any, context: LocalContext | None) -> np.ndarray:
    alpha0 = float(kernel.params["alpha0"])
    if kernel.form == "constant":
        values = np.asarray(alpha0, dtype=float)
    elif kernel.form == "density-modulated":
        field_scale = RATE_SCOPES[kernel.scope][1]
        rho = _require_context(kernel, context).density_of(field_scale, kernel.pair[1])[cells]
        values = alpha0 * (1.0 + float(kernel.params["kappa"]) * rho)
    else:
        values = alpha0 * (1.0 + float(kernel.params["kappa"]) * u_cand)
    return _check_values(np.asarray(values, dtype=float), kernel)


def evaluate_rate(
    kernel: RateKernel, candidate: NodeState, field_state: NodeState, local_density: float | None = None
) -> float:
    """
    Interaction rate between a candidate and a field particle.

    Args:
        kernel (RateKernel): The rate kernel
        candidate (NodeState): Candidate state on the candidate grid
        field_state (NodeState): Field state on the field grid
        local_density (float | None): Density of the field subsystem, for density-modulated rates

    Returns:
        float: The rate, >= 0
    """
    del field_state  # built-in rates do not depend on the field particle's own state
    alpha0 = float(kernel.params["alpha0"])
    if kernel.form == "constant":
        value = alpha0
    elif kernel.form == "density-modulated":
        if local_density is None:
            raise KernelDefinitionError(f"kernel {kernel.kernel_id} needs the local density of the field subsystem")
        value = alpha0 * (1.0 + float(kernel.params["kappa"]) * local_density)
    else:
        value = alpha0 * (1.0 + float(kernel.params["kappa"]) * kernel.candidate.activity.nodes[candidate.activity])
    return float(_check_values(np.asarray(value), kernel))


def rate_table(kernel: RateKernel, context: LocalContext | None = None) -> np.ndarray:
    """Rates broadcastable to (cell, v_c, u_c, v*, u*)."""
    cells = np.arange(kernel.candidate.space.n_cells)[:, None, None, None, None]
    u_cand = kernel.candidate.activity.nodes[None, None, :, None, None]
    values = _rate_values(kernel, cells, u_cand, context)
    return values.reshape(values.shape + (1,) * (5 - values.ndim)) if values.ndim < 5 else values


# Transitions


def _snap_activity(grid_nodes: np.ndarray, target: np.ndarray, own: np.ndarray) -> np.ndarray:
    """Nearest activity node to target; ties go to the node nearest the candidate's own activity."""
    target, own = np.broadcast_arrays(np.asarray(target, dtype=float), np.asarray(own, dtype=float))
    distance = np.abs(target[..., None] - grid_nodes)
    tied = distance <= distance.min(axis=-1, keepdims=True) + 1e-12
    return np.argmin(np.where(tied, np.abs(own[..., None] - grid_nodes), np.inf), axis=-1)


def _snap_direction(kernel: TransitionKernel, heading: np.ndarray, level: Any, own_node: Any) -> np.ndarray:
    """
    Velocity node on speed level `level` whose direction is nearest to `heading`. A vanishing heading keeps
    the candidate's own node, as do ties that include it.
    """
    velocity = kernel.candidate.velocity
    scores = heading @ velocity.unit_directions.T
    level = np.asarray(level)
    own_node = np.asarray(own_node)
    on_level = velocity.speed_level_index == level[..., None]
    scores = np.where(on_level, scores, -np.inf)
    tied = scores >= scores.max(axis=-1, keepdims=True) - 1e-12
    own_tied = np.take_along_axis(tied, np.broadcast_to(own_node, tied.shape[:-1])[..., None], axis=-1)[..., 0]
    chosen = np.where(own_tied, own_node, np.argmax(tied, axis=-1))
    still = np.hypot(heading[..., 0], heading[..., 1]) < 1e-12
    return np.where(still, own_node, chosen)


def _crowd_level(kernel: TransitionKernel, rho: np.ndarray, vc: np.ndarray) -> np.ndarray:
    velocity = kernel.candidate.velocity
    rho_max = float(kernel.params["rho_max"])
    if rho_max <= 0.0:
        return velocity.speed_level_index[vc]
    moving_levels = np.flatnonzero(velocity.speed_levels > 0)
    if len(moving_levels) == 0:
        return velocity.speed_level_index[vc]
    wanted = velocity.v_max * np.clip(1.0 - rho / rho_max, 0.0, 1.0)
    candidates = velocity.speed_levels[moving_levels]
    return moving_levels[np.argmin(np.abs(np.asarray(wanted)[..., None] - candidates), axis=-1)]


def _targets(
    kernel: TransitionKernel, cells: Any, vc: Any, uc: Any, vs: Any, us: Any, context: LocalContext | None
) -> np.ndarray:
    """Flat output index v * Nu + u for broadcastable index arrays of the conditioning tuple."""
    cand, fld = kernel.candidate, kernel.field_grid
    params = kernel.params
    u_cand = cand.activity.nodes[uc]
    u_field = fld.activity.nodes[us]
    v_out: Any = vc
    u_out: Any = uc
    form = kernel.form
    if form == "activity-consensus":
        mu = float(params["mu"])
        u_out = _snap_activity(cand.activity.nodes, (1.0 - mu) * u_cand + mu * u_field, u_cand)
    elif form == "velocity-alignment":
        weight = np.clip(float(params["lambda"]) + float(params["lambda_activity"]) * u_cand, 0.0, 1.0)[..., None]
        heading = (1.0 - weight) * cand.velocity.unit_directions[vc] + weight * fld.velocity.unit_directions[vs]
        v_out = _snap_direction(kernel, heading, cand.velocity.speed_level_index[vc], vc)
    elif form == "crowd-decision":
        ctx = _require_context(kernel, context)
        rho = ctx.density_of("fs", kernel.pair[0])[cells]
        crowding = np.clip(rho / float(params["rho_ref"]), 0.0, 1.0)[..., None]
        goal = (
            float(params["exit_weight"]) * ctx.exit_direction[cells]
            + float(params["avoid_weight"]) * crowding * ctx.avoidance[cells]
        )
        imitation = np.clip(float(params["lambda0"]) + float(params["lambda_activity"]) * u_cand, 0.0, 1.0)[..., None]
        heading = (1.0 - imitation) * (cand.velocity.unit_directions[vc] + goal) + imitation * (
            fld.velocity.unit_directions[vs]
        )
        v_out = _snap_direction(kernel, heading, _crowd_level(kernel, rho, np.asarray(vc)), vc)
    elif form == "signal-avoidance":
        ctx = _require_context(kernel, context)
        weight = np.clip(float(params["lambda_signal"]) * u_field, 0.0, 1.0)[..., None]
        heading = (1.0 - weight) * cand.velocity.unit_directions[vc] + weight * ctx.avoidance[cells]
        v_out = _snap_direction(kernel, heading, cand.velocity.speed_level_index[vc], vc)
        mu = float(params["mu"])
        u_out = _snap_activity(cand.activity.nodes, (1.0 - mu) * u_cand + mu * u_field, u_cand)
    elif form == "density-excitation":
        ctx = _require_context(kernel, context)
        level = np.clip(ctx.density_of("fs", kernel.pair[1])[cells] / float(params["rho_ref"]), 0.0, 1.0)
        mu = float(params["mu"])
        u_out = _snap_activity(cand.activity.nodes, (1.0 - mu) * u_cand + mu * level, u_cand)
    return np.asarray(v_out) * cand.activity.size + np.asarray(u_out)


def transition_targets(kernel: TransitionKernel, context: LocalContext | None = None) -> np.ndarray:
    """
    Output node of every conditioning tuple for a built-in form.

    Args:
        kernel (TransitionKernel): A non-tabulated transition kernel
        context (LocalContext | None): Local context, required by context forms

    Returns:
        np.ndarray: Flat output indices of shape (cells or 1, Nv_c, Nu_c, Nv*, Nu*)
    """
    if kernel.is_tabulated:
        raise ValueError(f"{kernel.kernel_id} is tabulated and has no target map")
    n_cells = kernel.candidate.space.n_cells if kernel.needs_context else 1
    cells = np.arange(n_cells)[:, None, None, None, None]
    vc = np.arange(kernel.candidate.velocity.size)[None, :, None, None, None]
    uc = np.arange(kernel.candidate.activity.size)[None, None, :, None, None]
    vs = np.arange(kernel.field_grid.velocity.size)[None, None, None, :, None]
    us = np.arange(kernel.field_grid.activity.size)[None, None, None, None, :]
    shape = (n_cells, vc.size, uc.size, vs.size, us.size)
    return np.broadcast_to(_targets(kernel, cells, vc, uc, vs, us, context), shape)


def evaluate_transition(
    kernel: TransitionKernel,
    in_state: NodeState,
    field_state: NodeState,
    out_state: NodeState,
    context: LocalContext | None = None,
    cell: int = 0,
) -> float:
    """
    Transition probability density that a candidate in `in_state`, meeting a field particle in `field_state`,
    acquires `out_state`.

    Args:
        kernel (TransitionKernel): The transition kernel
        in_state (NodeState): Candidate state
        field_state (NodeState): Field particle state
        out_state (NodeState): Output state
        context (LocalContext | None): Local context for context forms
        cell (int): Home cell of the candidate, for context forms

    Returns:
        float: Density value; built-in forms give 1 / (w_v * du) at their output node and 0 elsewhere
    """
    if kernel.table is not None:
        return float(
            kernel.table[
                in_state.velocity,
                in_state.activity,
                field_state.velocity,
                field_state.activity,
                out_state.velocity,
                out_state.activity,
            ]
        )
    target = int(
        _targets(
            kernel,
            np.asarray(cell),
            np.asarray(in_state.velocity),
            np.asarray(in_state.activity),
            np.asarray(field_state.velocity),
            np.asarray(field_state.activity),
            context,
        )
    )
    if target != out_state.velocity * kernel.candidate.activity.size + out_state.activity:
        return 0.0
    return 1.0 / float(kernel.candidate.weights[out_state.velocity, out_state.activity])


def transition_density_table(kernel: TransitionKernel, context: LocalContext | None = None) -> np.ndarray:
    """Dense density values, shape (cells or 1, v_c, u_c, v*, u*, v, u)."""
    if kernel.table is not None:
        return kernel.table[None]
    targets = transition_targets(kernel, context)
    n_out = kernel.candidate.velocity.size * kernel.candidate.activity.size
    dense = (targets[..., None] == np.arange(n_out)).astype(float)
    dense = dense.reshape(targets.shape + kernel.candidate.weights.shape)
    return dense / kernel.candidate.weights


def normalization_defect(kernel: TransitionKernel, context: LocalContext | None = None) -> float:
    """Largest |sum over outputs of kernel * w_v * du - 1| over all conditioning tuples."""
    sums = np.einsum("...vu,vu->...", transition_density_table(kernel, context), kernel.candidate.weights)
    return float(np.max(np.abs(sums - 1.0)))


def check_normalized(kernel: TransitionKernel, context: LocalContext | None = None) -> None:
    defect = normalization_defect(kernel, context)
    if defect > NORMALIZATION_TOLERANCE:
        raise KernelDefinitionError(f"kernel {kernel.kernel_id} is not normalized (defect {defect:.3e})")


def normalize_transition(kernel: TransitionKernel) -> TransitionKernel:
    """
    Rescale every conditioning slice of a tabulated kernel so that it integrates to 1 over the outputs.

    Args:
        kernel (TransitionKernel): A tabulated kernel with nonnegative entries

    Returns:
        TransitionKernel: The normalized kernel
    """
    if kernel.table is None:
        raise ValueError(f"{kernel.kernel_id} is not tabulated")
    table = np.asarray(kernel.table, dtype=float)
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        raise KernelDefinitionError(f"kernel {kernel.kernel_id} has negative or non-finite entries")
    sums = np.einsum("abcdvu,vu->abcd", table, kernel.candidate.weights)
    empty = np.argwhere(sums <= 0.0)
    if len(empty):
        raise KernelDefinitionError(
            f"kernel {kernel.kernel_id} has an all-zero slice at conditioning tuple (v_c, u_c, v*, u*) = "
            + str(tuple(int(i) for i in empty[0]))
        )
    return TransitionKernel(
        kernel.scope, kernel.pair, kernel.form, kernel.params, kernel.candidate, kernel.field_grid,
        table / sums[..., None, None],
    )  # fmt: skip


def read_tabulated_csv(path: Path, candidate: PhaseGrid, field_grid: PhaseGrid) -> np.ndarray:
    """Read a CSV with columns vc, uc, vs, us, v, u, value into a dense (unnormalized) table."""
    shape = (
        candidate.velocity.size,
        candidate.activity.size,
        field_grid.velocity.size,
        field_grid.activity.size,
        candidate.velocity.size,
        candidate.activity.size,
    )
    table = np.zeros(shape)
    with path.open("r", encoding="utf-8", newline="") as file:
        for line_number, row in enumerate(csv.DictReader(file), start=2):
            try:
                index = tuple(int(row[key]) for key in ("vc", "uc", "vs", "us", "v", "u"))
                table[index] = float(row["value"])
            except (KeyError, ValueError, IndexError) as err:
                raise ConfigurationError(f"line {line_number}: {err}", str(path)) from err
    return table


# Proliferation and destruction


def _gain_values(kernel: ProliferationKernel, rho_test: Any, u_field: Any) -> np.ndarray:
    params = kernel.params
    if kernel.form == "zero":
        return np.asarray(0.0)
    if kernel.form == "constant":
        return np.asarray(float(params["p"]))
    if kernel.form == "density-saturated":
        return float(params["p"]) / (1.0 + float(params["sigma"]) * np.asarray(rho_test, dtype=float))
    return float(params["p"]) * np.asarray(u_field, dtype=float)


def _loss_values(kernel: ProliferationKernel, u_field: Any) -> np.ndarray:
    params = kernel.loss_params
    if kernel.loss_form == "zero":
        return np.asarray(0.0)
    if kernel.loss_form == "constant":
        return np.asarray(float(params["l"]))
    return float(params["l"]) * np.asarray(u_field, dtype=float)


def evaluate_proliferation(
    kernel: ProliferationKernel, test_state: NodeState, field_state: NodeState, local_density: float | None = None
) -> tuple[float, float]:
    """
    Gain and loss multipliers for a test particle meeting a field particle.

    Args:
        kernel (ProliferationKernel): The kernel
        test_state (NodeState): Test particle state
        field_state (NodeState): Field particle state
        local_density (float | None): Density of the test subsystem, for density-saturated gains

    Returns:
        tuple[float, float]: (gain, loss), both >= 0
    """
    del test_state  # built-in forms depend on the field particle and densities only
    u_field = kernel.field_grid.activity.nodes[field_state.activity]
    if kernel.form == "density-saturated" and local_density is None:
        raise KernelDefinitionError(f"kernel {kernel.kernel_id} needs the local density of the test subsystem")
    gain = _check_values(_gain_values(kernel, 0.0 if local_density is None else local_density, u_field), kernel)
    loss = _check_values(_loss_values(kernel, u_field), kernel)
    return float(gain), float(loss)


def net_proliferation_table(kernel: ProliferationKernel, context: LocalContext | None = None) -> np.ndarray:
    """Gain minus loss, broadcastable to (cell, v, u, v*, u*)."""
    u_field = kernel.field_grid.activity.nodes[None, None, None, None, :]
    rho_test: Any = 0.0
    if kernel.form == "density-saturated":
        test_scale = "fs" if kernel.scope == "E" else "sfs"
        rho_test = _require_context(kernel, context).density_of(test_scale, kernel.pair[0])[:, None, None, None, None]
    gain = _check_values(_gain_values(kernel, rho_test, u_field), kernel)
    loss = _check_values(_loss_values(kernel, u_field), kernel)
    net = np.asarray(gain - loss, dtype=float)
    return net.reshape((1,) * (5 - net.ndim) + net.shape) if net.ndim < 5 else net


# Kernel sets


@dataclass(frozen=True, eq=False)
class KernelSet:
    fs_grid: PhaseGrid
    sfs_grid: PhaseGrid | None
    n: int
    m: int
    rates: dict[tuple[str, tuple[int, int]], RateKernel] = field(default_factory=dict)
    transitions: dict[tuple[str, tuple[int, int]], TransitionKernel] = field(default_factory=dict)
    proliferations: dict[tuple[str, tuple[int, int]], ProliferationKernel] = field(default_factory=dict)

    def rate(self, scope: str, pair: tuple[int, int]) -> RateKernel | None:
        return self.rates.get((scope, pair))

    def transition(self, scope: str, pair: tuple[int, int]) -> TransitionKernel | None:
        return self.transitions.get((scope, pair))

    def proliferation(self, scope: str, pair: tuple[int, int]) -> ProliferationKernel | None:
        return self.proliferations.get((scope, pair))

    def all_kernels(self) -> list[_Kernel]:
        return [*self.rates.values(), *self.transitions.values(), *self.proliferations.values()]

    def validate(self) -> None:
        """
        Every nonzero rate must have its transition kernel, and every tabulated transition must be normalized.

        Returns:
            None
        """
        for transition_scope, rate_scope in TRANSITION_SCOPES.items():
            for (scope, pair), rate in self.rates.items():
                if scope != rate_scope or rate.is_zero:
                    continue
                if (transition_scope, pair) not in self.transitions:
                    raise ConfigurationError(
                        f"rate {rate.kernel_id} is nonzero but no {transition_scope} transition is declared "
                        + f"for pair {list(pair)}",
                        "kernels",
                    )
        for transition in self.transitions.values():
            if transition.table is not None:
                check_normalized(transition)
        for (scope, pair), kernel in self.proliferations.items():
            if (PROLIFERATION_SCOPES[scope], pair) not in self.rates:
                logger.warning("%s has no driving rate and will have no effect", kernel.kernel_id)

    def homogeneous_violations(self) -> list[str]:
        """Kernels whose form needs space or velocity, and so cannot drive a spatially homogeneous system."""
        violations = []
        for kernel in self.all_kernels():
            if kernel.form in SPATIAL_FORMS or kernel.form in VELOCITY_FORMS:
                violations.append(kernel.kernel_id)
            elif isinstance(kernel, TransitionKernel) and kernel.table is not None:
                if kernel.candidate.velocity.size != 1 or kernel.field_grid.velocity.size != 1:
                    violations.append(kernel.kernel_id)
        return violations


def _resolve_params(raw_params: Any, forms: dict[str, dict[str, Any]], form: str, path: str) -> dict[str, Any]:
    if form not in forms:
        raise ConfigurationError(f"unknown form '{form}'. Valid forms: {sorted(forms)}", path)
    if raw_params is None:
        raw_params = {}
    if not isinstance(raw_params, dict):
        raise ConfigurationError("params must be an object", path)
    schema = forms[form]
    unknown = sorted(set(raw_params) - set(schema))
    if unknown:
        raise ConfigurationError(f"unknown parameters {unknown} for form '{form}'. Valid keys: {sorted(schema)}", path)
    resolved = {}
    for key, default in schema.items():
        value = raw_params.get(key, default)
        if value is None:
            raise ConfigurationError(f"form '{form}' requires parameter '{key}'", path)
        if key != "path":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigurationError(f"parameter '{key}' must be a number. Found {value!r}", path)
            if key in UNIT_PARAMETERS and not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"parameter '{key}' must lie in [0, 1]. Found {value}", path)
        resolved[key] = value
    return resolved


def _parse_pair(raw_pair: Any, counts: tuple[int, int], path: str) -> tuple[int, int]:
    if (
        not isinstance(raw_pair, (list, tuple))
        or len(raw_pair) != 2
        or not all(isinstance(item, int) and not isinstance(item, bool) for item in raw_pair)
    ):
        raise ConfigurationError(f"pair must be a list of two integers. Found {raw_pair!r}", path)
    for item, count in zip(raw_pair, counts):
        if not 0 <= item < count:
            raise ConfigurationError(f"pair {list(raw_pair)} out of range for subsystem counts {counts}", path)
    return int(raw_pair[0]), int(raw_pair[1])


def build_kernel_set(
    blocks: list[dict[str, Any]],
    fs_grid: PhaseGrid,
    sfs_grid: PhaseGrid | None,
    n: int,
    m: int,
    base_dir: Path | None = None,
) -> KernelSet:
    """
    Build and validate a kernel set from configuration blocks.

    Args:
        blocks (list[dict[str, Any]]): Kernel blocks with keys scope, pair, form, params (or gain/loss for E, F)
        fs_grid (PhaseGrid): FS grid
        sfs_grid (PhaseGrid | None): SFS grid, None when the system has no SFS
        n (int): Number of FSs
        m (int): Number of SFSs
        base_dir (Path | None): Directory that relative tabulated-kernel paths are resolved against

    Returns:
        KernelSet: The validated kernel set
    """
    grids = {"fs": fs_grid, "sfs": sfs_grid}
    counts = {"fs": n, "sfs": m}
    rates: dict = {}
    transitions: dict = {}
    proliferations: dict = {}
    for index, block in enumerate(blocks):
        path = f"kernels[{index}]"
        if not isinstance(block, dict):
            raise ConfigurationError("each kernel block must be an object", path)
        scope = block.get("scope")
        if scope in RATE_SCOPES:
            scales = RATE_SCOPES[scope]
        elif scope in TRANSITION_SCOPES:
            scales = RATE_SCOPES[TRANSITION_SCOPES[scope]]
        elif scope in PROLIFERATION_SCOPES:
            scales = RATE_SCOPES[PROLIFERATION_SCOPES[scope]]
        else:
            valid = sorted([*RATE_SCOPES, *TRANSITION_SCOPES, *PROLIFERATION_SCOPES])
            raise ConfigurationError(f"unknown scope {scope!r}. Valid scopes: {valid}", path)
        candidate, field_grid = grids[scales[0]], grids[scales[1]]
        if candidate is None or field_grid is None:
            raise ConfigurationError(f"scope '{scope}' needs an SFS but the system declares m = 0", path)
        pair = _parse_pair(block.get("pair"), (counts[scales[0]], counts[scales[1]]), path)
        key = (scope, pair)
        if key in rates or key in transitions or key in proliferations:
            raise ConfigurationError(f"duplicate kernel for scope '{scope}' and pair {list(pair)}", path)

        if scope in RATE_SCOPES:
            form = block.get("form", "constant")
            params = _resolve_params(block.get("params"), RATE_FORMS, form, path)
            rates[key] = RateKernel(scope, pair, form, params, candidate, field_grid)
        elif scope in TRANSITION_SCOPES:
            form = block.get("form", "identity")
            params = _resolve_params(block.get("params"), TRANSITION_FORMS, form, path)
            table = None
            if form == "tabulated":
                csv_path = Path(str(params["path"]))
                if not csv_path.is_absolute() and base_dir is not None:
                    csv_path = base_dir / csv_path
                if not csv_path.is_file():
                    raise ConfigurationError(f"tabulated kernel file '{csv_path}' not found", path)
                table = read_tabulated_csv(csv_path, candidate, field_grid)
            kernel = TransitionKernel(scope, pair, form, params, candidate, field_grid, table)
            transitions[key] = normalize_transition(kernel) if table is not None else kernel
        else:
            gain = block.get("gain", {"form": "zero"})
            loss = block.get("loss", {"form": "zero"})
            if not isinstance(gain, dict) or not isinstance(loss, dict):
                raise ConfigurationError("gain and loss must be objects with keys form and params", path)
            gain_form = gain.get("form", "zero")
            loss_form = loss.get("form", "zero")
            gain_params = _resolve_params(gain.get("params"), GAIN_FORMS, gain_form, f"{path}.gain")
            loss_params = _resolve_params(loss.get("params"), LOSS_FORMS, loss_form, f"{path}.loss")
            proliferations[key] = ProliferationKernel(
                scope, pair, gain_form, gain_params, candidate, field_grid, loss_form, loss_params
            )
    kernel_set = KernelSet(fs_grid, sfs_grid, n, m, rates, transitions, proliferations)
    kernel_set.validate()
    return kernel_set
