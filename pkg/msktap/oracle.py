"""
Brute-force reference values for the collision operators and the moments, on tiny instances only.

Everything here is written as literal nested loops over every index tuple, with the sensitivity domain tested
point by point. Nothing is shared with msktap.operators or msktap.geometry except the grid types and the
pointwise kernel evaluators.
"""

import math

import numpy as np

from msktap.core import InstanceTooLargeError
from msktap.geometry import SensitivityDomain
from msktap.kernels import (
    KernelSet,
    LocalContext,
    NodeState,
    evaluate_proliferation,
    evaluate_rate,
    evaluate_transition,
)
from msktap.state import DistributionField, SpaceGrid

MAX_STATES = 10_000
_NEAR = 1e-9
_ANGLE_TOLERANCE = 1e-12

# operator kind -> (kernel scope, rate scope, candidate scale, field scale, conservative)
OPERATOR_KINDS = {
    "fs_fs_conservative": ("A", "alpha", "fs", "fs", True),
    "fs_sfs_conservative": ("B", "gamma_fs_sfs", "fs", "sfs", True),
    "sfs_sfs_conservative": ("C", "beta", "sfs", "sfs", True),
    "sfs_fs_conservative": ("D", "gamma_sfs_fs", "sfs", "fs", True),
    "fs_proliferative": ("E", "alpha", "fs", "fs", False),
    "sfs_proliferative": ("F", "gamma_sfs_fs", "sfs", "fs", False),
}


def _state_count(dist: DistributionField | None) -> int:
    if dist is None:
        return 0
    return int(np.prod(dist.values.shape))


def _local_density(dist: DistributionField, subsystem: int, cell: int) -> float:
    grid = dist.grid
    total = 0.0
    for v in range(grid.velocity.size):
        for u in range(grid.activity.size):
            total += dist.values[subsystem, cell, v, u] * grid.velocity.weights[v] * grid.activity.delta
    return total


def _nearest_offsets(delta: float, extent: float, periodic: bool) -> list[float]:
    if not periodic:
        return [delta]
    images = [delta - extent, delta, delta + extent]
    shortest = min(abs(image) for image in images)
    return [image for image in images if abs(image) <= shortest + _NEAR * extent]


def _perceives(
    dom: SensitivityDomain, home: np.ndarray, heading: np.ndarray, target: np.ndarray, space: SpaceGrid
) -> bool:
    """Is target seen from home? Every nearest periodic image is tried; half-period ties give two."""
    periodic = space.is_periodic
    heading_norm = math.hypot(heading[0], heading[1])
    full_disk = dom.half_angle >= math.pi - _ANGLE_TOLERANCE or heading_norm == 0.0
    for dx in _nearest_offsets(target[0] - home[0], space.lx, periodic):
        for dy in _nearest_offsets(target[1] - home[1], space.ly, periodic):
            distance = math.hypot(dx, dy)
            if distance > dom.radius * (1.0 + _ANGLE_TOLERANCE):
                continue
            if distance == 0.0 or full_disk:
                return True
            cosine = (dx * heading[0] + dy * heading[1]) / (distance * heading_norm)
            if cosine >= math.cos(dom.half_angle) - _ANGLE_TOLERANCE:
                return True
    return False


def _domain_members(dom: SensitivityDomain, dist: DistributionField, cell: int, heading: np.ndarray) -> list:
    """(cell, spatial weight) pairs of every cell center inside the domain of a particle at `cell`."""
    space = dist.grid.space
    centers = space.centers
    members = []
    for x_star in range(space.n_cells):
        if _perceives(dom, centers[cell], heading, centers[x_star], space):
            members.append(x_star)
    if dom.weighting == "indicator":
        return [(x_star, space.cell_area) for x_star in members]
    return [(x_star, 1.0 / len(members)) for x_star in members]


def oracle_terms(
    kind: str,
    f: DistributionField,
    phi: DistributionField | None,
    kernels: KernelSet,
    fs_domain: SensitivityDomain,
    sfs_domain: SensitivityDomain | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the gain and loss parts of one collision operator by direct summation.

    Args:
        kind (str): One of OPERATOR_KINDS
        f (DistributionField): FS distribution
        phi (DistributionField | None): SFS distribution
        kernels (KernelSet): Kernel set
        fs_domain (SensitivityDomain): FS sensitivity domain
        sfs_domain (SensitivityDomain | None): SFS sensitivity domain

    Returns:
        tuple[np.ndarray, np.ndarray]: Gain and loss, each shaped like the candidate (or test) field. For
            proliferative operators the gain holds the P part and the loss the L part.
    """
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind '{kind}'. Valid kinds: {sorted(OPERATOR_KINDS)}")
    states = _state_count(f) + _state_count(phi)
    if states > MAX_STATES:
        raise InstanceTooLargeError(f"the oracle refuses instances above {MAX_STATES} states. Found {states}")
    scope, rate_scope, cand_scale, field_scale, conservative = OPERATOR_KINDS[kind]
    fields = {"fs": f, "sfs": phi}
    cand, other = fields[cand_scale], fields[field_scale]
    if cand is None or other is None:
        raise ValueError(f"{kind} needs both an {cand_scale.upper()} and an {field_scale.upper()} field")
    dom = fs_domain if cand_scale == "fs" else sfs_domain
    if dom is None:
        raise ValueError(f"{kind} needs a sensitivity domain for the {cand_scale.upper()} scale")
    context = None
    if any(kernel.needs_context for kernel in kernels.all_kernels()):
        context = LocalContext.build(f, phi)

    cand_grid, field_grid = cand.grid, other.grid
    cand_velocity, field_velocity = cand_grid.velocity, field_grid.velocity
    du_cand, du_field = cand_grid.activity.delta, field_grid.activity.delta
    gains = np.zeros(cand.values.shape)
    losses = np.zeros(cand.values.shape)

    for i in range(cand.subsystem_count):
        for x in range(cand_grid.space.n_cells):
            for v in range(cand_velocity.size):
                for u in range(cand_grid.activity.size):
                    gain = 0.0
                    loss = 0.0
                    test = NodeState(v, u)
                    for h in range(other.subsystem_count):
                        rate = kernels.rate(rate_scope, (i, h))
                        if rate is None:
                            continue
                        field_density = _local_density(other, h, x)

                        if not conservative:
                            kernel = kernels.proliferation(scope, (i, h))
                            if kernel is None:
                                continue
                            own_density = _local_density(cand, i, x)
                            heading = cand_velocity.unit_directions[v]
                            for x_star, weight in _domain_members(dom, cand, x, heading):
                                for vs in range(field_velocity.size):
                                    for us in range(field_grid.activity.size):
                                        partner = NodeState(vs, us)
                                        p, l = evaluate_proliferation(kernel, test, partner, own_density)
                                        encounters = (
                                            evaluate_rate(rate, test, partner, field_density)
                                            * cand.values[i, x, v, u]
                                            * other.values[h, x_star, vs, us]
                                            * field_velocity.weights[vs]
                                            * du_field
                                            * weight
                                        )
                                        gain += encounters * p
                                        loss += encounters * l
                            continue

                        transition = kernels.transition(scope, (i, h))
                        if transition is None:
                            continue
                        # gain: every candidate state may jump to (v, u)
                        for vc in range(cand_velocity.size):
                            for uc in range(cand_grid.activity.size):
                                candidate = NodeState(vc, uc)
                                heading = cand_velocity.unit_directions[vc]
                                for x_star, weight in _domain_members(dom, cand, x, heading):
                                    for vs in range(field_velocity.size):
                                        for us in range(field_grid.activity.size):
                                            partner = NodeState(vs, us)
                                            gain += (
                                                evaluate_rate(rate, candidate, partner, field_density)
                                                * evaluate_transition(transition, candidate, partner, test, context, x)
                                                * cand.values[i, x, vc, uc]
                                                * cand_velocity.weights[vc]
                                                * du_cand
                                                * other.values[h, x_star, vs, us]
                                                * field_velocity.weights[vs]
                                                * du_field
                                                * weight
                                            )
                        # loss: the test state leaves whenever it interacts
                        heading = cand_velocity.unit_directions[v]
                        for x_star, weight in _domain_members(dom, cand, x, heading):
                            for vs in range(field_velocity.size):
                                for us in range(field_grid.activity.size):
                                    partner = NodeState(vs, us)
                                    loss += (
                                        evaluate_rate(rate, test, partner, field_density)
                                        * cand.values[i, x, v, u]
                                        * other.values[h, x_star, vs, us]
                                        * field_velocity.weights[vs]
                                        * du_field
                                        * weight
                                    )
                    gains[i, x, v, u] = gain
                    losses[i, x, v, u] = loss
    return gains, losses


def oracle_operator(
    kind: str,
    f: DistributionField,
    phi: DistributionField | None,
    kernels: KernelSet,
    fs_domain: SensitivityDomain,
    sfs_domain: SensitivityDomain | None = None,
) -> np.ndarray:
    """Evaluate one collision operator (gain minus loss) by direct summation. Arguments as in oracle_terms."""
    gains, losses = oracle_terms(kind, f, phi, kernels, fs_domain, sfs_domain)
    return gains - losses


def oracle_moments(dist: DistributionField, subsystem: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Density, mean velocity and mean activity per cell by direct summation; NaN where the density is zero."""
    grid = dist.grid
    n_cells = grid.space.n_cells
    rho = np.zeros(n_cells)
    mean_velocity = np.full((n_cells, 2), math.nan)
    mean_activity = np.full(n_cells, math.nan)
    for x in range(n_cells):
        mass = momentum_x = momentum_y = activity = 0.0
        for v in range(grid.velocity.size):
            for u in range(grid.activity.size):
                weighted = dist.values[subsystem, x, v, u] * grid.velocity.weights[v] * grid.activity.delta
                mass += weighted
                momentum_x += weighted * grid.velocity.nodes[v, 0]
                momentum_y += weighted * grid.velocity.nodes[v, 1]
                activity += weighted * grid.activity.nodes[u]
        rho[x] = mass
        if mass > 0.0:
            mean_velocity[x] = (momentum_x / mass, momentum_y / mass)
            mean_activity[x] = activity / mass
    return rho, mean_velocity, mean_activity
