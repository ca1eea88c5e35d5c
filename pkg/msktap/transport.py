""" Free streaming v . grad_x f: dimension-split first-order upwind in flux form. """

from dataclasses import dataclass
import logging

import numpy as np

from msktap.core import ConfigurationError, StepSizeError
from msktap.state import DistributionField, SpaceGrid, VelocityGrid

logger = logging.getLogger(__name__)

SCHEMES = ("upwind",)


@dataclass(frozen=True)
class TransportScheme:
    scheme: str = "upwind"
    cfl: float = 1.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}. Found '{self.scheme}'", "transport.scheme")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigurationError(f"cfl must lie in (0, 1]. Found {self.cfl}", "transport.cfl")


def courant_number(dt: float, space: SpaceGrid, velocity: VelocityGrid) -> float:
    return dt * velocity.v_max / min(space.dx, space.dy)


def check_cfl(dt: float, space: SpaceGrid, velocity: VelocityGrid, scheme: TransportScheme) -> None:
    if not dt > 0:
        raise StepSizeError(f"time step must be positive. Found {dt}")
    courant = courant_number(dt, space, velocity)
    if courant > scheme.cfl * (1.0 + 1e-12):
        raise StepSizeError(
            f"CFL violated: dt * max|v| / min(dx, dy) = {courant:.6g} exceeds the limit {scheme.cfl}. "
            + f"Use dt <= {scheme.cfl * min(space.dx, space.dy) / velocity.v_max:.6g}"
        )


def _sweep(values: np.ndarray, speed: np.ndarray, ratio: float, axis: int, space: SpaceGrid) -> np.ndarray:
    """
    One upwind sweep along `axis` (1 for x, 2 for y) of values shaped (S, nx, ny, V, U).

    Args:
        values (np.ndarray): Distribution values
        speed (np.ndarray): Velocity component per node, broadcastable against values
        ratio (float): dt / spacing
        axis (int): Spatial axis of values
        space (SpaceGrid): Space grid, for the boundary

    Returns:
        np.ndarray: Updated values
    """
    forward = np.maximum(speed, 0.0)
    backward = np.minimum(speed, 0.0)
    first = np.take(values, [0], axis=axis)
    last = np.take(values, [-1], axis=axis)
    lower = np.take(values, range(values.shape[axis] - 1), axis=axis)
    upper = np.take(values, range(1, values.shape[axis]), axis=axis)
    interior = forward * lower + backward * upper

    if space.is_periodic:
        low_face = high_face = forward * last + backward * first
    else:
        low_side, high_side = ("left", "right") if axis == 1 else ("bottom", "top")
        # open faces let mass leave only; closed faces (walls) carry no flux; inflow is always zero
        if axis == 1:
            low_open = space.open_faces(low_side)[None, None, :, None, None]
            high_open = space.open_faces(high_side)[None, None, :, None, None]
        else:
            low_open = space.open_faces(low_side)[None, :, None, None, None]
            high_open = space.open_faces(high_side)[None, :, None, None, None]
        low_face = np.where(low_open, backward * first, 0.0)
        high_face = np.where(high_open, forward * last, 0.0)

    faces = np.concatenate([low_face, interior, high_face], axis=axis)
    upper_faces = np.take(faces, range(1, faces.shape[axis]), axis=axis)
    lower_faces = np.take(faces, range(faces.shape[axis] - 1), axis=axis)
    return values - ratio * (upper_faces - lower_faces)


def advect(
    dist: DistributionField, dt: float, scheme: TransportScheme | None = None
) -> DistributionField:
    """
    Advance the free-streaming part by dt: an x sweep, then a y sweep, for every (subsystem, v, u) slice.

    Args:
        dist (DistributionField): Field to advect
        dt (float): Time step
        scheme (TransportScheme | None): Scheme and CFL limit; defaults to upwind at CFL 1

    Returns:
        DistributionField: The advected field
    """
    scheme = scheme or TransportScheme()
    grid = dist.grid
    space, velocity = grid.space, grid.velocity
    if velocity.v_max == 0.0:
        return dist
    check_cfl(dt, space, velocity, scheme)

    n_sub = dist.subsystem_count
    values = dist.values.reshape(n_sub, space.nx, space.ny, velocity.size, grid.activity.size)
    cx = velocity.nodes[:, 0][None, None, None, :, None]
    cy = velocity.nodes[:, 1][None, None, None, :, None]
    values = _sweep(values, cx, dt / space.dx, 1, space)
    values = _sweep(values, cy, dt / space.dy, 2, space)
    return dist.with_values(values.reshape(dist.values.shape))
