"""
Sensitivity domains: the sector, with its vertex at a particle's position and its axis on the particle's heading,
inside which the particle perceives others. Membership is tested at cell centers.
"""

from dataclasses import dataclass
import math

import numpy as np

from msktap.core import ConfigurationError
from msktap.state import SpaceGrid, VelocityGrid

WEIGHTINGS = ("uniform-normalized", "indicator")
_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SensitivityDomain:
    half_angle: float
    radius: float
    weighting: str = "uniform-normalized"

    def __post_init__(self):
        if not 0.0 < self.half_angle <= math.pi + _TOLERANCE:
            raise ConfigurationError(f"half_angle must lie in (0, pi]. Found {self.half_angle}", "sensitivity")
        if not self.radius > 0.0:
            raise ConfigurationError(f"radius must be positive. Found {self.radius}", "sensitivity")
        if self.weighting not in WEIGHTINGS:
            raise ConfigurationError(f"weighting must be one of {WEIGHTINGS}. Found '{self.weighting}'", "sensitivity")

    @classmethod
    def from_degrees(cls, half_angle_deg: float, radius: float, weighting: str = "uniform-normalized"):
        return cls(math.radians(half_angle_deg), radius, weighting)

    @property
    def is_full_disk(self) -> bool:
        return self.half_angle >= math.pi - _TOLERANCE


def _inside(dom: SensitivityDomain, displacements: np.ndarray, omega: np.ndarray) -> np.ndarray:
    distances = np.hypot(displacements[..., 0], displacements[..., 1])
    inside = distances <= dom.radius * (1.0 + _TOLERANCE)
    omega_norm = float(np.hypot(omega[0], omega[1]))
    if dom.is_full_disk or omega_norm == 0.0:
        # an undefined heading falls back to the full disk
        return inside
    with np.errstate(invalid="ignore", divide="ignore"):
        cosines = (displacements @ (np.asarray(omega) / omega_norm)) / distances
    in_sector = np.where(distances == 0.0, True, cosines >= math.cos(dom.half_angle) - _TOLERANCE)
    return inside & in_sector


def _members(dom: SensitivityDomain, displacements: np.ndarray, omega: np.ndarray, space: SpaceGrid) -> np.ndarray:
    mask = _inside(dom, displacements, omega)
    if not space.is_periodic:
        return mask
    # a cell exactly half a period away has two nearest images; either one inside the sector makes it a member
    half = np.array([space.lx, space.ly]) / 2.0
    ties = np.isclose(np.abs(displacements), half, rtol=1e-9, atol=0.0)
    if not ties.any():
        return mask
    for flip in (np.array([True, False]), np.array([False, True]), np.array([True, True])):
        mask = mask | _inside(dom, np.where(ties & flip, -displacements, displacements), omega)
    return mask


def contains(dom: SensitivityDomain, x: np.ndarray, omega: np.ndarray, x_star: np.ndarray, space: SpaceGrid) -> bool:
    """
    Is x_star inside the sensitivity domain of a particle at x heading along omega?

    Args:
        dom (SensitivityDomain): The domain
        x (np.ndarray): Particle position
        omega (np.ndarray): Unit heading; a zero vector means the heading is undefined (full disk)
        x_star (np.ndarray): Position to test
        space (SpaceGrid): Space grid, whose boundary decides how displacements wrap

    Returns:
        bool: Membership
    """
    displacement = space.displacement(x, x_star)
    return bool(_members(dom, displacement[None, :], np.asarray(omega, dtype=float), space)[0])


def _weights_for(dom: SensitivityDomain, mask: np.ndarray, space: SpaceGrid) -> np.ndarray:
    weights = np.where(mask, space.cell_area, 0.0)
    if dom.weighting == "uniform-normalized":
        totals = weights.sum(axis=-1, keepdims=True)
        weights = np.divide(weights, totals, out=np.zeros_like(weights), where=totals > 0)
    return weights


def quadrature(dom: SensitivityDomain, cell: int, omega: np.ndarray, space: SpaceGrid) -> list[tuple[int, float]]:
    """
    Cells whose centers lie in the domain of a particle in `cell`, with their spatial weights.

    Args:
        dom (SensitivityDomain): The domain
        cell (int): Home cell of the particle
        omega (np.ndarray): Heading of the particle
        space (SpaceGrid): Space grid

    Returns:
        list[tuple[int, float]]: (cell index, weight); empty when nothing is perceived
    """
    centers = space.centers
    displacements = space.displacement(centers[cell], centers)
    mask = _members(dom, displacements, np.asarray(omega, dtype=float), space)
    weights = _weights_for(dom, mask, space)
    return [(int(member), float(weights[member])) for member in np.flatnonzero(mask)]


@dataclass(frozen=True, eq=False)
class SensitivityTable:
    """Spatial weights of one domain for every heading of a velocity grid: weights[v, x, x_star]."""

    domain: SensitivityDomain
    weights: np.ndarray

    @classmethod
    def build(cls, dom: SensitivityDomain, space: SpaceGrid, velocity: VelocityGrid) -> "SensitivityTable":
        centers = space.centers
        displacements = np.stack([space.displacement(center, centers) for center in centers])
        weights = np.empty((velocity.size, space.n_cells, space.n_cells))
        for node, omega in enumerate(velocity.unit_directions):
            weights[node] = _weights_for(dom, _members(dom, displacements, omega, space), space)
        return cls(dom, weights)

    @classmethod
    def homogeneous(cls) -> "SensitivityTable":
        return cls(SensitivityDomain(math.pi, 1.0), np.ones((1, 1, 1)))
