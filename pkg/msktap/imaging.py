"""
This file is used to write density maps as greyscale PNG frames.
Frames are written by the integrator at the configured stride and can be stitched into an animation.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from msktap.state import SpaceGrid


def density_to_pixels(rho: np.ndarray, space: SpaceGrid, vmax: float | None = None) -> np.ndarray:
    """
    Map per-cell densities to 8-bit grey levels, with y increasing upwards in the image.

    Args:
        rho (np.ndarray): Density per cell, shape (n_cells,)
        space (SpaceGrid): Space grid the densities live on
        vmax (float | None): Density mapped to white; defaults to the largest density

    Returns:
        np.ndarray: uint8 array of shape (ny, nx)
    """
    grid = np.asarray(rho, dtype=float).reshape(space.nx, space.ny)
    top = float(grid.max()) if vmax is None else float(vmax)
    if top <= 0.0:
        return np.zeros((space.ny, space.nx), dtype=np.uint8)
    scaled = np.clip(grid / top, 0.0, 1.0) * 255.0
    return np.ascontiguousarray(np.flipud(np.rint(scaled).astype(np.uint8).T))


def write_density_frame(
    filepath: Path, rho: np.ndarray, space: SpaceGrid, scale: int = 8, vmax: float | None = None
) -> None:
    """
    Write one density map as a PNG, each cell drawn as a scale x scale block.

    Args:
        filepath (Path): Destination, must end in .png
        rho (np.ndarray): Density per cell
        space (SpaceGrid): Space grid
        scale (int): Pixels per cell side
        vmax (float | None): Density mapped to white

    Returns:
        None
    """
    if not str(filepath).lower().endswith(".png"):
        raise ValueError("The filepath must point to a PNG file.")
    if scale < 1:
        raise ValueError("scale must be >= 1")
    pixels = density_to_pixels(rho, space, vmax)
    image = Image.fromarray(pixels)
    if scale > 1:
        image = image.resize((space.nx * scale, space.ny * scale), Image.Resampling.NEAREST)
    image.save(filepath)


def get_image_size(filepath: Path) -> tuple[int, int]:
    with Image.open(filepath) as img:
        return img.size
