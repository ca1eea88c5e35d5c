# pylint: disable=missing-function-docstring, missing-module-docstring, missing-class-docstring

from pathlib import Path
import tempfile
import unittest

import numpy as np
from PIL import Image

from msktap.imaging import density_to_pixels, get_image_size, write_density_frame
from msktap.state import SpaceGrid


class TestDensityToPixels(unittest.TestCase):
    def setUp(self):
        self.space = SpaceGrid(3.0, 2.0, 3, 2)

    def test_orientation(self):
        # Arrange
        rho = np.zeros(6)
        rho[self.space.cell_index(2, 1)] = 1.0

        # Act
        pixels = density_to_pixels(rho, self.space)

        # Assert
        self.assertEqual(pixels.shape, (2, 3))
        self.assertEqual(pixels[0, 2], 255)
        self.assertEqual(int(pixels.sum()), 255)

    def test_vmax_clips(self):
        rho = np.array([0.5, 1.0, 2.0, 0.0, 0.0, 0.0])
        pixels = density_to_pixels(rho, self.space, vmax=1.0)
        self.assertEqual(int(pixels.max()), 255)
        self.assertEqual(int(pixels[1, 0]), 128)

    def test_empty_density_is_black(self):
        pixels = density_to_pixels(np.zeros(6), self.space)
        self.assertEqual(pixels.dtype, np.uint8)
        self.assertEqual(int(pixels.max()), 0)


class TestWriteDensityFrame(unittest.TestCase):
    def setUp(self):
        self.space = SpaceGrid(3.0, 2.0, 3, 2)
        self.rho = np.arange(6, dtype=float)

    def test_writes_scaled_png(self):
        with tempfile.TemporaryDirectory() as tmp:
            # Arrange
            filepath = Path(tmp) / "frame.png"

            # Act
            write_density_frame(filepath, self.rho, self.space, scale=5)

            # Assert
            self.assertEqual(get_image_size(filepath), (15, 10))
            with Image.open(filepath) as img:
                self.assertEqual(img.mode, "L")

    def test_rejects_other_formats(self):
        with self.assertRaises(ValueError):
            write_density_frame(Path("frame.jpg"), self.rho, self.space)

    def test_rejects_bad_scale(self):
        with self.assertRaises(ValueError):
            write_density_frame(Path("frame.png"), self.rho, self.space, scale=0)


if __name__ == "__main__":
    unittest.main()
