# pylint: disable=missing-function-docstring, missing-module-docstring, missing-class-docstring

from pathlib import Path
from unittest.mock import patch
import json
import logging
import tempfile
import unittest

import numpy as np

from msktap.core import ConfigurationError
from msktap.utils import (
    LOG_ENV_VAR,
    configure_logging,
    format_float,
    parse_exit_segment,
    read_config,
    relative_error,
    write_csv,
)


class TestConfigureLogging(unittest.TestCase):
    def tearDown(self):
        logging.getLogger().setLevel(logging.WARNING)

    def test_explicit_level(self):
        self.assertEqual(configure_logging("debug"), logging.DEBUG)

    @patch.dict("os.environ", {LOG_ENV_VAR: "INFO"})
    def test_level_from_environment(self):
        self.assertEqual(configure_logging(), logging.INFO)

    @patch.dict("os.environ", {}, clear=True)
    def test_defaults_to_warning(self):
        self.assertEqual(configure_logging(), logging.WARNING)

    def test_unknown_level(self):
        with self.assertRaises(ConfigurationError):
            configure_logging("chatty")


class TestReadConfig(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()  # pylint: disable=consider-using-with
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_reads_object(self):
        # Arrange
        path = self.dir / "config.json"
        path.write_text(json.dumps({"system": {"n": 1}}), encoding="utf-8")

        # Act
        result = read_config(str(path))

        # Assert
        self.assertEqual(result, {"system": {"n": 1}})

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            read_config(str(self.dir / "absent.json"))

    def test_syntax_error_reports_line_and_column(self):
        # Arrange
        path = self.dir / "broken.json"
        path.write_text('{\n  "system": {\n    "n": 1,\n  }\n}', encoding="utf-8")

        # Act & Assert
        with self.assertRaises(ConfigurationError) as context:
            read_config(str(path))
        self.assertIn("line 4", str(context.exception))
        self.assertIn("column", str(context.exception))

    def test_top_level_must_be_object(self):
        path = self.dir / "list.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with self.assertRaises(ConfigurationError):
            read_config(str(path))


class TestParseExitSegment(unittest.TestCase):
    def test_valid_segment(self):
        self.assertEqual(parse_exit_segment("right:4-7"), ("right", 4, 7))

    def test_surrounding_whitespace(self):
        self.assertEqual(parse_exit_segment("  top:0-0 "), ("top", 0, 0))

    def test_unknown_side(self):
        with self.assertRaises(ConfigurationError):
            parse_exit_segment("front:1-2")

    def test_inverted_range(self):
        with self.assertRaises(ConfigurationError):
            parse_exit_segment("left:5-2")

    def test_not_a_string(self):
        with self.assertRaises(ConfigurationError):
            parse_exit_segment(["left", 1, 2])  # type: ignore[arg-type]


class TestFormatFloat(unittest.TestCase):
    def test_round_trips(self):
        value = 0.1 + 0.2
        self.assertEqual(float(format_float(value)), value)


class TestWriteCsv(unittest.TestCase):
    def test_writes_header_and_rows(self):
        with tempfile.TemporaryDirectory() as tmp:
            # Arrange
            path = Path(tmp) / "out.csv"

            # Act
            count = write_csv(path, ("t", "label", "value"), [(0.0, "fs0", 1.5), (0.1, "fs0", 1 / 3)])

            # Assert
            self.assertEqual(count, 2)
            lines = path.read_text(encoding="utf-8").splitlines()
            self.assertEqual(lines[0], "t,label,value")
            self.assertEqual(lines[2], f"0.1,fs0,{1 / 3!r}")


class TestRelativeError(unittest.TestCase):
    def test_scaled_by_reference(self):
        self.assertAlmostEqual(relative_error(np.array([1.0, 2.2]), np.array([1.0, 2.0])), 0.1)

    def test_zero_reference_is_absolute(self):
        self.assertEqual(relative_error(np.array([0.5]), np.array([0.0])), 0.5)

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            relative_error(np.zeros(2), np.zeros(3))


if __name__ == "__main__":
    unittest.main()
