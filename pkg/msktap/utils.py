""" Useful shared utilities for the msktap project. """

from pathlib import Path
from typing import Any, Iterable, Sequence
import csv
import json
import logging
import os
import sys

import numpy as np
import regex

from msktap.core import ConfigurationError

LOG_ENV_VAR = "MSKTAP_LOG"
EXIT_SIDES = ("left", "right", "bottom", "top")

_EXIT_PATTERN = regex.compile(r"(?P<side>left|right|bottom|top):(?P<start>\d+)-(?P<stop>\d+)")


def configure_logging(level_name: str | None = None) -> int:
    """
    Configure the root logger to write to standard error.

    Args:
        level_name (str | None): Level name; falls back to the MSKTAP_LOG environment variable, then WARNING

    Returns:
        int: The numeric level that was applied
    """
    raw_level = level_name or os.environ.get(LOG_ENV_VAR, "WARNING")
    level = logging.getLevelName(raw_level.strip().upper())
    if not isinstance(level, int):
        raise ConfigurationError(f"Unknown log level '{raw_level}'", LOG_ENV_VAR)
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True
    )
    return level


def read_config(config_file: str = "config.json") -> dict[str, Any]:
    """
    Reads and parses the configuration from the specified JSON file.

    Args:
        config_file (str): The path to the configuration file. Defaults to "config.json".

    Returns:
        dict[str, Any]: The configuration data as a dictionary.
    """
    config_path = Path(config_file)
    if not config_path.is_file():
        raise FileNotFoundError(f"Configuration file '{config_file}' not found.")

    with config_path.open("r", encoding="utf-8") as file:
        try:
            document = json.load(file)
        except json.JSONDecodeError as err:
            raise ConfigurationError(f"line {err.lineno}, column {err.colno}: {err.msg}", str(config_path)) from err
    if not isinstance(document, dict):
        raise ConfigurationError("the top level must be an object", str(config_path))
    return document


def parse_exit_segment(raw_exit: str) -> tuple[str, int, int]:
    """
    Parse an exit segment such as "right:4-7" (inclusive cell range along one side of the domain).

    Args:
        raw_exit (str): The exit segment string

    Returns:
        tuple[str, int, int]: side, first cell, last cell
    """
    if not isinstance(raw_exit, str):
        raise ConfigurationError(f"exit segments must be strings like 'right:4-7'. Found: {raw_exit!r}")
    match = _EXIT_PATTERN.fullmatch(raw_exit.strip())
    if match is None:
        raise ConfigurationError(f"cannot parse exit segment '{raw_exit}'. Expected '<side>:<start>-<stop>'")
    start = int(match.group("start"))
    stop = int(match.group("stop"))
    if stop < start:
        raise ConfigurationError(f"exit segment '{raw_exit}' has its range inverted")
    return match.group("side"), start, stop


def format_float(value: float) -> str:
    # repr round-trips exactly, which keeps CSV output bit-reproducible
    return repr(float(value))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """
    Write rows to a CSV file, formatting floats so that they round-trip exactly.

    Args:
        path (Path): Destination file
        header (Sequence[str]): Column names
        rows (Iterable[Sequence[Any]]): Row values

    Returns:
        int: Number of data rows written
    """
    count = 0
    with path.open("w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(item) if isinstance(item, float) else item for item in row])
            count += 1
    return count


def relative_error(actual: np.ndarray, reference: np.ndarray) -> float:
    """Max absolute difference scaled by the largest reference magnitude (absolute when the reference is 0)."""
    actual = np.asarray(actual, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if actual.shape != reference.shape:
        raise ValueError(f"shape mismatch: {actual.shape} vs {reference.shape}")
    if actual.size == 0:
        return 0.0
    difference = float(np.max(np.abs(actual - reference)))
    scale = float(np.max(np.abs(reference)))
    return difference / scale if scale > 0.0 else difference
