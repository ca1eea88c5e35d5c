"""
Preset systems.

crowd: pedestrians (one FS, activity = emotional state) leaving a room through an exit, and vocal signals
(one SFS, activity = intensity) that pedestrians emit in crowded regions and that push them away from crowding.

immune: spatially homogeneous competition between immune cells (FS 0) and disease carriers (FS 1), mediated by a
signal (SFS 0) whose intensity follows carrier density and whose activity steers immune cells.

All numeric defaults are illustrative, not calibrated. Every default can be changed through `overrides`.
"""

from copy import deepcopy
from pathlib import Path
from typing import Any, Callable

from msktap.config import SystemConfig, validate_config
from msktap.core import ConfigurationError
from msktap.kernels import KernelSet
from msktap.utils import read_config

PRESET_NAMES = ("crowd", "immune")

IMMUNE_DEFAULTS: dict[str, Any] = {
    "contact_rate": 1.0,
    "kill_rate": 2.0,
    "proliferation_rate": 0.5,
    "saturation": 1.0,
    "consensus": 0.3,
    "signal_response": 0.5,
    "signal_generation": 0.5,
    "signal_decay": 0.5,
    "immune_density": 1.0,
    "carrier_density": 0.5,
    "signal_density": 0.1,
    "t_end": 5.0,
    "dt": 0.01,
}

CROWD_DEFAULTS: dict[str, Any] = {
    "size": 12.0,
    "cells": 12,
    "exit": "right:4-7",
    "v_max": 1.0,
    "directions": 8,
    "alignment": 1.0,
    "imitation": 0.2,
    "exit_weight": 1.0,
    "avoid_weight": 0.5,
    "signal_response": 0.5,
    "signal_generation": 0.5,
    "signal_decay": 0.5,
    "signal_gain": 1.0,
    "crowd_density": 1.0,
    "signal_density": 0.05,
    "t_end": 10.0,
    "dt": 0.2,
}


def _immune_document(p: dict[str, Any]) -> dict[str, Any]:
    profile = {"kind": "uniform", "activity_mean": 0.5, "activity_spread": 0.2}
    return {
        "system": {"name": "immune", "mode": "homogeneous", "n": 2, "m": 1, "seed": "immune"},
        "activity": {"fs": {"size": 8}, "sfs": {"size": 8}},
        "integrator": {"dt": p["dt"], "t_end": p["t_end"], "stepper": "heun", "output_stride": 10},
        "kernels": [
            {"scope": "alpha", "pair": [0, 0], "form": "constant", "params": {"alpha0": p["contact_rate"]}},
            {"scope": "A", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": p["consensus"]}},
            {"scope": "alpha", "pair": [1, 1], "form": "constant", "params": {"alpha0": p["contact_rate"]}},
            {"scope": "A", "pair": [1, 1], "form": "activity-consensus", "params": {"mu": p["consensus"]}},
            {
                "scope": "E",
                "pair": [1, 1],
                "gain": {
                    "form": "density-saturated",
                    "params": {"p": p["proliferation_rate"], "sigma": p["saturation"]},
                },
            },
            # carriers meeting immune cells are destroyed at a rate set by the immune cell's activity
            {"scope": "alpha", "pair": [1, 0], "form": "constant", "params": {"alpha0": p["contact_rate"]}},
            {"scope": "A", "pair": [1, 0], "form": "identity"},
            {"scope": "E", "pair": [1, 0], "loss": {"form": "activity-gated", "params": {"l": p["kill_rate"]}}},
            {"scope": "gamma_fs_sfs", "pair": [0, 0], "form": "constant", "params": {"alpha0": p["signal_response"]}},
            {"scope": "B", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": p["consensus"]}},
            {
                "scope": "gamma_sfs_fs",
                "pair": [0, 1],
                "form": "constant",
                "params": {"alpha0": p["signal_generation"]},
            },
            {"scope": "D", "pair": [0, 1], "form": "density-excitation", "params": {"mu": 0.5, "rho_ref": 1.0}},
            {
                "scope": "F",
                "pair": [0, 1],
                "gain": {"form": "activity-gated", "params": {"p": 1.0}},
                "loss": {"form": "constant", "params": {"l": p["signal_decay"]}},
            },
        ],
        "initial": {
            "fs": [{**profile, "density": p["immune_density"]}, {**profile, "density": p["carrier_density"]}],
            "sfs": [{**profile, "density": p["signal_density"]}],
        },
    }


def _crowd_document(p: dict[str, Any]) -> dict[str, Any]:
    size = float(p["size"])
    # the seeded signals stand for what pedestrians already emitted; with generation off there are none
    signal_density = p["signal_density"] if p["signal_generation"] > 0 else 0.0
    return {
        "system": {"name": "crowd", "mode": "spatial", "n": 1, "m": 1, "seed": "crowd"},
        "space": {
            "lx": size,
            "ly": size,
            "nx": p["cells"],
            "ny": p["cells"],
            "boundary": "absorbing",
            "exits": [p["exit"]],
        },
        "velocity": {"directions": p["directions"], "speeds": 1, "v_max": p["v_max"]},
        "activity": {"fs": {"size": 5}, "sfs": {"size": 4}},
        "sensitivity": {
            "fs": {"half_angle_deg": 60.0, "radius": 3.0 * size / 12.0},
            "sfs": {"half_angle_deg": 180.0, "radius": 2.0 * size / 12.0},
        },
        "transport": {"scheme": "upwind", "cfl": 1.0},
        "integrator": {"dt": p["dt"], "t_end": p["t_end"], "stepper": "heun", "output_stride": 5},
        "kernels": [
            # imitation grows with emotional state through the activity-weighted rate and lambda_activity
            {
                "scope": "alpha",
                "pair": [0, 0],
                "form": "activity-weighted",
                "params": {"alpha0": p["alignment"], "kappa": 1.0},
            },
            {
                "scope": "A",
                "pair": [0, 0],
                "form": "crowd-decision",
                "params": {
                    "lambda0": p["imitation"],
                    "lambda_activity": 0.6,
                    "exit_weight": p["exit_weight"],
                    "avoid_weight": p["avoid_weight"],
                    "rho_ref": 1.0,
                    "rho_max": 0.0,
                },
            },
            {"scope": "gamma_fs_sfs", "pair": [0, 0], "form": "constant", "params": {"alpha0": p["signal_response"]}},
            {"scope": "B", "pair": [0, 0], "form": "signal-avoidance", "params": {"lambda_signal": 0.8, "mu": 0.3}},
            {"scope": "beta", "pair": [0, 0], "form": "constant", "params": {"alpha0": 0.2}},
            {"scope": "C", "pair": [0, 0], "form": "activity-consensus", "params": {"mu": 0.3}},
            {
                "scope": "gamma_sfs_fs",
                "pair": [0, 0],
                "form": "constant",
                "params": {"alpha0": p["signal_generation"]},
            },
            {"scope": "D", "pair": [0, 0], "form": "density-excitation", "params": {"mu": 0.5, "rho_ref": 1.0}},
            {
                "scope": "F",
                "pair": [0, 0],
                "gain": {"form": "activity-gated", "params": {"p": p["signal_gain"]}},
                "loss": {"form": "constant", "params": {"l": p["signal_decay"]}},
            },
        ],
        "initial": {
            "fs": [
                {
                    "kind": "gaussian",
                    "density": p["crowd_density"],
                    "center": [size / 3.0, size / 2.0],
                    "width": size / 6.0,
                    "activity_mean": 0.5,
                    "activity_spread": 0.2,
                }
            ],
            "sfs": [{"kind": "uniform", "density": signal_density, "activity_mean": 0.5}],
        },
        "output": {"snapshot_stride": 0, "frame_stride": 0},
    }


PRESETS: dict[str, tuple[dict[str, Any], Callable[[dict[str, Any]], dict[str, Any]]]] = {
    "crowd": (CROWD_DEFAULTS, _crowd_document),
    "immune": (IMMUNE_DEFAULTS, _immune_document),
}


def preset_document(name: str, overrides: dict[str, Any] | None = None) -> dict[str, Any]:
    """
    The full configuration document of a preset with overrides applied.

    Args:
        name (str): crowd or immune
        overrides (dict[str, Any] | None): Parameter overrides; keys must be preset parameters

    Returns:
        dict[str, Any]: A document accepted by validate_config
    """
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset '{name}'. Valid presets: {list(PRESET_NAMES)}", "preset")
    defaults, build = PRESETS[name]
    overrides = overrides or {}
    if not isinstance(overrides, dict):
        raise ConfigurationError("overrides must be an object", "overrides")
    unknown = sorted(set(overrides) - set(defaults))
    if unknown:
        raise ConfigurationError(f"unknown parameters {unknown}. Valid keys: {sorted(defaults)}", "overrides")
    params = {**defaults, **overrides}
    for key, value in params.items():
        expected = type(defaults[key])
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            continue
        if not isinstance(value, expected) or isinstance(value, bool):
            raise ConfigurationError(f"{key} must be a {expected.__name__}. Found {value!r}", f"overrides.{key}")
    return build(params)


def build_preset(name: str, overrides: dict[str, Any] | None = None) -> tuple[SystemConfig, KernelSet]:
    """
    Build a validated, runnable preset.

    Args:
        name (str): crowd or immune
        overrides (dict[str, Any] | None): Parameter overrides

    Returns:
        tuple[SystemConfig, KernelSet]: The configuration and its kernel set
    """
    config = validate_config(preset_document(name, overrides))
    return config, config.build_kernels()


def strip_sfs(document: dict[str, Any]) -> dict[str, Any]:
    """The same document with the SFS scale removed: m = 0 and only FS-FS kernels kept."""
    stripped = deepcopy(document)
    stripped["system"]["m"] = 0
    stripped["kernels"] = [block for block in stripped.get("kernels", []) if block.get("scope") in ("alpha", "A", "E")]
    stripped.get("initial", {}).pop("sfs", None)
    stripped.get("sensitivity", {}).pop("sfs", None)
    stripped.pop("sfs_velocity", None)
    return stripped


def load_system(config_file: str | Path) -> SystemConfig:
    """
    Load a configuration file, a preset document ({"preset", "overrides"}) or a run manifest ({"config": ...}).

    Args:
        config_file (str | Path): Path to the JSON file

    Returns:
        SystemConfig: The validated configuration
    """
    config_path = Path(config_file)
    document = read_config(str(config_path))
    if isinstance(document.get("config", None), dict):
        document = document["config"]
    if "preset" in document:
        extra = sorted(set(document) - {"preset", "overrides"})
        if extra:
            raise ConfigurationError(f"a preset document only holds preset and overrides. Found {extra}")
        return validate_config(preset_document(document["preset"], document.get("overrides", {})))
    return validate_config(document, config_path.resolve().parent)
