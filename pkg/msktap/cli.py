"""
Command-line entry point.

    msktap run <config> [--homogeneous] [--out DIR] [--threads N]
    msktap run --preset crowd|immune [--out DIR]
    msktap verify [--scale tiny]
    msktap validate <config>

The log level is read from MSKTAP_LOG. Exit codes: 0 success, 1 failed verification, 2 invalid input,
3 aborted run (CFL violation or negativity).
"""

from pathlib import Path
import argparse
import json
import logging
import sys

from msktap.config import SystemConfig, describe
from msktap.core import ConfigurationError, DomainError, KernelDefinitionError, NegativityError, StepSizeError
from msktap.integrator import run
from msktap.scenarios import PRESET_NAMES, build_preset, load_system
from msktap.utils import configure_logging
from msktap.verification import NEGATIVE_CONTROLS, SCALES, format_results, negative_control_hooks, run_verification

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID = 2
EXIT_ABORTED = 3

MOMENTS_FILE = "moments.csv"
MANIFEST_FILE = "manifest.json"


def _load(config_path: Path | None, preset: str | None) -> SystemConfig:
    if preset is not None:
        config, _ = build_preset(preset)
        return config
    if config_path is None:
        raise ConfigurationError("give a config file or --preset")
    return load_system(config_path)


def write_manifest(path: Path, config: SystemConfig, rows: int, steps: int) -> None:
    """Echo the fully resolved config, so that the run can be repeated from the manifest alone."""
    manifest = {"config": config.document, "digest": config.digest, "steps": steps, "rows": rows}
    with path.open("w", encoding="utf-8") as file:
        json.dump(manifest, file, indent=2, sort_keys=True)
        file.write("\n")


def cmd_run(
    config_path: Path | None,
    output_dir: Path,
    homogeneous: bool = False,
    threads: int | None = None,
    preset: str | None = None,
) -> int:
    """
    Run a simulation and write moments.csv and manifest.json into output_dir.

    Args:
        config_path (Path | None): Config, preset document or manifest
        output_dir (Path): Output directory, created when missing
        homogeneous (bool): Reduce the system to spatial homogeneity first
        threads (int | None): Worker count override
        preset (str | None): Run a built-in preset instead of a config file

    Returns:
        int: Exit code
    """
    try:
        config = _load(config_path, preset)
        if homogeneous and not config.is_homogeneous:
            config = config.to_homogeneous()
        output_dir.mkdir(parents=True, exist_ok=True)
        trajectory = run(config, output_dir, threads)
    except (ConfigurationError, DomainError, KernelDefinitionError, FileNotFoundError) as err:
        logger.error("invalid configuration: %s", err)
        return EXIT_INVALID
    except (StepSizeError, NegativityError) as err:
        logger.error("run aborted: %s", err)
        return EXIT_ABORTED
    rows = trajectory.write_csv(output_dir / MOMENTS_FILE)
    write_manifest(output_dir / MANIFEST_FILE, config, rows, trajectory.steps)
    print(f"Wrote {rows} rows to {output_dir / MOMENTS_FILE}")
    return EXIT_OK


def cmd_verify(scale: str = "tiny", negative_control: str | None = None) -> int:
    """Run the verification suites and print the pass/fail table."""
    hooks = negative_control_hooks(negative_control) if negative_control else None
    results = run_verification(scale, hooks)
    for line in format_results(results):
        print(line)
    return EXIT_OK if all(result.passed for result in results) else EXIT_VERIFY_FAILED


def cmd_validate(config_path: Path) -> int:
    try:
        config = load_system(config_path)
    except (ConfigurationError, DomainError, KernelDefinitionError, FileNotFoundError) as err:
        logger.error("invalid configuration: %s", err)
        return EXIT_INVALID
    for line in describe(config):
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msktap", description="Multiscale kinetic simulation of active particles")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="run a simulation")
    run_parser.add_argument("config", nargs="?", type=Path, help="config file, preset document or run manifest")
    run_parser.add_argument("--preset", choices=PRESET_NAMES, help="run a built-in preset with default parameters")
    run_parser.add_argument("--homogeneous", action="store_true", help="reduce to the spatially homogeneous system")
    run_parser.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    run_parser.add_argument("--threads", type=int, default=None, help="worker count for operator evaluation")

    verify_parser = commands.add_parser("verify", help="run the verification suites")
    verify_parser.add_argument("--scale", choices=SCALES, default="tiny")
    verify_parser.add_argument("--negative-control", choices=NEGATIVE_CONTROLS, default=None, help=argparse.SUPPRESS)

    validate_parser = commands.add_parser("validate", help="validate a config and print a summary")
    validate_parser.add_argument("config", type=Path)
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Entrypoint for the msktap command.

    Args:
        argv (list[str] | None): Arguments; defaults to sys.argv

    Returns:
        int: Exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        configure_logging()
    except ConfigurationError as err:
        print(err, file=sys.stderr)
        return EXIT_INVALID

    if args.command == "run":
        if args.threads is not None and args.threads < 1:
            parser.error("--threads must be >= 1")
        if (args.config is None) == (args.preset is None):
            parser.error("run needs exactly one of a config file and --preset")
        return cmd_run(args.config, args.out, args.homogeneous, args.threads, args.preset)
    if args.command == "verify":
        return cmd_verify(args.scale, args.negative_control)
    return cmd_validate(args.config)


if __name__ == "__main__":
    sys.exit(main())
