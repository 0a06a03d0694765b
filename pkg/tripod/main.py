"""Command-line entry point: ``python -m tripod.main <command> --config run.cfg``."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import tripod
from tripod.config import RunConfig, get_settings, load_config
from tripod.exceptions import ConfigError, SweepSpecError, TripodError
from tripod.logging_config import setup_logging
from tripod.models.sweep_schemas import SweepKind, SweepSpec
from tripod.services.experiments import render_table, run_experiment, table_filename

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_USAGE_ERROR = 2

COMMANDS = {
    "simulate": "integrate the master equation and write the dynamics trace",
    "dressed": "write quasienergies along the pulse",
    "doppler": "scan the Doppler detuning and average over thermal velocities",
    "sweep": "run the sweep named by the config's kind key",
}


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser; physics parameters come only from --config."""
    parser = argparse.ArgumentParser(
        prog="tripod",
        description="Coherence creation in a tripod atom driven by chirped pulses.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {tripod.__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in COMMANDS.items():
        command = subparsers.add_parser(name, help=help_text)
        command.add_argument("--config", required=True, help="run config file (key = value lines)")
        command.add_argument("--out", default=None, help="output directory")
        command.add_argument("--format", choices=("csv", "json"), default=None)
        command.add_argument(
            "--workers", type=int, default=None, help="worker processes (default from settings)"
        )
    return parser


def specs_for_command(command: str, config: RunConfig) -> list[SweepSpec]:
    """
    Experiments a CLI command runs for a given config.

    Raises:
        ConfigError: If ``sweep`` is used without a ``kind`` key.
    """
    if command == "simulate":
        return [config.sweep_spec(SweepKind.DYNAMICS_TRACE)]
    if command == "dressed":
        return [config.sweep_spec(SweepKind.QUASIENERGY_TRACE)]
    if command == "doppler":
        specs = [config.sweep_spec(SweepKind.DETUNING_SCAN)]
        if config.average:
            specs.append(config.sweep_spec(SweepKind.DOPPLER_AVERAGE))
        return specs
    return [config.sweep_spec()]


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run the CLI.

    Returns:
        0 on success, 1 on runtime failure, 2 on usage or config errors.
    """
    args_list = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not args_list:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE_ERROR
    try:
        args = parser.parse_args(args_list)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE_ERROR

    settings = get_settings()
    setup_logging(settings.log_level, settings.log_json)

    try:
        config = load_config(args.config)
        specs = specs_for_command(args.command, config)
    except (ConfigError, SweepSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE_ERROR

    out_dir = Path(args.out or config.output_dir or settings.output_dir)
    fmt = args.format or config.format or settings.default_format

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for spec in specs:
            table = run_experiment(spec, max_workers=args.workers)
            table = table.model_copy(
                update={
                    "metadata": {
                        **table.metadata,
                        "command": args.command,
                        "config": config.model_dump(mode="json"),
                    }
                }
            )
            path = out_dir / table_filename(table, fmt)
            path.write_bytes(render_table(table, fmt))
            print(path)
    except SweepSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE_ERROR
    except (TripodError, OSError, ValueError) as exc:
        logger.error(f"Run failed: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
