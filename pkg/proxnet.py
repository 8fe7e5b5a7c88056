"""
proxnet: proximity networks from Bluetooth scan logs.

Batch front end for the ingest, estimate, compare, backbone, curve and
simulate commands.
"""
import argparse
import logging
import sys
import traceback

from common.config import EXIT_FAILURE, LOG_FILE, LOG_FORMAT, LOG_LEVEL, LOGGER_NAME, VERSION
from common.config.run_config import RunConfig
from common.utils.errors import ProxnetError

# Import pipeline stages
from pipeline.ingest.commands_ingest import setup_ingest_command
from pipeline.estimate.commands_estimate import setup_estimate_command
from pipeline.stats.commands_stats import setup_compare_command, setup_curve_command
from pipeline.backbone.commands_backbone import setup_backbone_command
from pipeline.sim.commands_sim import setup_simulate_command

logger = logging.getLogger(LOGGER_NAME)


def setup_logging(verbose: bool = False, log_file: str = LOG_FILE):
    """Attach a stderr handler and an optional file handler to the package logger."""
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT)
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)
    if log_file:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    level = logging.INFO if verbose else getattr(logging, str(LOG_LEVEL).upper(), logging.WARNING)
    logger.setLevel(level)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proxnet", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--grid", help="Time grid JSON (defaults to the study grid)")
    parser.add_argument("--seed", type=int, default=None, help="Seed of every randomized computation")
    parser.add_argument("--out", default="out", help="Output directory")
    parser.add_argument("--verbose", action="store_true", help="Log progress at INFO level")
    parser.add_argument("--log-file", dest="log_file", default=LOG_FILE, help="Also log to this file")
    parser.add_argument("--version", action="version", version=f"proxnet {VERSION}")

    subparsers = parser.add_subparsers(dest="command", required=True)
    setup_ingest_command(subparsers)
    setup_estimate_command(subparsers)
    setup_compare_command(subparsers)
    setup_backbone_command(subparsers)
    setup_curve_command(subparsers)
    setup_simulate_command(subparsers)
    return parser


def main(argv=None) -> int:
    """Run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.log_file)
    try:
        config = RunConfig.from_args(args)
        return args.handler(config, args)
    except ProxnetError as e:
        logger.error(f"Error in {args.command}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Unhandled error in {args.command}: {e}\n{traceback.format_exc()}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
