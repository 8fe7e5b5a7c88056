"""
Command handler for the simulate stage.
"""
import json
import logging
from pathlib import Path

from common.config import EXIT_OK
from common.utils.errors import ConfigError
from common.utils.file_utils import write_provenance
from pipeline.sim.output_sim import write_simulation
from pipeline.sim.sim import SimConfig, simulate

logger = logging.getLogger("proxnet")


def setup_simulate_command(subparsers):
    """Register the simulate sub-command."""
    parser = subparsers.add_parser("simulate", help="Simulate contacts and the logs a study would record")
    parser.add_argument("--config", help="Simulator config JSON (defaults to the built-in presets)")
    parser.set_defaults(handler=cmd_simulate)
    return parser


def load_sim_config(path, grid, seed: int, grid_given: bool) -> SimConfig:
    """
    Simulator config from JSON; --seed always wins, --grid wins when given.
    """
    document = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                document = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read simulator config {path}: {e}")
        if not isinstance(document, dict):
            raise ConfigError(f"Simulator config {path} must hold a JSON object")
    if "seed" in document and document["seed"] != seed:
        logger.warning(f"Simulator config seed {document['seed']} overridden by --seed {seed}")
    document["seed"] = seed
    if grid_given or "grid" not in document:
        document["grid"] = grid
    return SimConfig.from_dict(document)


def cmd_simulate(config, args) -> int:
    seed = config.require_seed()
    sim_config = load_sim_config(args.config, config.grid, seed, args.grid is not None)

    app_log, badge_log, truth = simulate(sim_config)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_simulation(out_dir, app_log, badge_log, truth, sim_config)

    document = config.to_dict()
    document["simulation"] = sim_config.to_dict()
    write_provenance(out_dir, "simulate", [args.config], document, seed)
    return EXIT_OK
