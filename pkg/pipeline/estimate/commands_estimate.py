"""
Command handler for the estimate stage.
"""
import logging
from pathlib import Path

from common.config import EXIT_OK
from common.database import database
from common.model import Source
from common.utils.file_utils import write_provenance
from pipeline.estimate.estimate import (
    build_detection_grid, scan_statistics, simultaneous_activity, weighted_network
)
from pipeline.estimate.output_estimate import write_estimate
from pipeline.ingest.ingest import compute_timelines

logger = logging.getLogger("proxnet")


def setup_estimate_command(subparsers):
    """Register the estimate sub-command."""
    parser = subparsers.add_parser("estimate", help="Estimate a weighted proximity network from an event store")
    parser.add_argument("--store", required=True, help="Event store written by ingest")
    parser.add_argument("--source", choices=[s.value for s in Source], default=Source.APP.value)
    parser.add_argument("--mode", dest="weight_mode", choices=["scan_normalized", "time_fraction"], default=None)
    parser.add_argument("--universe", choices=["all_office_bins", "coactive_bins", "sampled_bins"], default=None)
    parser.set_defaults(handler=cmd_estimate)
    return parser


def cmd_estimate(config, args) -> int:
    """Weighted matrix CSV plus scan and co-activity descriptives for one source."""
    events, roster, grid, gap_tolerance = database["load_store"](args.store)
    source = Source(args.source)

    detections = build_detection_grid(events, grid, roster, source)
    timelines = compute_timelines(events, grid, roster, source, gap_tolerance)
    network = weighted_network(detections, timelines, config.weight_mode, config.universe)

    coactive, coactive_summary = simultaneous_activity(timelines, roster)
    summary = {
        "source": source.value,
        "weight_mode": config.weight_mode,
        "universe": config.universe,
        "coactive": coactive_summary,
    }
    scan_devices = scan_dyads = None
    if source is Source.APP:
        scan_devices, scan_dyads, summary["scanning"] = scan_statistics(detections)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_estimate(out_dir, source.value, network, coactive, summary, scan_devices, scan_dyads)

    config_document = config.to_dict()
    config_document["grid"] = grid.to_dict()
    write_provenance(out_dir, f"estimate_{source.value}", [args.store], config_document, config.seed)
    return EXIT_OK
