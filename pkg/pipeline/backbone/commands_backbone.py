"""
Command handler for the backbone stage.
"""
import logging
from pathlib import Path

from common.config import EXIT_OK, HASH_SALT
from common.database import database
from common.utils.errors import ConfigError
from common.utils.file_utils import read_matrix, write_provenance
from pipeline.backbone.backbone import backbone_extract, density, density_matched_backbone, survey_density
from pipeline.backbone.output_backbone import write_backbone
from pipeline.ingest import ingest

logger = logging.getLogger("proxnet")


def setup_backbone_command(subparsers):
    """Register the backbone sub-command."""
    parser = subparsers.add_parser("backbone", help="Disparity-filter backbone of a weighted network")
    parser.add_argument("--matrix", required=True, help="Weighted matrix CSV")
    target = parser.add_mutually_exclusive_group(required=True)
    target.add_argument("--survey", help="Match the density of this survey's symmetrized network")
    target.add_argument("--density", type=float, help="Explicit target density")
    target.add_argument("--alpha", type=float, help="Fixed alpha threshold")
    parser.add_argument("--roster", help="Roster CSV for the survey")
    parser.add_argument("--store", help="Event store whose roster the survey uses")
    parser.add_argument("--resolution", help="Explicit name,participant resolution table")
    parser.set_defaults(handler=cmd_backbone)
    return parser


def _survey_target(args) -> float:
    if args.roster:
        roster = ingest.load_roster(args.roster, HASH_SALT or None)
    elif args.store:
        roster = database["load_roster"](args.store)
    else:
        raise ConfigError("--survey needs a roster (--roster or --store)")
    resolution = ingest.load_resolution(args.resolution) if args.resolution else None
    survey, _ = ingest.parse_survey(args.survey, roster, resolution)
    return survey_density(survey)


def cmd_backbone(config, args) -> int:
    """Edge list, GraphML and 0/1 matrix of the backbone, plus the chosen threshold."""
    weights = read_matrix(args.matrix)
    summary = {"n": weights.n}

    if args.alpha is not None:
        network = backbone_extract(weights, args.alpha)
        summary.update({"method": "alpha", "alpha_threshold": args.alpha})
    else:
        target = _survey_target(args) if args.survey else args.density
        network, threshold = density_matched_backbone(weights, target)
        summary.update({"method": "density", "target_density": target, "alpha_threshold": threshold})

    summary["edges"] = network.edge_count
    summary["density"] = density(network) if network.n >= 2 else 0.0

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_backbone(out_dir, network, weights, summary)
    inputs = [args.matrix, args.survey, args.roster, args.store, args.resolution]
    write_provenance(out_dir, "backbone", inputs, config.to_dict(), config.seed)
    return EXIT_OK
