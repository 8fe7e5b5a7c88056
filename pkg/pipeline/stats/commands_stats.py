"""
Command handlers for the compare and curve stages.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from common.config import EXIT_OK, HASH_SALT
from common.database import database
from common.model import BinaryNetwork, Roster, Source
from common.utils.errors import ConfigError, StatisticsError
from common.utils.file_utils import read_matrix, write_provenance
from pipeline.backbone.backbone import symmetrize
from pipeline.estimate.estimate import build_detection_grid
from pipeline.ingest import ingest
from pipeline.stats.mantel import compare_networks
from pipeline.stats.output_stats import write_curve, write_stats
from pipeline.stats.resampling import resampling_curve
from pipeline.stats.stats import contingency, subgroup_contingency, table_stats

logger = logging.getLogger("proxnet")


def _add_survey_arguments(parser):
    parser.add_argument("--survey", help="Name-generator survey CSV")
    parser.add_argument("--roster", help="Roster CSV for the survey (defaults to the store's roster)")
    parser.add_argument("--resolution", help="Explicit name,participant resolution table")


def setup_compare_command(subparsers):
    """Register the compare sub-command."""
    parser = subparsers.add_parser("compare", help="Contingency statistics and Mantel comparisons")
    parser.add_argument("--store", help="Event store; enables the app/badge contingency table")
    parser.add_argument("--universe", choices=["all_office_bins", "coactive_bins", "sampled_bins"], default=None)
    parser.add_argument("--two-device-coactive", dest="two_device", action="store_true",
                        help="Coactive bins need only one source's pair of devices active")
    parser.add_argument("--subgroups", action="store_true", help="Split the contingency table by platform pair")
    parser.add_argument("--matrix-a", dest="matrix_a", help="First network matrix CSV")
    parser.add_argument("--matrix-b", dest="matrix_b", help="Second network matrix CSV")
    _add_survey_arguments(parser)
    parser.add_argument("--permutations", dest="n_permutations", type=int, default=None)
    parser.add_argument("--bootstrap", dest="n_boot", type=int, default=None)
    parser.add_argument("--level", dest="ci_level", type=float, default=None)
    parser.set_defaults(handler=cmd_compare)
    return parser


def setup_curve_command(subparsers):
    """Register the curve sub-command."""
    parser = subparsers.add_parser("curve", help="Correlation of resampled app networks against references")
    parser.add_argument("--store", required=True, help="Event store written by ingest")
    parser.add_argument("--s-values", dest="s_values", type=int, nargs="+", default=None)
    parser.add_argument("--repeats", type=int, default=None)
    parser.add_argument("--reference", action="append", default=[], metavar="NAME=PATH",
                        help="Reference matrix CSV (repeatable)")
    _add_survey_arguments(parser)
    parser.set_defaults(handler=cmd_curve)
    return parser


def read_network(path):
    """Matrix CSV as a network; matrices holding only 0 and 1 are read as binary."""
    network = read_matrix(path)
    if np.all(np.isin(network.weights, (0.0, 1.0))):
        return BinaryNetwork(network.roster, network.weights.astype(np.int8))
    return network


def _survey_network(args, store_roster: Optional[Roster]) -> Optional[BinaryNetwork]:
    if not args.survey:
        return None
    if args.roster:
        roster = ingest.load_roster(args.roster, HASH_SALT or None)
    elif store_roster is not None:
        roster = store_roster
    else:
        raise ConfigError("--survey needs a roster (--roster or --store)")
    resolution = ingest.load_resolution(args.resolution) if args.resolution else None
    survey, _ = ingest.parse_survey(args.survey, roster, resolution)
    return symmetrize(survey)


def _table_document(table) -> Dict:
    document = {"table": table.to_dict()}
    try:
        document["stats"] = table_stats(table).to_dict()
    except StatisticsError as e:
        document["error"] = str(e)
    return document


def cmd_compare(config, args) -> int:
    """
    Write stats.json.

    With --store the app and badge grids are compared bin by bin (badge is the
    reference source). Matrices and the survey are compared pairwise with the
    Mantel test, its bootstrap interval, densities and edge matches.
    """
    document = {}
    inputs = [args.store, args.matrix_a, args.matrix_b, args.survey, args.roster, args.resolution]
    store_roster = None

    if args.store:
        events, store_roster, grid, gap_tolerance = database["load_store"](args.store)
        app = build_detection_grid(events, grid, store_roster, Source.APP)
        badge = build_detection_grid(events, grid, store_roster, Source.BADGE)
        timelines = {
            source.value: ingest.compute_timelines(events, grid, store_roster, source, gap_tolerance)
            for source in Source
        }
        table = contingency(app, badge, config.universe, timelines, args.two_device)
        entry = {"universe": config.universe, "two_device_coactive": args.two_device, **_table_document(table)}
        if "error" in entry:
            raise StatisticsError(entry["error"])
        if args.subgroups:
            entry["subgroups"] = {
                name: _table_document(sub)
                for name, sub in subgroup_contingency(app, badge, config.universe, timelines, args.two_device).items()
            }
        document["contingency"] = entry

    pairs: List[Tuple[str, object, object]] = []
    a = read_network(args.matrix_a) if args.matrix_a else None
    b = read_network(args.matrix_b) if args.matrix_b else None
    survey = _survey_network(args, store_roster)
    if a is not None and b is not None:
        pairs.append(("a_vs_b", a, b))
    if survey is not None:
        for name, network in (("a", a), ("b", b)):
            if network is not None:
                pairs.append((f"{name}_vs_survey", network, survey))

    if not document and not pairs:
        raise ConfigError("compare needs --store, two matrices, or a matrix and a survey")

    if pairs:
        seed = config.require_seed()
        document["comparisons"] = {
            name: compare_networks(x, y, config.n_permutations, config.n_boot, config.ci_level, seed)
            for name, x, y in pairs
        }

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_stats(out_dir, document)
    write_provenance(out_dir, "compare", inputs, config.to_dict(), config.seed)
    return EXIT_OK


def _references(args, roster: Roster) -> Dict[str, object]:
    references = {}
    for spec in args.reference:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise ConfigError(f"--reference expects NAME=PATH, got {spec!r}")
        if name in references:
            raise ConfigError(f"Reference {name!r} given twice")
        references[name] = read_network(path)
    survey = _survey_network(args, roster)
    if survey is not None:
        references["survey"] = survey
    if not references:
        raise ConfigError("curve needs at least one --reference or --survey")
    return references


def cmd_curve(config, args) -> int:
    """Write curve.csv: correlation with every reference per required sample size."""
    seed = config.require_seed()
    events, roster, grid, _ = database["load_store"](args.store)
    references = _references(args, roster)
    app = build_detection_grid(events, grid, roster, Source.APP)

    curve = resampling_curve(app, references, config.s_values, config.repeats, seed)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_curve(out_dir, curve)
    reference_paths = [spec.partition("=")[2] for spec in args.reference]
    inputs = [args.store, *reference_paths, args.survey, args.roster, args.resolution]
    write_provenance(out_dir, "curve", inputs, config.to_dict(), seed)
    return EXIT_OK
