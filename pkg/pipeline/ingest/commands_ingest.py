"""
Command handler for the ingest stage.
"""
import logging
import os
from pathlib import Path

from common.config import EXIT_OK, HASH_SALT
from common.database import DB_FILE, database
from common.model import Roster, ScanEvent, Source
from common.utils.errors import ParseError
from common.utils.file_utils import write_provenance
from pipeline.ingest.ingest import activity_report, compute_timelines, load_roster, parse_scan_log
from pipeline.ingest.output_ingest import write_activity, write_ingest_report

logger = logging.getLogger("proxnet")


def setup_ingest_command(subparsers):
    """Register the ingest sub-command."""
    parser = subparsers.add_parser(
        "ingest",
        help="Parse app and badge logs into a normalized event store with an activity report",
    )
    parser.add_argument("--app", nargs="*", default=[], help="App scan logs (CSV or JSON lines)")
    parser.add_argument("--badge", nargs="*", default=[], help="Badge scan logs (CSV or JSON lines)")
    parser.add_argument("--roster", help="Roster CSV participant,app_id,badge_id,platform")
    parser.add_argument("--salt", default=None,
                        help="Hash raw roster ids with this salt (defaults to PROXNET_HASH_SALT when set)")
    parser.add_argument("--gap-tolerance", dest="gap_tolerance", type=int, default=None,
                        help="Bridge inactive runs of at most this many bins")
    parser.add_argument("--lenient", action="store_true",
                        help="Skip rejected rows instead of failing")
    parser.set_defaults(handler=cmd_ingest)
    return parser


def cmd_ingest(config, args) -> int:
    """
    Parse every log, store the merged events and write the activity report.

    Rejected rows fail the command with the first offending file and line
    unless --lenient is given, in which case they are only reported.
    """
    salt = args.salt if args.salt is not None else (HASH_SALT or None)
    roster = load_roster(args.roster, salt) if args.roster else Roster([])

    events, reports = [], []
    for source, paths in ((Source.APP, args.app), (Source.BADGE, args.badge)):
        for path in paths:
            parsed, report = parse_scan_log(path, source)
            events += parsed
            reports.append(report)

    for report in reports:
        if report.rejected and not args.lenient:
            line, reason = report.rejected[0]
            raise ParseError(f"{reason} ({report.rejected_count} rows rejected)", path=report.path, line=line)
    events.sort(key=ScanEvent.sort_key)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = out_dir / DB_FILE
    staging = out_dir / f".{DB_FILE}.tmp"
    database["init_db"](staging)
    database["store_roster"](staging, roster)
    database["store_events"](staging, events)
    database["set_meta"](staging, "grid", config.grid.to_dict())
    database["set_meta"](staging, "gap_tolerance", config.gap_tolerance)
    os.replace(staging, store)

    timelines = {
        source.value: compute_timelines(events, config.grid, roster, source, config.gap_tolerance)
        for source in Source
    }
    frame, summary = activity_report(timelines, roster)
    write_activity(out_dir, frame, summary)
    write_ingest_report(out_dir, reports, database["count_events"](store), len(roster))

    inputs = [args.roster, *args.app, *args.badge]
    write_provenance(out_dir, "ingest", inputs, config.to_dict(), config.seed)
    logger.info(f"Ingested {len(events)} events for {len(roster)} participants into {store}")
    return EXIT_OK
