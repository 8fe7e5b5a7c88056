"""
Output files of the ingest command.
"""
import logging
from pathlib import Path
from typing import Dict, List

import pandas as pd

from common.utils.file_utils import write_frame, write_json

logger = logging.getLogger("proxnet")

ACTIVITY_FILE = "activity.csv"
ACTIVITY_SUMMARY_FILE = "activity_summary.json"
INGEST_REPORT_FILE = "ingest_report.json"


def write_activity(out_dir, frame: pd.DataFrame, summary: Dict):
    """Per-device active fractions (one row per device and source) and their per-platform summary."""
    out_dir = Path(out_dir)
    write_frame(out_dir / ACTIVITY_FILE, frame, float_format="%.6f")
    write_json(out_dir / ACTIVITY_SUMMARY_FILE, summary)
    logger.info(f"Wrote activity of {len(frame)} devices to {out_dir / ACTIVITY_FILE}")


def write_ingest_report(out_dir, reports: List, counts: Dict[str, int], roster_size: int):
    document = {
        "roster_size": roster_size,
        "event_counts": counts,
        "logs": [r.to_dict() for r in reports],
        "rejected_rows": sum(r.rejected_count for r in reports),
        "duplicate_rows": sum(r.duplicates for r in reports),
    }
    write_json(Path(out_dir) / INGEST_REPORT_FILE, document)
