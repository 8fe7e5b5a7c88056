"""
Output files of the compare and curve commands.
"""
import logging
from pathlib import Path
from typing import Dict

from common.utils.file_utils import write_frame, write_json
from pipeline.stats.resampling import ResamplingCurve

logger = logging.getLogger("proxnet")

STATS_FILE = "stats.json"
CURVE_FILE = "curve.csv"


def write_stats(out_dir, document: Dict) -> Path:
    path = Path(out_dir) / STATS_FILE
    write_json(path, document)
    logger.info(f"Wrote comparison statistics to {path}")
    return path


def write_curve(out_dir, curve: ResamplingCurve) -> Path:
    """One row per sample size: S, retained roster, then mean/low/high per reference."""
    path = Path(out_dir) / CURVE_FILE
    write_frame(path, curve.to_frame(), float_format="%.6f")
    logger.info(f"Wrote resampling curve with {len(curve.points)} points to {path}")
    return path
