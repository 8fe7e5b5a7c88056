"""
Output files of the simulate command.
"""
import logging
from pathlib import Path
from typing import Dict, List

from common.model import ScanEvent
from common.utils.file_utils import write_json, write_matrix
from pipeline.ingest.ingest import write_roster, write_scan_log
from pipeline.sim.sim import GroundTruth, SimConfig, realized_scan_rates

logger = logging.getLogger("proxnet")

APP_LOG_FILE = "app_log.csv"
BADGE_LOG_FILE = "badge_log.csv"
ROSTER_FILE = "roster.csv"
TRUTH_FILE = "truth.csv"
SUMMARY_FILE = "simulation.json"


def write_simulation(out_dir, app_log: List[ScanEvent], badge_log: List[ScanEvent], truth: GroundTruth,
                     config: SimConfig) -> Dict[str, Path]:
    """
    Write the logs, hashed roster, truth matrix and a summary of one run.

    Returns:
        {name: path} of the written files
    """
    out_dir = Path(out_dir)
    paths = {
        "app_log": out_dir / APP_LOG_FILE,
        "badge_log": out_dir / BADGE_LOG_FILE,
        "roster": out_dir / ROSTER_FILE,
        "truth": out_dir / TRUTH_FILE,
        "summary": out_dir / SUMMARY_FILE,
    }
    write_scan_log(app_log, paths["app_log"])
    write_scan_log(badge_log, paths["badge_log"])
    write_roster(truth.roster, paths["roster"])
    write_matrix(paths["truth"], truth.true_weights)

    bins = max(config.grid.total_bins, 1)
    write_json(paths["summary"], {
        "participants": len(truth.roster),
        "bins": config.grid.total_bins,
        "app_events": len(app_log),
        "badge_events": len(badge_log),
        "scans_per_hour": realized_scan_rates(truth, config.grid),
        "app_active_fraction": {
            label: float(truth.app_active[k].sum() / bins) for k, label in enumerate(truth.roster.labels)
        },
        "badge_worn_fraction": {
            label: float(truth.badge_worn[k].sum() / bins) for k, label in enumerate(truth.roster.labels)
        },
        "mean_contact_fraction": float(truth.true_weights.upper_triangle().mean()) if len(truth.roster) > 1 else 0.0,
    })
    logger.info(f"Wrote simulation outputs to {out_dir}")
    return paths
