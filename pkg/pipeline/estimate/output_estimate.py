"""
Output files of the estimate command.
"""
import logging
from pathlib import Path
from typing import Dict, Optional

import pandas as pd

from common.model import WeightedNetwork
from common.utils.file_utils import write_frame, write_json, write_matrix

logger = logging.getLogger("proxnet")


def weights_file(source: str) -> str:
    return f"weights_{source}.csv"


def write_estimate(out_dir, source: str, network: WeightedNetwork, coactive: pd.DataFrame, summary: Dict,
                   scan_devices: Optional[pd.DataFrame] = None, scan_dyads: Optional[pd.DataFrame] = None) -> Path:
    """
    Write the weighted matrix and the descriptive tables of one source.

    Returns:
        Path of the matrix CSV
    """
    out_dir = Path(out_dir)
    matrix_path = out_dir / weights_file(source)
    write_matrix(matrix_path, network)
    write_frame(out_dir / f"coactive_{source}.csv", coactive, float_format="%.6f")
    if scan_devices is not None:
        write_frame(out_dir / f"scan_devices_{source}.csv", scan_devices, float_format="%.6f")
    if scan_dyads is not None:
        write_frame(out_dir / f"scan_dyads_{source}.csv", scan_dyads, float_format="%.6f")
    write_json(out_dir / f"estimate_{source}.json", summary)
    logger.info(f"Wrote {network.n}x{network.n} {source} matrix to {matrix_path}")
    return matrix_path
