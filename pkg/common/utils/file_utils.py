"""
Output helpers shared by every command: atomic writes, digests and provenance.
"""
import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, Optional

import numpy as np
import pandas as pd

from common.config import MATRIX_DECIMALS, VERSION
from common.model import WeightedNetwork
from common.utils.errors import ParseError

logger = logging.getLogger("proxnet")


def atomic_write_bytes(path, data: bytes):
    """Write a file so readers never observe a partial result."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path, document: Dict):
    atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True, default=_json_default) + "\n")


def write_frame(path, frame: pd.DataFrame, float_format: Optional[str] = None):
    atomic_write_text(path, frame.to_csv(index=False, float_format=float_format, lineterminator="\n"))


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def file_digest(path) -> str:
    """SHA-256 of a file's bytes."""
    sha = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()


def provenance(command: str, inputs: Iterable, config: Dict, seed: Optional[int] = None) -> Dict:
    """Everything needed to re-run a command: inputs with digests, seed, config echo, version."""
    inputs = [Path(p) for p in inputs if p is not None]
    return {
        "command": command,
        "version": VERSION,
        "seed": seed,
        "inputs": {str(p): file_digest(p) for p in inputs if p.is_file()},
        "config": config,
    }


def write_matrix(path, network: WeightedNetwork):
    """Weighted matrix CSV: header row of roster labels, then n rows, fixed point."""
    frame = pd.DataFrame(network.weights, columns=list(network.roster))
    write_frame(path, frame, float_format=f"%.{MATRIX_DECIMALS}f")


def read_matrix(path) -> WeightedNetwork:
    try:
        frame = pd.read_csv(path, dtype=float)
    except (OSError, ValueError) as e:
        raise ParseError(f"Unreadable matrix file: {e}", path=path)
    roster = tuple(str(c) for c in frame.columns)
    if frame.shape != (len(roster), len(roster)):
        raise ParseError(f"Matrix has shape {frame.shape} for {len(roster)} roster labels", path=path)
    return WeightedNetwork(roster, frame.to_numpy())


def write_provenance(out_dir, command: str, inputs: Iterable, config: Dict, seed: Optional[int] = None) -> Path:
    """Write `<command>.provenance.json` next to a command's outputs."""
    path = Path(out_dir) / f"{command}.provenance.json"
    write_json(path, provenance(command, inputs, config, seed))
    return path
