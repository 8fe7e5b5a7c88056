"""
Run configuration assembled from command-line flags.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from common.config.analysis_config import (
    CURVE_REPEATS, CURVE_S_VALUES, DEFAULT_BOOTSTRAP, DEFAULT_CI_LEVEL, DEFAULT_PERMUTATIONS,
    DEFAULT_UNIVERSE, DEFAULT_WEIGHT_MODE, ACTIVITY_GAP_TOLERANCE
)
from common.model import TimeGrid
from common.utils.errors import ConfigError
from common.utils.rng_utils import require_seed

logger = logging.getLogger("proxnet")

WEIGHT_MODES = ("scan_normalized", "time_fraction")
UNIVERSES = ("all_office_bins", "coactive_bins", "sampled_bins")


def load_grid(path) -> TimeGrid:
    """Read a grid JSON document; no path means the study grid."""
    if path is None:
        return TimeGrid.study()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read grid file {path}: {e}")
    if not isinstance(document, dict):
        raise ConfigError(f"Grid file {path} must hold a JSON object")
    return TimeGrid.from_dict(document)


@dataclass
class RunConfig:
    """Validated parameters of one command run; echoed into its provenance."""
    command: str
    out_dir: Path
    grid: TimeGrid = field(default_factory=TimeGrid.study)
    seed: Optional[int] = None
    weight_mode: str = DEFAULT_WEIGHT_MODE
    universe: str = DEFAULT_UNIVERSE
    n_permutations: int = DEFAULT_PERMUTATIONS
    n_boot: int = DEFAULT_BOOTSTRAP
    ci_level: float = DEFAULT_CI_LEVEL
    repeats: int = CURVE_REPEATS
    s_values: Tuple[int, ...] = CURVE_S_VALUES
    gap_tolerance: int = ACTIVITY_GAP_TOLERANCE
    inputs: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if self.out_dir.exists() and not self.out_dir.is_dir():
            raise ConfigError(f"Output path {self.out_dir} exists and is not a directory")
        if self.seed is not None:
            self.seed = require_seed(self.seed)
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"Unknown weight mode {self.weight_mode!r} (choose from {WEIGHT_MODES})")
        if self.universe not in UNIVERSES:
            raise ConfigError(f"Unknown universe {self.universe!r} (choose from {UNIVERSES})")
        if self.n_permutations < 1:
            raise ConfigError(f"--permutations must be >= 1, got {self.n_permutations}")
        if self.n_boot < 1:
            raise ConfigError(f"--bootstrap must be >= 1, got {self.n_boot}")
        if not 0 < self.ci_level < 1:
            raise ConfigError(f"--level must lie in (0, 1), got {self.ci_level}")
        if self.repeats < 1:
            raise ConfigError(f"--repeats must be >= 1, got {self.repeats}")
        self.s_values = tuple(int(s) for s in self.s_values)
        if not self.s_values or any(s < 1 for s in self.s_values) or list(self.s_values) != sorted(set(self.s_values)):
            raise ConfigError(f"--s-values must be distinct positive integers in ascending order, got {self.s_values}")
        if self.gap_tolerance < 0:
            raise ConfigError(f"--gap-tolerance must be >= 0, got {self.gap_tolerance}")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        """Build from an argparse namespace; sub-command flags a command lacks keep their defaults."""
        options = {
            name: getattr(args, name)
            for name in ("weight_mode", "universe", "n_permutations", "n_boot", "ci_level",
                         "repeats", "s_values", "gap_tolerance")
            if getattr(args, name, None) is not None
        }
        inputs = {
            name: getattr(args, name)
            for name in ("store", "app", "badge", "roster", "survey", "resolution", "matrix", "matrix_a",
                         "matrix_b", "reference", "config", "density", "alpha", "source")
            if getattr(args, name, None) not in (None, [], ())
        }
        return cls(
            command=args.command,
            out_dir=args.out,
            grid=load_grid(args.grid),
            seed=args.seed,
            inputs=inputs,
            **options,
        )

    def require_seed(self) -> int:
        """Randomized commands never run without an explicit --seed."""
        if self.seed is None:
            raise ConfigError(f"The {self.command} command is randomized and needs an explicit --seed")
        return self.seed

    def to_dict(self) -> Dict:
        return {
            "command": self.command,
            "grid": self.grid.to_dict(),
            "seed": self.seed,
            "weight_mode": self.weight_mode,
            "universe": self.universe,
            "n_permutations": self.n_permutations,
            "n_boot": self.n_boot,
            "ci_level": self.ci_level,
            "repeats": self.repeats,
            "s_values": list(self.s_values),
            "gap_tolerance": self.gap_tolerance,
            "inputs": {k: [str(x) for x in v] if isinstance(v, (list, tuple)) else str(v) for k, v in self.inputs.items()},
        }
