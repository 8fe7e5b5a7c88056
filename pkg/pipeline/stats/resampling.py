"""
Resampling-bias curve: how the correlation of the app network with reference
networks changes when every participant contributes the same number of scans.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from common.config import CURVE_BAND, CURVE_REPEATS, MIN_ROSTER_SIZE
from common.model import BinaryNetwork, WeightedNetwork
from common.utils.errors import DataIntegrityError, StatisticsError, ValidationError
from pipeline.estimate.estimate import DetectionGrid, draw_scan_bins, resampled_weights
from pipeline.stats.mantel import covering_interval, spearman_rho

logger = logging.getLogger("proxnet")

Network = Union[WeightedNetwork, BinaryNetwork]


@dataclass
class CurvePoint:
    required_samples: int
    roster_n: int
    computed: bool
    repeats: int
    # reference name -> {"mean", "low", "high", "valid"}
    correlations: Dict[str, Dict[str, float]] = field(default_factory=dict)


@dataclass
class ResamplingCurve:
    references: Tuple[str, ...]
    band: Tuple[float, float]
    points: List[CurvePoint] = field(default_factory=list)

    def means(self, reference: str) -> np.ndarray:
        return np.array([
            p.correlations[reference]["mean"] if p.computed else np.nan for p in self.points
        ])

    def to_frame(self) -> pd.DataFrame:
        records = []
        for p in self.points:
            record = {"S": p.required_samples, "roster_n": p.roster_n, "computed": int(p.computed)}
            for name in self.references:
                stats = p.correlations.get(name, {})
                record[f"{name}_mean"] = stats.get("mean", np.nan)
                record[f"{name}_lo"] = stats.get("low", np.nan)
                record[f"{name}_hi"] = stats.get("high", np.nan)
            records.append(record)
        return pd.DataFrame(records)


def resampling_curve(grid: DetectionGrid, references: Mapping[str, Network], s_values: Sequence[int],
                     repeats: int = CURVE_REPEATS, rng_seed: int = 0,
                     band: Tuple[float, float] = CURVE_BAND) -> ResamplingCurve:
    """
    Correlate resampled networks with reference networks across sample sizes.

    For every S the network is resampled `repeats` times (repeat r uses stream
    r, exactly as resample_network(grid, S, seed, stream=r)) and each replicate
    is correlated with every reference restricted to the retained roster.
    Points whose retained roster is smaller than three are flagged, not computed.

    Args:
        grid: App detection grid
        references: {name: network over the grid's roster}
        s_values: Ascending sample sizes
        repeats: Replicates per sample size
        rng_seed: Seed
        band: Quantiles of the reported band

    Returns:
        ResamplingCurve
    """
    s_values = [int(s) for s in s_values]
    if not s_values or any(s < 1 for s in s_values):
        raise ValidationError(f"Sample sizes must be positive, got {s_values}")
    if s_values != sorted(s_values):
        raise ValidationError(f"Sample sizes must be sorted ascending, got {s_values}")
    if repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {repeats}")
    for name, reference in references.items():
        if tuple(reference.roster) != grid.labels:
            raise DataIntegrityError(f"Reference {name!r} does not share the grid's roster")

    scan_bin_counts = (grid.scans > 0).sum(axis=1)
    directed_all = grid.directed
    curve = ResamplingCurve(references=tuple(references), band=tuple(band))

    for s in s_values:
        keep = [k for k in range(grid.n) if scan_bin_counts[k] >= s]
        point = CurvePoint(required_samples=s, roster_n=len(keep), computed=False, repeats=repeats)
        curve.points.append(point)
        if len(keep) < MIN_ROSTER_SIZE:
            logger.warning(f"S={s}: only {len(keep)} participants retained, point not computed")
            continue

        directed = directed_all[np.ix_(keep, keep)]
        rows, cols = np.triu_indices(len(keep), k=1)
        reference_vectors = {
            name: np.asarray(ref.matrix)[np.ix_(keep, keep)][rows, cols] for name, ref in references.items()
        }

        samples = {name: [] for name in references}
        for r in range(repeats):
            drawn = draw_scan_bins(grid, keep, s, rng_seed, r)
            weights = resampled_weights(directed, drawn)[rows, cols]
            for name, vector in reference_vectors.items():
                try:
                    samples[name].append(spearman_rho(weights, vector))
                except StatisticsError:
                    continue

        point.computed = True
        for name, values in samples.items():
            values = np.array(values)
            if len(values) == 0:
                point.correlations[name] = {"mean": np.nan, "low": np.nan, "high": np.nan, "valid": 0}
                continue
            mean = float(values.mean())
            low, high, widened = covering_interval(*np.quantile(values, band), mean)
            if widened:
                logger.debug(f"S={s}: {name} band widened to contain its mean {mean:.4f}")
            point.correlations[name] = {
                "mean": mean,
                "low": float(low),
                "high": float(high),
                "valid": int(len(values)),
            }
        logger.info(
            f"S={s}: roster {len(keep)}, "
            + ", ".join(f"{name} {stats['mean']:.3f}" for name, stats in point.correlations.items())
        )
    return curve
