"""
Mantel test with Spearman correlation, and a dyad bootstrap for its
confidence interval.
"""
import itertools
import logging
import math
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.stats import rankdata

from common.config import (
    BOOTSTRAP_MAX_RETRIES, DEFAULT_BOOTSTRAP, DEFAULT_CI_LEVEL, DEFAULT_PERMUTATIONS,
    MIN_ROSTER_SIZE
)
from common.model import BinaryNetwork, MantelResult, WeightedNetwork
from common.utils.errors import DataIntegrityError, StatisticsError, ValidationError
from common.utils.rng_utils import generator

logger = logging.getLogger("proxnet")

Network = Union[WeightedNetwork, BinaryNetwork]

# Permuted statistics within this distance of the observed one count as ties
TIE_TOLERANCE = 1e-12
PERMUTATION_CHUNK = 1000


def _standardize(ranks: np.ndarray) -> np.ndarray:
    centered = ranks - ranks.mean()
    norm = np.sqrt(np.dot(centered, centered))
    if norm == 0:
        raise StatisticsError("Spearman correlation undefined: constant input")
    return centered / norm


def spearman_rho(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman rank correlation with average ranks on ties."""
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    sx, sy = _standardize(rx), _standardize(ry)
    if np.array_equal(rx, ry):
        return 1.0
    return float(np.clip(np.dot(sx, sy), -1.0, 1.0))


def covering_interval(low: float, high: float, point: float) -> Tuple[float, float, bool]:
    """
    Widen a percentile interval just enough to contain its point estimate.

    Returns:
        Tuple of (low, high, widened)
    """
    widened = not low <= point <= high
    return min(low, point), max(high, point), widened


def _check_pair(a: Network, b: Network):
    if a.roster != b.roster:
        raise DataIntegrityError(f"Networks differ in size or roster order ({a.n} vs {b.n})")
    if a.n < MIN_ROSTER_SIZE:
        raise ValidationError(f"The Mantel test needs at least {MIN_ROSTER_SIZE} nodes, got {a.n}")


def _permuted_statistics(sx: np.ndarray, rank_matrix: np.ndarray, perms: np.ndarray) -> np.ndarray:
    rows, cols = np.triu_indices(rank_matrix.shape[0], k=1)
    permuted = rank_matrix[perms[:, rows], perms[:, cols]]
    centered = permuted - permuted.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered * centered).sum(axis=1))
    return (centered @ sx) / norms


def mantel(a: Network, b: Network, n_permutations: int = DEFAULT_PERMUTATIONS,
           rng_seed: Optional[int] = 0) -> MantelResult:
    """
    One-tailed Mantel test of two networks on the same roster.

    rho is the Spearman correlation of the upper-triangle entries. Each
    permutation relabels the nodes of B (rows and columns together); p is
    (1 + #{rho* >= rho}) / (1 + permutations). When n! does not exceed
    n_permutations + 1 every relabeling is enumerated instead, which makes the
    p-value exact.

    Args:
        a, b: Weighted or binary networks
        n_permutations: Number of random relabelings
        rng_seed: Seed of the permutation streams

    Returns:
        MantelResult without CI
    """
    _check_pair(a, b)
    if n_permutations < 1:
        raise ValidationError(f"n_permutations must be >= 1, got {n_permutations}")

    x, y = a.upper_triangle(), b.upper_triangle()
    rho = spearman_rho(x, y)
    sx = _standardize(rankdata(x, method="average"))

    n = a.n
    rows, cols = np.triu_indices(n, k=1)
    rank_matrix = np.zeros((n, n))
    rank_matrix[rows, cols] = rankdata(y, method="average")
    rank_matrix = rank_matrix + rank_matrix.T

    if math.factorial(n) <= n_permutations + 1:
        perms = np.array([p for p in itertools.permutations(range(n)) if p != tuple(range(n))], dtype=np.intp)
        exceed = int((_permuted_statistics(sx, rank_matrix, perms) >= rho - TIE_TOLERANCE).sum())
        performed = len(perms)
        logger.info(f"Mantel test enumerated all {performed + 1} relabelings of {n} nodes")
    else:
        exceed = 0
        performed = n_permutations
        for chunk, start in enumerate(range(0, n_permutations, PERMUTATION_CHUNK)):
            size = min(PERMUTATION_CHUNK, n_permutations - start)
            rng = generator(rng_seed, 0, chunk)
            perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
            exceed += int((_permuted_statistics(sx, rank_matrix, perms) >= rho - TIE_TOLERANCE).sum())

    p_value = (1 + exceed) / (1 + performed)
    return MantelResult(rho=rho, p_value=p_value, n_permutations=performed)


def mantel_bootstrap_ci(a: Network, b: Network, n_boot: int = DEFAULT_BOOTSTRAP,
                        level: float = DEFAULT_CI_LEVEL, rng_seed: Optional[int] = 0) -> Tuple[float, float]:
    """
    Percentile bootstrap interval of the Spearman Mantel statistic.

    Dyads (upper-triangle entries) are resampled with replacement. A resample
    in which either side is constant is redrawn, at most BOOTSTRAP_MAX_RETRIES
    times per replicate.

    Returns:
        Tuple of (ci_low, ci_high)
    """
    _check_pair(a, b)
    if n_boot < 1:
        raise ValidationError(f"n_boot must be >= 1, got {n_boot}")
    if not 0 < level < 1:
        raise ValidationError(f"level must lie in (0, 1), got {level}")

    x, y = a.upper_triangle(), b.upper_triangle()
    spearman_rho(x, y)
    m = len(x)

    replicates = np.empty(n_boot)
    for r in range(n_boot):
        rng = generator(rng_seed, 1, r)
        for _ in range(BOOTSTRAP_MAX_RETRIES + 1):
            idx = rng.integers(0, m, size=m)
            xs, ys = x[idx], y[idx]
            if np.ptp(xs) > 0 and np.ptp(ys) > 0:
                replicates[r] = spearman_rho(xs, ys)
                break
        else:
            raise StatisticsError(
                f"Bootstrap replicate {r} stayed degenerate after {BOOTSTRAP_MAX_RETRIES} redraws"
            )

    tail = (1.0 - level) / 2.0
    low, high = np.quantile(replicates, [tail, 1.0 - tail])
    return float(low), float(high)


def compare_networks(a: Network, b: Network, n_permutations: int = DEFAULT_PERMUTATIONS,
                     n_boot: int = DEFAULT_BOOTSTRAP, level: float = DEFAULT_CI_LEVEL,
                     rng_seed: Optional[int] = 0) -> Dict:
    """Mantel result with bootstrap CI, densities and (for binary pairs) edge matches."""
    from pipeline.backbone.backbone import density
    from pipeline.stats.stats import edge_match_count

    result = mantel(a, b, n_permutations, rng_seed)
    low, high, widened = covering_interval(*mantel_bootstrap_ci(a, b, n_boot, level, rng_seed), result.rho)
    if widened:
        logger.warning(f"Point estimate {result.rho:.4f} lay outside its bootstrap interval, interval widened to it")
    document = {
        "n": a.n,
        "mantel": result.with_ci(low, high).to_dict(),
        "bootstrap_ci": {"low": low, "high": high, "level": level, "replicates": n_boot, "widened": widened},
        "density_a": density(a),
        "density_b": density(b),
    }
    if isinstance(a, BinaryNetwork) and isinstance(b, BinaryNetwork):
        matched, total = edge_match_count(a, b)
        document["edge_match"] = {"matched": matched, "reference_edges": total}
    logger.info(f"Mantel rho={result.rho:.4f} p={result.p_value:.4g} CI=[{low:.3f}, {high:.3f}]")
    return document
