"""
Contingency analysis between two proximity sources and edge matching between
binary networks.
"""
import logging
import math
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from scipy import stats as scipy_stats

from common.model import (
    ActivityTimeline, BinaryNetwork, ContingencyTable, Platform, TableStats
)
from common.utils.errors import DataIntegrityError, StatisticsError, ValidationError
from pipeline.estimate.estimate import DetectionGrid, Universe, activity_matrix

logger = logging.getLogger("proxnet")

SUBGROUPS = {
    frozenset([Platform.PLATFORM_A]): "A-A",
    frozenset([Platform.PLATFORM_B]): "B-B",
    frozenset([Platform.PLATFORM_A, Platform.PLATFORM_B]): "A-B",
}


def _check_compatible(grid_a: DetectionGrid, grid_b: DetectionGrid):
    if grid_a.labels != grid_b.labels:
        raise DataIntegrityError("Detection grids have different rosters")
    if grid_a.grid != grid_b.grid:
        raise DataIntegrityError("Detection grids use different time grids")


def contingency_universe(grid_a: DetectionGrid, grid_b: DetectionGrid, universe,
                         timelines: Optional[Mapping[str, Mapping[str, ActivityTimeline]]] = None,
                         two_device: bool = False) -> np.ndarray:
    """
    (n, n, bins) mask of the dyad-bins compared by a contingency table.

    The coactive universe requires, by default, all four devices of a dyad
    (both apps and both badges) to be active. With two_device=True a bin counts
    when both devices of the dyad are active for at least one of the sources.

    Args:
        timelines: {source value: {participant label: timeline}} for both sources
    """
    universe = Universe(universe)
    n, t = grid_a.n, grid_a.grid.total_bins
    if universe is Universe.ALL_OFFICE_BINS:
        mask = np.ones((n, n, t), dtype=bool)
    elif universe is Universe.SAMPLED_BINS:
        scanned = grid_a.scanned | grid_b.scanned
        mask = scanned[:, None, :] | scanned[None, :, :]
    else:
        if timelines is None:
            raise ValidationError("The coactive universe requires timelines for both sources")
        pairs = []
        for grid in (grid_a, grid_b):
            source_timelines = timelines.get(grid.source.value)
            if source_timelines is None:
                raise ValidationError(f"No {grid.source.value} timelines for the coactive universe")
            active = activity_matrix(source_timelines, grid.roster, t)
            pairs.append(active[:, None, :] & active[None, :, :])
        mask = pairs[0] | pairs[1] if two_device else pairs[0] & pairs[1]
    idx = np.arange(n)
    mask[idx, idx, :] = False
    return mask


def _dyad_cells(grid_a: DetectionGrid, grid_b: DetectionGrid, mask: np.ndarray) -> np.ndarray:
    """Per-dyad (a, b, c, d) counts as a (4, n, n) array."""
    det_a, det_b = grid_a.detected, grid_b.detected
    return np.stack([
        (det_a & det_b & mask).sum(axis=2),
        (det_a & ~det_b & mask).sum(axis=2),
        (~det_a & det_b & mask).sum(axis=2),
        (~det_a & ~det_b & mask).sum(axis=2),
    ])


def contingency(grid_a: DetectionGrid, grid_b: DetectionGrid, universe=Universe.ALL_OFFICE_BINS,
                timelines: Optional[Mapping[str, Mapping[str, ActivityTimeline]]] = None,
                two_device: bool = False) -> ContingencyTable:
    """
    Pool hits and misses of two sources over every (dyad, bin) in the universe.

    Returns:
        ContingencyTable with a = both detected, b = A only, c = B only, d = neither
    """
    _check_compatible(grid_a, grid_b)
    mask = contingency_universe(grid_a, grid_b, universe, timelines, two_device)
    cells = _dyad_cells(grid_a, grid_b, mask)
    upper = np.triu(np.ones((grid_a.n, grid_a.n), dtype=bool), k=1)
    table = ContingencyTable(*(int(cells[k][upper].sum()) for k in range(4)))
    logger.info(
        f"Contingency {grid_a.source.value} vs {grid_b.source.value} ({Universe(universe).value}): "
        f"a={table.a} b={table.b} c={table.c} d={table.d}"
    )
    return table


def subgroup_contingency(grid_a: DetectionGrid, grid_b: DetectionGrid, universe=Universe.ALL_OFFICE_BINS,
                         timelines: Optional[Mapping[str, Mapping[str, ActivityTimeline]]] = None,
                         two_device: bool = False) -> Dict[str, ContingencyTable]:
    """Contingency tables split by platform pair (A-A, B-B, A-B)."""
    _check_compatible(grid_a, grid_b)
    mask = contingency_universe(grid_a, grid_b, universe, timelines, two_device)
    cells = _dyad_cells(grid_a, grid_b, mask)
    platforms = grid_a.roster.platforms

    totals = {name: np.zeros(4, dtype=np.int64) for name in SUBGROUPS.values()}
    for i in range(grid_a.n):
        for j in range(i + 1, grid_a.n):
            name = SUBGROUPS.get(frozenset([platforms[i], platforms[j]]))
            if name is not None:
                totals[name] += cells[:, i, j]
    return {name: ContingencyTable(*(int(v) for v in cell)) for name, cell in totals.items()}


def table_stats(table: ContingencyTable) -> TableStats:
    """
    Phi, chi-squared (1 df, no continuity correction), marginal odds,
    sensitivity and specificity of a contingency table.

    Source B is the reference: sensitivity = a / (a + c), specificity = d / (b + d).
    """
    a, b, c, d = table.a, table.b, table.c, table.d
    if table.total == 0:
        raise StatisticsError("Contingency table is empty")
    margins = {
        "A hits (a+b)": a + b,
        "A misses (c+d)": c + d,
        "B hits (a+c)": a + c,
        "B misses (b+d)": b + d,
    }
    for name, value in margins.items():
        if value == 0:
            raise StatisticsError(f"Statistic undefined: margin {name} is zero")

    product = (a + b) * (c + d) * (a + c) * (b + d)
    phi = (a * d - b * c) / math.sqrt(product)
    phi = min(1.0, max(-1.0, phi))
    chi2 = table.total * phi * phi
    p_value = float(scipy_stats.chi2.sf(chi2, df=1))

    return TableStats(
        phi=float(phi),
        chi2=float(chi2),
        p_value=min(1.0, max(0.0, p_value)),
        odds_A=(a + b) / (c + d),
        odds_B=(a + c) / (b + d),
        sensitivity=a / (a + c),
        specificity=d / (b + d),
    )


def edge_match_count(x: BinaryNetwork, y: BinaryNetwork) -> Tuple[int, int]:
    """
    Edges shared by two binary networks.

    Returns:
        Tuple of (|edges(X) & edges(Y)|, |edges(Y)|) with Y the reference
    """
    if x.roster != y.roster:
        raise DataIntegrityError("Cannot match edges between networks with different rosters")
    matched = int(np.triu(x.adjacency & y.adjacency, k=1).sum())
    return matched, y.edge_count
