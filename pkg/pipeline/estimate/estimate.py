"""
Estimation logic: per-source detection grids and weighted proximity networks.
"""
import enum
import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from common.model import (
    ActivityTimeline, EventKind, Roster, ScanEvent, Source, TimeGrid, WeightedNetwork
)
from common.utils.errors import (
    DataIntegrityError, EmptyNetworkError, ValidationError
)
from common.utils.rng_utils import generator

logger = logging.getLogger("proxnet")


class WeightMode(str, enum.Enum):
    SCAN_NORMALIZED = "scan_normalized"  # connection strength R_ij
    TIME_FRACTION = "time_fraction"      # share of universe bins with a detection


class Universe(str, enum.Enum):
    ALL_OFFICE_BINS = "all_office_bins"
    COACTIVE_BINS = "coactive_bins"
    SAMPLED_BINS = "sampled_bins"


@dataclass(frozen=True, eq=False)
class DetectionGrid:
    """
    Per-source detections on the time grid.

    hits[i, j, t] counts detect events with scanner i and observed j in bin t;
    scans[i, t] counts scan events issued by i in bin t.
    """
    source: Source
    roster: Roster
    grid: TimeGrid
    hits: np.ndarray
    scans: np.ndarray

    def __post_init__(self):
        n, t = len(self.roster), self.grid.total_bins
        if self.hits.shape != (n, n, t) or self.scans.shape != (n, t):
            raise DataIntegrityError(
                f"DetectionGrid shapes {self.hits.shape}/{self.scans.shape} do not match roster {n} x bins {t}"
            )
        for array in (self.hits, self.scans):
            if np.any(array < 0):
                raise DataIntegrityError("DetectionGrid counts must be non-negative")
            array.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.roster)

    @property
    def labels(self) -> Tuple[str, ...]:
        return self.roster.labels

    @property
    def directed(self) -> np.ndarray:
        """directed[i, j, t]: i detected j in bin t."""
        return self.hits > 0

    @property
    def detected(self) -> np.ndarray:
        """Symmetric detection: either member's scan in the bin observed the other."""
        directed = self.directed
        return directed | directed.transpose(1, 0, 2)

    @property
    def scanned(self) -> np.ndarray:
        return self.scans > 0

    @property
    def directed_counts(self) -> np.ndarray:
        """N_ij: scans in which i detected j (per-bin hits capped by i's scans)."""
        return self.scan_detections().sum(axis=2)

    def scan_detections(self) -> np.ndarray:
        """Per-bin detections that belong to a logged scan."""
        return np.minimum(self.hits, self.scans[:, None, :])


# --- Grids ---

def _positions(roster: Roster, source: Source, devices: Sequence[str]) -> np.ndarray:
    return np.array(
        [-1 if (k := roster.index_of(source, d)) is None else k for d in devices], dtype=np.int64
    )


def build_detection_grid(events: Sequence[ScanEvent], grid: TimeGrid, roster: Roster, source) -> DetectionGrid:
    """
    Build the detection grid of one source.

    Args:
        events: Parsed events (other sources are ignored)
        grid: Time grid
        roster: Study roster; detections from/to non-participants are excluded
        source: Source to build

    Returns:
        DetectionGrid
    """
    source = Source(source)
    n, t = len(roster), grid.total_bins
    hits = np.zeros((n, n, t), dtype=np.uint16)
    scans = np.zeros((n, t), dtype=np.int32)

    events = [e for e in events if e.source is source and e.kind is not EventKind.TELEMETRY]
    if events:
        bins = grid.bins_of([e.timestamp for e in events])
        scanner = _positions(roster, source, [e.scanner for e in events])
        observed = _positions(roster, source, [e.observed or "" for e in events])
        is_scan = np.array([e.kind is EventKind.SCAN for e in events])
        in_grid = (bins >= 0) & (scanner >= 0)

        s = in_grid & is_scan
        np.add.at(scans, (scanner[s], bins[s]), 1)

        d = in_grid & ~is_scan & (observed >= 0)
        np.add.at(hits, (scanner[d], observed[d], bins[d]), 1)

        dropped = int((in_grid & ~is_scan & (observed < 0)).sum())
        if dropped:
            logger.info(f"Ignored {dropped} {source.value} detections of non-participant devices")

    if source is Source.APP:
        orphan = int(((hits > 0) & (scans[:, None, :] == 0)).sum())
        if orphan:
            logger.warning(f"{orphan} app detections fall in bins without a logged scan by the scanner")

    logger.info(
        f"Built {source.value} detection grid: {n} participants, {t} bins, "
        f"{int(scans.sum())} scans, {int((hits > 0).sum())} directed detections"
    )
    return DetectionGrid(source, roster, grid, hits, scans)


# --- Connection strength ---

def connection_strength(n_ij: int, n_ji: int, n_i: int, n_j: int) -> float:
    """
    Average connection strength (N_ij + N_ji) / (N_i + N_j).

    Returns 0 when neither device scanned.
    """
    for name, value in (("n_ij", n_ij), ("n_ji", n_ji), ("n_i", n_i), ("n_j", n_j)):
        if value < 0:
            raise DataIntegrityError(f"{name} must be non-negative, got {value}")
    if n_ij > n_i or n_ji > n_j:
        raise DataIntegrityError(
            f"Detections exceed scans (n_ij={n_ij}, n_i={n_i}, n_ji={n_ji}, n_j={n_j})"
        )
    if n_i + n_j == 0:
        return 0.0
    return (n_ij + n_ji) / (n_i + n_j)


def _strength_matrix(counts: np.ndarray, scans_per_dyad: np.ndarray) -> np.ndarray:
    """Vectorised connection strength; scans_per_dyad[i, j] = N_i restricted to dyad (i, j)'s universe."""
    if np.any(counts > scans_per_dyad):
        raise DataIntegrityError("Detections exceed scans in the dyad universe")
    numerator = counts + counts.T
    denominator = scans_per_dyad + scans_per_dyad.T
    with np.errstate(invalid="ignore", divide="ignore"):
        weights = np.where(denominator > 0, numerator / np.maximum(denominator, 1), 0.0)
    np.fill_diagonal(weights, 0.0)
    return weights


# --- Universes ---

def coactive_bins(timeline_i: ActivityTimeline, timeline_j: ActivityTimeline) -> np.ndarray:
    """Indices of bins in which both devices are active."""
    if len(timeline_i) != len(timeline_j):
        raise ValidationError(f"Timeline lengths differ ({len(timeline_i)} vs {len(timeline_j)})")
    return np.flatnonzero(timeline_i.active & timeline_j.active)


def simultaneous_fraction(timeline_i: ActivityTimeline, timeline_j: ActivityTimeline) -> float:
    total = len(timeline_i)
    return len(coactive_bins(timeline_i, timeline_j)) / total if total else 0.0


def activity_matrix(timelines: Mapping[str, ActivityTimeline], roster: Roster, total_bins: int) -> np.ndarray:
    """Stack timelines in roster order into an (n, bins) boolean array."""
    missing = [label for label in roster.labels if label not in timelines]
    if missing:
        raise ValidationError(f"No activity timeline for {missing}")
    rows = [timelines[label].active for label in roster.labels]
    for label, row in zip(roster.labels, rows):
        if len(row) != total_bins:
            raise ValidationError(f"Timeline of {label} has {len(row)} bins, grid has {total_bins}")
    return np.vstack(rows) if rows else np.zeros((0, total_bins), dtype=bool)


def universe_mask(grid: DetectionGrid, universe, timelines: Optional[Mapping[str, ActivityTimeline]] = None) -> np.ndarray:
    """Per-dyad universe as an (n, n, bins) boolean array."""
    universe = Universe(universe)
    n, t = grid.n, grid.grid.total_bins
    if universe is Universe.ALL_OFFICE_BINS:
        mask = np.ones((n, n, t), dtype=bool)
    elif universe is Universe.SAMPLED_BINS:
        scanned = grid.scanned
        mask = scanned[:, None, :] | scanned[None, :, :]
    else:
        if timelines is None:
            raise ValidationError("The coactive universe requires activity timelines")
        active = activity_matrix(timelines, grid.roster, t)
        mask = active[:, None, :] & active[None, :, :]
    idx = np.arange(n)
    mask[idx, idx, :] = False
    return mask


# --- Networks ---

def weighted_network(grid: DetectionGrid, timelines: Optional[Mapping[str, ActivityTimeline]] = None,
                     mode=WeightMode.TIME_FRACTION, universe=Universe.ALL_OFFICE_BINS) -> WeightedNetwork:
    """
    Weighted proximity network of one source.

    Args:
        grid: Detection grid
        timelines: Activity timelines by roster label (coactive universe, and
            scan_normalized weights on the badge source)
        mode: scan_normalized (connection strength) or time_fraction
        universe: Bins over which each dyad is evaluated

    Returns:
        WeightedNetwork over the grid's roster
    """
    mode, universe = WeightMode(mode), Universe(universe)
    if grid.n == 0:
        raise EmptyNetworkError("Cannot estimate a network on an empty roster")

    mask = universe_mask(grid, universe, timelines)

    if mode is WeightMode.TIME_FRACTION:
        hits = (grid.detected & mask).sum(axis=2)
        size = mask.sum(axis=2)
        weights = np.where(size > 0, hits / np.maximum(size, 1), 0.0)
    elif grid.source is Source.APP:
        counts = (grid.scan_detections() * mask).sum(axis=2)
        scans = np.einsum("ijt,it->ij", mask.astype(np.int64), grid.scans.astype(np.int64))
        weights = _strength_matrix(counts, scans)
    else:
        # Badges log no scans: N_i is approximated by the bins in which the badge was active
        if timelines is None:
            raise ValidationError("scan_normalized weights on badge data require activity timelines")
        directed = grid.directed
        sampled = activity_matrix(timelines, grid.roster, grid.grid.total_bins) | directed.any(axis=1)
        counts = (directed & mask).sum(axis=2)
        scans = np.einsum("ijt,it->ij", mask.astype(np.int64), sampled.astype(np.int64))
        weights = _strength_matrix(counts, scans)

    np.fill_diagonal(weights, 0.0)
    network = WeightedNetwork(grid.labels, weights)
    logger.info(
        f"Estimated {grid.source.value} network ({mode.value}, {universe.value}): "
        f"max weight {weights.max():.4f}"
    )
    return network


def scan_bins(grid: DetectionGrid) -> Dict[str, np.ndarray]:
    """Bins in which each participant issued at least one scan."""
    return {label: np.flatnonzero(grid.scans[k] > 0) for k, label in enumerate(grid.labels)}


def resampled_weights(directed: np.ndarray, drawn: np.ndarray) -> np.ndarray:
    """Time-fraction weights over drawn bins; a bin counts for i only if i's own draw holds it."""
    own = drawn[:, None, :] & directed
    hits = (own | own.transpose(1, 0, 2)).sum(axis=2)
    size = (drawn[:, None, :] | drawn[None, :, :]).sum(axis=2)
    weights = np.where(size > 0, hits / np.maximum(size, 1), 0.0)
    np.fill_diagonal(weights, 0.0)
    return weights


def resample_network(grid: DetectionGrid, required_samples: int, rng_seed: int,
                     stream: int = 0) -> Tuple[WeightedNetwork, Tuple[str, ...]]:
    """
    Network estimated from a fixed number of random scan-bins per participant.

    Participants with fewer than `required_samples` scan-bins are excluded;
    every other participant contributes exactly `required_samples` bins drawn
    uniformly without replacement from its own stream (seed, stream, position).

    Returns:
        Tuple of (WeightedNetwork over the retained roster, retained labels)
    """
    if required_samples < 1:
        raise ValidationError(f"required_samples must be >= 1, got {required_samples}")
    keep = [k for k in range(grid.n) if int((grid.scans[k] > 0).sum()) >= required_samples]
    if not keep:
        raise EmptyNetworkError(
            f"No participant has {required_samples} scan-bins "
            f"(maximum {int((grid.scans > 0).sum(axis=1).max(initial=0))})"
        )
    labels = tuple(grid.labels[k] for k in keep)
    directed = grid.directed[np.ix_(keep, keep)]
    drawn = draw_scan_bins(grid, keep, required_samples, rng_seed, stream)
    return WeightedNetwork(labels, resampled_weights(directed, drawn)), labels


def draw_scan_bins(grid: DetectionGrid, keep: Sequence[int], required_samples: int,
                    rng_seed: int, stream: int) -> np.ndarray:
    drawn = np.zeros((len(keep), grid.grid.total_bins), dtype=bool)
    for row, k in enumerate(keep):
        candidates = np.flatnonzero(grid.scans[k] > 0)
        rng = generator(rng_seed, stream, k)
        drawn[row, rng.choice(candidates, size=required_samples, replace=False)] = True
    return drawn


# --- Descriptive statistics ---

def scan_statistics(grid: DetectionGrid) -> Tuple[pd.DataFrame, pd.DataFrame, Dict]:
    """
    Scanning behaviour of an app detection grid.

    Returns:
        Tuple of (per-device frame participant/platform/scans/scan_bins/
        adherence/scans_per_hour, per-dyad frame i/j/scans_per_hour, summary
        with per-platform mean/sd scan rates and the share of dyads scanned at
        least hourly and at least every 15 minutes)
    """
    hours = grid.grid.total_bins * grid.grid.bin_seconds / 3600.0
    scans = grid.scans.sum(axis=1).astype(float)
    scanned_bins = (grid.scans > 0).sum(axis=1)
    total = max(grid.grid.total_bins, 1)
    rate = scans / hours if hours else np.zeros_like(scans)

    devices = pd.DataFrame({
        "participant": list(grid.labels),
        "platform": [p.value for p in grid.roster.platforms],
        "scans": scans.astype(int),
        "scan_bins": scanned_bins,
        "adherence": scanned_bins / total,
        "scans_per_hour": rate,
    })

    rows, cols = np.triu_indices(grid.n, k=1)
    dyad_rate = rate[rows] + rate[cols]
    dyads = pd.DataFrame({
        "i": [grid.labels[k] for k in rows],
        "j": [grid.labels[k] for k in cols],
        "scans_per_hour": dyad_rate,
    })

    summary = {"platforms": {}}
    for platform, group in devices.groupby("platform", sort=True):
        values = group["scans_per_hour"].to_numpy()
        summary["platforms"][platform] = {
            "n": int(len(values)),
            "mean_scans_per_hour": float(values.mean()),
            "sd_scans_per_hour": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
            "mean_adherence": float(group["adherence"].mean()),
        }
    summary["dyads_hourly"] = float((dyad_rate >= 1.0).mean()) if len(dyad_rate) else 0.0
    summary["dyads_quarter_hourly"] = float((dyad_rate >= 4.0).mean()) if len(dyad_rate) else 0.0
    return devices, dyads, summary


def simultaneous_activity(timelines: Mapping[str, ActivityTimeline], roster: Roster) -> Tuple[pd.DataFrame, Dict]:
    """Per-dyad co-active fraction and its mean/sd over dyads."""
    labels = [p.label for p in roster if p.label in timelines and timelines[p.label].device]
    records = []
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            records.append({
                "i": labels[a],
                "j": labels[b],
                "coactive_fraction": simultaneous_fraction(timelines[labels[a]], timelines[labels[b]]),
            })
    frame = pd.DataFrame(records, columns=["i", "j", "coactive_fraction"])
    values = frame["coactive_fraction"].to_numpy(dtype=float)
    summary = {
        "dyads": int(len(values)),
        "mean": float(values.mean()) if len(values) else 0.0,
        "sd": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
    }
    return frame, summary
