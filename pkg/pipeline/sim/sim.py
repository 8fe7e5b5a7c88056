"""
Co-location and scanning simulator.

Generates ground-truth contacts between participants and the app/badge logs a
study would have recorded, in the ingest format. It is an oracle for the
pipeline, not a model of human behaviour.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from common.config import (
    BADGE_WEAR_PROBABILITY, PLATFORM_A_ADHERENCE, PLATFORM_B_ADHERENCE
)
from common.model import (
    EventKind, Participant, Platform, Roster, ScanEvent, Source, TimeGrid, WeightedNetwork
)
from common.utils.errors import ConfigError
from common.utils.rng_utils import generator, require_seed
from pipeline.ingest.ingest import hash_id

logger = logging.getLogger("proxnet")

# Independent random streams per process
CONTACT_STREAM = 1
APP_STREAM = 2
BADGE_STREAM = 3
OFF_WINDOW_STREAM = 4
IDENTITY_STREAM = 5
TIMING_STREAM = 6


def _probability(name, value):
    if not 0.0 <= float(value) <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")
    return float(value)


def _rate_range(name, value):
    low, high = (float(v) for v in value)
    _probability(f"{name}[0]", low)
    _probability(f"{name}[1]", high)
    if low > high:
        raise ConfigError(f"{name} range is reversed: {value}")
    return low, high


@dataclass
class SimConfig:
    """Simulation parameters; probabilities are per bin unless noted."""
    n_participants: int = 21
    platform_mix: Dict[str, int] = field(default_factory=lambda: {"platform_A": 9, "platform_B": 12})
    grid: TimeGrid = field(default_factory=TimeGrid.study)
    on_rate: Tuple[float, float] = (0.005, 0.05)
    off_rate: Tuple[float, float] = (0.1, 0.5)
    adherence: Dict[str, float] = field(default_factory=lambda: {
        "platform_A": PLATFORM_A_ADHERENCE, "platform_B": PLATFORM_B_ADHERENCE
    })
    q_det: float = 0.8
    q_spur: float = 0.0
    adjacency_fraction: float = 0.1
    badge_adherence: float = 1.0
    badge_q_det: float = 0.5
    badge_q_spur: float = 0.0
    badge_wear_probability: float = BADGE_WEAR_PROBABILITY  # per participant-day
    off_window_probability: float = 0.0  # per device-day
    off_window_bins: int = 0
    app_telemetry: bool = True
    salt: str = "proxnet-sim"
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.grid, dict):
            self.grid = TimeGrid.from_dict(self.grid)
        if int(self.n_participants) != self.n_participants or self.n_participants < 2:
            raise ConfigError(f"n_participants must be an integer >= 2, got {self.n_participants}")
        self.n_participants = int(self.n_participants)

        mix = {}
        for key, count in self.platform_mix.items():
            platform = Platform.parse(key)
            if platform is Platform.BADGE:
                raise ConfigError("platform_mix takes phone platforms only")
            if int(count) != count or count < 0:
                raise ConfigError(f"platform_mix[{key}] must be a non-negative integer")
            mix[platform.value] = int(count)
        if sum(mix.values()) != self.n_participants:
            raise ConfigError(f"platform_mix {mix} does not sum to n_participants={self.n_participants}")
        self.platform_mix = mix

        self.on_rate = _rate_range("on_rate", self.on_rate)
        self.off_rate = _rate_range("off_rate", self.off_rate)
        if self.on_rate[1] + self.off_rate[1] == 0:
            raise ConfigError("on_rate and off_rate cannot both be zero")
        self.adherence = {Platform.parse(k).value: _probability(f"adherence[{k}]", v) for k, v in self.adherence.items()}
        for platform, count in mix.items():
            if count and platform not in self.adherence:
                raise ConfigError(f"No adherence given for {platform}")
        for name in ("q_det", "q_spur", "adjacency_fraction", "badge_adherence", "badge_q_det",
                     "badge_q_spur", "badge_wear_probability", "off_window_probability"):
            setattr(self, name, _probability(name, getattr(self, name)))
        if int(self.off_window_bins) != self.off_window_bins or self.off_window_bins < 0:
            raise ConfigError(f"off_window_bins must be a non-negative integer, got {self.off_window_bins}")
        self.off_window_bins = int(self.off_window_bins)
        self.seed = require_seed(self.seed)

    @classmethod
    def from_dict(cls, data: Dict) -> "SimConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown simulator config keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("on_rate", "off_rate"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> Dict:
        document = asdict(self)
        document["grid"] = self.grid.to_dict()
        document["on_rate"] = list(self.on_rate)
        document["off_rate"] = list(self.off_rate)
        return document


@dataclass(eq=False)
class GroundTruth:
    """What really happened in a simulation run."""
    roster: Roster
    contact: np.ndarray          # (n, n, bins) symmetric
    true_weights: WeightedNetwork
    scan_schedule: np.ndarray    # (n, bins) executed app scans
    app_active: np.ndarray       # (n, bins)
    badge_worn: np.ndarray       # (n, bins)
    adjacent: np.ndarray         # (n, n) room-neighbour dyads


def _mac(rng: np.random.Generator) -> str:
    return ":".join(f"{b:02x}" for b in rng.integers(0, 256, size=6))


def _roster(config: SimConfig) -> Roster:
    rng = generator(config.seed, IDENTITY_STREAM)
    width = max(2, len(str(config.n_participants)))
    platforms = []
    for platform in (Platform.PLATFORM_A, Platform.PLATFORM_B):
        platforms += [platform] * config.platform_mix.get(platform.value, 0)
    participants = []
    for k, platform in enumerate(platforms):
        participants.append(Participant(
            label=f"P{k + 1:0{width}d}",
            app_id=hash_id(_mac(rng), config.salt),
            badge_id=hash_id(_mac(rng), config.salt),
            platform=platform,
        ))
    return Roster(participants)


def _contact_process(config: SimConfig, m: int, total: int) -> Tuple[np.ndarray, np.ndarray]:
    """Two-state Markov chain per dyad; returns (contact (m, bins), adjacent (m,))."""
    rng = generator(config.seed, CONTACT_STREAM)
    on = rng.uniform(*config.on_rate, size=m)
    off = rng.uniform(*config.off_rate, size=m)
    rates = on + off
    stationary = np.divide(on, rates, out=np.zeros(m), where=rates > 0)
    adjacent = rng.random(m) < config.adjacency_fraction

    contact = np.zeros((m, total), dtype=bool)
    if total == 0:
        return contact, adjacent
    state = rng.random(m) < stationary
    contact[:, 0] = state
    for t in range(1, total):
        u = rng.random(m)
        state = np.where(state, u >= off, u < on)
        contact[:, t] = state
    return contact, adjacent


def _daily_mask(config: SimConfig, probability: float, n: int, stream: int) -> np.ndarray:
    """(n, bins) mask of devices switched on for whole days with the given probability."""
    rng = generator(config.seed, stream)
    days = rng.random((n, len(config.grid.included_days))) < probability
    return days[:, config.grid.bin_days()] if config.grid.total_bins else np.zeros((n, 0), dtype=bool)


def _off_windows(config: SimConfig, n: int) -> np.ndarray:
    """(n, bins) mask, True while the app runs."""
    grid = config.grid
    on = np.ones((n, grid.total_bins), dtype=bool)
    if config.off_window_probability == 0 or config.off_window_bins == 0:
        return on
    rng = generator(config.seed, OFF_WINDOW_STREAM)
    per_day = grid.daily_bins
    for day in range(len(grid.included_days)):
        hit = rng.random(n) < config.off_window_probability
        starts = rng.integers(0, per_day, size=n)
        for k in np.flatnonzero(hit):
            begin = day * per_day + starts[k]
            end = min(begin + config.off_window_bins, (day + 1) * per_day)
            on[k, begin:end] = False
    return on


def _pair_detections(rng, scanning, visible, contact, adjacent, rows, cols, q_det, q_spur):
    """Directed detections (m, 2) for one bin: column 0 is i->j, column 1 is j->i."""
    probability = np.where(contact, q_det, np.where(adjacent, q_spur, 0.0))
    u = rng.random((len(rows), 2))
    forward = scanning[rows] & visible[cols] & (u[:, 0] < probability)
    backward = scanning[cols] & visible[rows] & (u[:, 1] < probability)
    return forward, backward


def simulate(config: SimConfig) -> Tuple[List[ScanEvent], List[ScanEvent], GroundTruth]:
    """
    Run one simulation.

    Per bin every dyad's contact chain advances; each device whose app is
    running executes its scheduled scan with its platform's adherence; an
    executed scan by i detects j with probability q_det when they are in
    contact, or q_spur when they are room neighbours. Badges behave the same on
    worn days with their own probabilities and log no scan rows. Telemetry is
    logged for every bin a device runs.

    Returns:
        Tuple of (app events, badge events, GroundTruth)
    """
    grid = config.grid
    roster = _roster(config)
    n, total = len(roster), grid.total_bins
    rows, cols = np.triu_indices(n, k=1)

    contact_pairs, adjacent_pairs = _contact_process(config, len(rows), total)
    app_on = _off_windows(config, n)
    badge_on = _daily_mask(config, config.badge_wear_probability, n, BADGE_STREAM)

    app_rng = generator(config.seed, APP_STREAM)
    badge_rng = generator(config.seed, BADGE_STREAM, 1)
    timing_rng = generator(config.seed, TIMING_STREAM)

    adherence = np.array([config.adherence.get(p.value, 0.0) for p in roster.platforms])
    app_ids = roster.device_ids(Source.APP)
    badge_ids = roster.device_ids(Source.BADGE)
    starts = [grid.bin_interval(t)[0] for t in range(total)]

    schedule = np.zeros((n, total), dtype=np.int32)
    app_log, badge_log = [], []
    for t in range(total):
        contact = contact_pairs[:, t]
        offsets = timing_rng.integers(0, grid.bin_seconds, size=(n, 2))

        scanning = app_on[:, t] & (app_rng.random(n) < adherence)
        schedule[:, t] = scanning
        forward, backward = _pair_detections(
            app_rng, scanning, app_on[:, t], contact, adjacent_pairs, rows, cols, config.q_det, config.q_spur
        )
        app_log += _bin_events(Source.APP, app_ids, starts[t], offsets, app_on[:, t] if config.app_telemetry else None,
                               scanning, True, rows, cols, forward, backward)

        badge_scanning = badge_on[:, t] & (badge_rng.random(n) < config.badge_adherence)
        forward, backward = _pair_detections(
            badge_rng, badge_scanning, badge_on[:, t], contact, adjacent_pairs, rows, cols,
            config.badge_q_det, config.badge_q_spur
        )
        badge_log += _bin_events(Source.BADGE, badge_ids, starts[t], offsets, badge_on[:, t],
                                 badge_scanning, False, rows, cols, forward, backward)

    contact = np.zeros((n, n, total), dtype=bool)
    contact[rows, cols, :] = contact_pairs
    contact[cols, rows, :] = contact_pairs
    adjacent = np.zeros((n, n), dtype=bool)
    adjacent[rows, cols] = adjacent[cols, rows] = adjacent_pairs

    truth = GroundTruth(
        roster=roster,
        contact=contact,
        true_weights=WeightedNetwork(roster.labels, contact.mean(axis=2) if total else np.zeros((n, n))),
        scan_schedule=schedule,
        app_active=app_on,
        badge_worn=badge_on,
        adjacent=adjacent,
    )
    app_log.sort(key=ScanEvent.sort_key)
    badge_log.sort(key=ScanEvent.sort_key)
    logger.info(
        f"Simulated {n} participants over {total} bins: {len(app_log)} app events, "
        f"{len(badge_log)} badge events, mean contact {contact_pairs.mean() if total else 0:.4f}"
    )
    return app_log, badge_log, truth


def _bin_events(source, ids, start, offsets, running, scanning, log_scans, rows, cols, forward, backward):
    events = []
    if running is not None:
        for k in np.flatnonzero(running):
            events.append(ScanEvent(start + pd.Timedelta(seconds=int(offsets[k, 1])), source,
                                    EventKind.TELEMETRY, ids[k]))
    scan_time = {k: start + pd.Timedelta(seconds=int(offsets[k, 0])) for k in np.flatnonzero(scanning)}
    if log_scans:
        for k, ts in scan_time.items():
            events.append(ScanEvent(ts, source, EventKind.SCAN, ids[k]))
    for scanner, observed, found in ((rows, cols, forward), (cols, rows, backward)):
        for p in np.flatnonzero(found):
            i, j = scanner[p], observed[p]
            events.append(ScanEvent(scan_time[i], source, EventKind.DETECT, ids[i], ids[j]))
    return events


def truth_network(truth: GroundTruth) -> WeightedNetwork:
    """Ground-truth contact fractions as a weighted network."""
    return truth.true_weights


def realized_scan_rates(truth: GroundTruth, grid: TimeGrid) -> Dict[str, float]:
    """Mean executed scans per office hour, by platform."""
    hours = grid.total_bins * grid.bin_seconds / 3600.0
    rates = truth.scan_schedule.sum(axis=1) / hours if hours else np.zeros(len(truth.roster))
    platforms = np.array([p.value for p in truth.roster.platforms])
    return {p: float(rates[platforms == p].mean()) for p in sorted(set(platforms))}
