"""
Shared fixtures: small grids, rosters and event builders.
"""
import numpy as np
import pandas as pd
import pytest

from common.model import EventKind, Participant, Platform, Roster, ScanEvent, Source, TimeGrid
from pipeline.estimate.estimate import DetectionGrid
from pipeline.ingest.ingest import hash_id


@pytest.fixture
def small_grid():
    """Two UTC days of one office hour: 24 five-minute bins."""
    return TimeGrid(
        start_date="2015-08-17",
        end_date="2015-08-18",
        days_of_week={0, 1, 2, 3, 4},
        daily_start="09:00",
        daily_end="10:00",
        timezone="UTC",
        bin_seconds=300,
    )


def make_roster(n, platforms=None):
    platforms = platforms or [Platform.PLATFORM_A] * n
    return Roster(
        Participant(
            label=f"P{k + 1}",
            app_id=hash_id(f"aa:00:00:00:00:{k + 1:02x}", ""),
            badge_id=hash_id(f"bb:00:00:00:00:{k + 1:02x}", ""),
            platform=platforms[k],
        )
        for k in range(n)
    )


@pytest.fixture
def roster3():
    return make_roster(3, [Platform.PLATFORM_A, Platform.PLATFORM_B, Platform.PLATFORM_B])


def at(grid, bin_index, seconds=10):
    """An instant inside a bin."""
    return grid.bin_interval(bin_index)[0] + pd.Timedelta(seconds=seconds)


def scan(grid, roster, who, bin_index, source=Source.APP, seconds=10):
    device = roster.participants[who].device_id(source)
    return ScanEvent(at(grid, bin_index, seconds), source, EventKind.SCAN, device)


def detect(grid, roster, who, seen, bin_index, source=Source.APP, seconds=10):
    scanner = roster.participants[who].device_id(source)
    observed = roster.participants[seen].device_id(source)
    return ScanEvent(at(grid, bin_index, seconds), source, EventKind.DETECT, scanner, observed)


def telemetry(grid, roster, who, bin_index, source=Source.APP, seconds=20):
    device = roster.participants[who].device_id(source)
    return ScanEvent(at(grid, bin_index, seconds), source, EventKind.TELEMETRY, device)


def detection_grid(grid, roster, hits, scans, source=Source.APP):
    """DetectionGrid from dense arrays."""
    return DetectionGrid(source, roster, grid, np.asarray(hits, dtype=np.uint16), np.asarray(scans, dtype=np.int32))


def write_csv(path, text):
    path.write_text(text.lstrip("\n"), encoding="utf-8")
    return path
