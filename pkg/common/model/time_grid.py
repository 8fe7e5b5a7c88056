"""
Office-hours time grid.

All logs are stored in UTC; the grid carries an explicit IANA zone and converts
at binning time. Bins are half-open, [t, t + bin_seconds).
"""
import datetime as dt
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Sequence, Tuple
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

import numpy as np
import pandas as pd

from common.config import (
    BIN_SECONDS, STUDY_DAILY_END, STUDY_DAILY_START, STUDY_DAYS_OF_WEEK,
    STUDY_END_DATE, STUDY_START_DATE, STUDY_TIMEZONE
)
from common.utils.errors import ConfigError, ValidationError

logger = logging.getLogger("proxnet")


def _parse_date(value):
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(str(value))
    except ValueError as e:
        raise ConfigError(f"Invalid date {value!r}: {e}")


def _parse_time(value):
    if isinstance(value, dt.time):
        return value
    try:
        return dt.time.fromisoformat(str(value))
    except ValueError as e:
        raise ConfigError(f"Invalid clock time {value!r}: {e}")


def _seconds_of(t: dt.time) -> int:
    return t.hour * 3600 + t.minute * 60 + t.second


def load_zone(name: str) -> ZoneInfo:
    """Resolve an IANA zone name, raising ConfigError when unknown."""
    try:
        return ZoneInfo(name)
    except (ZoneInfoNotFoundError, ValueError, TypeError) as e:
        raise ConfigError(f"Invalid timezone name {name!r}: {e}")


@dataclass(frozen=True)
class TimeGrid:
    """Office-hours bin structure: included days x daily slots of bin_seconds."""
    start_date: dt.date
    end_date: dt.date
    days_of_week: frozenset = field(default_factory=lambda: frozenset(STUDY_DAYS_OF_WEEK))
    daily_start: dt.time = dt.time(9, 0)
    daily_end: dt.time = dt.time(17, 0)
    timezone: str = STUDY_TIMEZONE
    bin_seconds: int = BIN_SECONDS

    def __post_init__(self):
        object.__setattr__(self, "start_date", _parse_date(self.start_date))
        object.__setattr__(self, "end_date", _parse_date(self.end_date))
        object.__setattr__(self, "daily_start", _parse_time(self.daily_start))
        object.__setattr__(self, "daily_end", _parse_time(self.daily_end))
        object.__setattr__(self, "days_of_week", frozenset(int(d) for d in self.days_of_week))

        if any(d < 0 or d > 6 for d in self.days_of_week):
            raise ConfigError(f"Weekdays must be in 0..6 (Monday=0), got {sorted(self.days_of_week)}")
        if self.end_date < self.start_date:
            raise ConfigError(f"end_date {self.end_date} precedes start_date {self.start_date}")
        if not isinstance(self.bin_seconds, (int, np.integer)) or self.bin_seconds <= 0:
            raise ConfigError(f"bin_seconds must be a positive integer, got {self.bin_seconds!r}")

        window = _seconds_of(self.daily_end) - _seconds_of(self.daily_start)
        if window <= 0:
            raise ConfigError(f"daily_end {self.daily_end} must be after daily_start {self.daily_start}")
        if window % self.bin_seconds != 0:
            raise ConfigError(
                f"bin_seconds={self.bin_seconds} does not evenly divide the {window} s daily window"
            )
        load_zone(self.timezone)

    @classmethod
    def study(cls) -> "TimeGrid":
        """The four-week Mon-Fri 9am-5pm study grid."""
        return cls(
            start_date=STUDY_START_DATE,
            end_date=STUDY_END_DATE,
            days_of_week=frozenset(STUDY_DAYS_OF_WEEK),
            daily_start=STUDY_DAILY_START,
            daily_end=STUDY_DAILY_END,
            timezone=STUDY_TIMEZONE,
            bin_seconds=BIN_SECONDS,
        )

    @classmethod
    def from_dict(cls, data: Dict) -> "TimeGrid":
        """Build a grid from a JSON-style mapping; missing keys fall back to the study grid."""
        known = {"start_date", "end_date", "days_of_week", "daily_start", "daily_end", "timezone", "bin_seconds"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown grid keys: {sorted(unknown)}")
        return cls(
            start_date=data.get("start_date", STUDY_START_DATE),
            end_date=data.get("end_date", STUDY_END_DATE),
            days_of_week=frozenset(data.get("days_of_week", STUDY_DAYS_OF_WEEK)),
            daily_start=data.get("daily_start", STUDY_DAILY_START),
            daily_end=data.get("daily_end", STUDY_DAILY_END),
            timezone=data.get("timezone", STUDY_TIMEZONE),
            bin_seconds=int(data.get("bin_seconds", BIN_SECONDS)),
        )

    def to_dict(self) -> Dict:
        return {
            "start_date": self.start_date.isoformat(),
            "end_date": self.end_date.isoformat(),
            "days_of_week": sorted(self.days_of_week),
            "daily_start": self.daily_start.strftime("%H:%M:%S"),
            "daily_end": self.daily_end.strftime("%H:%M:%S"),
            "timezone": self.timezone,
            "bin_seconds": int(self.bin_seconds),
        }

    @cached_property
    def zone(self) -> ZoneInfo:
        return load_zone(self.timezone)

    @cached_property
    def included_days(self) -> Tuple[dt.date, ...]:
        n_days = (self.end_date - self.start_date).days + 1
        days = (self.start_date + dt.timedelta(days=k) for k in range(n_days))
        return tuple(d for d in days if d.weekday() in self.days_of_week)

    @cached_property
    def _day_index(self) -> Dict[dt.date, int]:
        return {d: k for k, d in enumerate(self.included_days)}

    @property
    def daily_bins(self) -> int:
        return (_seconds_of(self.daily_end) - _seconds_of(self.daily_start)) // self.bin_seconds

    @property
    def total_bins(self) -> int:
        return len(self.included_days) * self.daily_bins

    @property
    def bins_per_hour(self) -> float:
        return 3600.0 / self.bin_seconds

    def bin_of(self, timestamp) -> Optional[int]:
        """Global 0-based bin index of a UTC instant, or None outside office hours."""
        ts = pd.Timestamp(timestamp)
        if ts.tzinfo is None:
            ts = ts.tz_localize("UTC")
        local = ts.tz_convert(self.zone)
        day = self._day_index.get(local.date())
        if day is None:
            return None
        seconds = local.hour * 3600 + local.minute * 60 + local.second + local.microsecond / 1e6
        offset = seconds - _seconds_of(self.daily_start)
        if offset < 0 or seconds >= _seconds_of(self.daily_end):
            return None
        return day * self.daily_bins + int(offset // self.bin_seconds)

    def bins_of(self, timestamps: Sequence) -> np.ndarray:
        """Vectorised bin_of; returns -1 where the instant is outside the grid."""
        ts = pd.to_datetime(pd.Series(timestamps, dtype="object"), utc=True)
        if len(ts) == 0:
            return np.zeros(0, dtype=np.int64)
        local = ts.dt.tz_convert(self.zone)
        day = local.dt.date.map(self._day_index)
        seconds = (
            local.dt.hour * 3600 + local.dt.minute * 60 + local.dt.second
            + local.dt.microsecond / 1e6
        ).to_numpy(dtype=float)
        offset = seconds - _seconds_of(self.daily_start)
        inside = day.notna().to_numpy() & (offset >= 0) & (seconds < _seconds_of(self.daily_end))

        bins = np.full(len(ts), -1, dtype=np.int64)
        day_values = day.to_numpy(dtype=float, na_value=0.0).astype(np.int64)
        slots = np.floor_divide(offset, self.bin_seconds).astype(np.int64)
        bins[inside] = day_values[inside] * self.daily_bins + slots[inside]
        return bins

    def bin_interval(self, bin_index: int) -> Tuple[pd.Timestamp, pd.Timestamp]:
        """Half-open UTC interval [start, end) covered by a bin."""
        if not 0 <= bin_index < self.total_bins:
            raise ValidationError(f"Bin index {bin_index} outside 0..{self.total_bins - 1}")
        day = self.included_days[bin_index // self.daily_bins]
        slot = bin_index % self.daily_bins
        start_local = dt.datetime.combine(day, self.daily_start, tzinfo=self.zone)
        start_local += dt.timedelta(seconds=slot * self.bin_seconds)
        start = pd.Timestamp(start_local).tz_convert("UTC")
        return start, start + pd.Timedelta(seconds=self.bin_seconds)

    def bin_days(self) -> np.ndarray:
        """Included-day index for every bin."""
        return np.repeat(np.arange(len(self.included_days)), self.daily_bins)


def bin_of(timestamp, grid: TimeGrid) -> Optional[int]:
    """Map a UTC instant to its global bin index (None outside office hours)."""
    return grid.bin_of(timestamp)


def total_bins(grid: TimeGrid) -> int:
    """Number of (included day, daily slot) pairs."""
    return grid.total_bins


__all__ = ["TimeGrid", "bin_of", "total_bins", "load_zone"]
