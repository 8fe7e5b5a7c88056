"""
Identifiers, participants and scan-log events.
"""
import enum
import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import pandas as pd

from common.utils.errors import DataIntegrityError, ValidationError

logger = logging.getLogger("proxnet")

_HEX = re.compile(r"^[0-9a-f]+$")


class DeviceId(str):
    """Hashed device identifier: a lowercase hexadecimal digest."""

    def __new__(cls, value):
        value = str(value).strip().lower()
        if not value or not _HEX.match(value):
            raise ValidationError(f"Device id must be a non-empty hexadecimal digest, got {value!r}")
        return super().__new__(cls, value)


class Source(str, enum.Enum):
    APP = "app"
    BADGE = "badge"


class EventKind(str, enum.Enum):
    SCAN = "scan"
    DETECT = "detect"
    TELEMETRY = "telemetry"


class Platform(str, enum.Enum):
    PLATFORM_A = "platform_A"  # Android-like scanning
    PLATFORM_B = "platform_B"  # iOS-like scanning
    BADGE = "badge"

    @classmethod
    def parse(cls, value) -> "Platform":
        aliases = {"android": cls.PLATFORM_A, "ios": cls.PLATFORM_B, "iphone": cls.PLATFORM_B}
        key = str(value).strip()
        if key.lower() in aliases:
            return aliases[key.lower()]
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"Unknown platform {value!r}")


@dataclass(frozen=True)
class ScanEvent:
    """One log record: a scan attempt, a detection, or a telemetry heartbeat."""
    timestamp: pd.Timestamp
    source: Source
    kind: EventKind
    scanner: DeviceId
    observed: Optional[DeviceId] = None

    def __post_init__(self):
        ts = pd.Timestamp(self.timestamp)
        ts = ts.tz_localize("UTC") if ts.tzinfo is None else ts.tz_convert("UTC")
        object.__setattr__(self, "timestamp", ts)
        object.__setattr__(self, "source", Source(self.source))
        object.__setattr__(self, "kind", EventKind(self.kind))
        object.__setattr__(self, "scanner", DeviceId(self.scanner))
        if self.observed is not None and self.observed != "":
            object.__setattr__(self, "observed", DeviceId(self.observed))
        else:
            object.__setattr__(self, "observed", None)

        if (self.kind is EventKind.DETECT) != (self.observed is not None):
            raise ValidationError(f"observed must be set exactly for detect events ({self.kind.value})")
        if self.observed is not None and self.observed == self.scanner:
            raise ValidationError(f"Device {self.scanner} cannot observe itself")

    def sort_key(self):
        return (self.timestamp.value, self.source.value, self.kind.value, str(self.scanner), str(self.observed or ""))

    def as_row(self) -> Dict[str, str]:
        return {
            "ts": self.timestamp.strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
            "source": self.source.value,
            "kind": self.kind.value,
            "scanner": str(self.scanner),
            "observed": str(self.observed) if self.observed is not None else "",
        }


@dataclass(frozen=True)
class Participant:
    """A study participant and the ids of their devices."""
    label: str
    app_id: Optional[DeviceId]
    badge_id: Optional[DeviceId]
    platform: Platform

    def device_id(self, source: Source) -> Optional[DeviceId]:
        return self.app_id if Source(source) is Source.APP else self.badge_id


class Roster:
    """Ordered participant list with per-source id lookups."""

    def __init__(self, participants: Iterable[Participant]):
        self.participants: Tuple[Participant, ...] = tuple(participants)
        self._index = {Source.APP: {}, Source.BADGE: {}}
        labels = set()
        for k, person in enumerate(self.participants):
            if person.label in labels:
                raise DataIntegrityError(f"Duplicate participant label {person.label!r} in roster")
            labels.add(person.label)
            for source in Source:
                device = person.device_id(source)
                if device is None:
                    continue
                if device in self._index[source]:
                    other = self.participants[self._index[source][device]].label
                    raise DataIntegrityError(
                        f"Roster id collision: {source.value} id {device} used by {other!r} and {person.label!r}"
                    )
                self._index[source][device] = k

    def __len__(self):
        return len(self.participants)

    def __iter__(self):
        return iter(self.participants)

    def __eq__(self, other):
        return isinstance(other, Roster) and self.participants == other.participants

    def __hash__(self):
        return hash(self.participants)

    def __repr__(self):
        return f"Roster({[p.label for p in self.participants]})"

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(p.label for p in self.participants)

    @property
    def platforms(self) -> Tuple[Platform, ...]:
        return tuple(p.platform for p in self.participants)

    def index_of(self, source: Source, device: str) -> Optional[int]:
        """Roster position of a device id, or None for non-participants."""
        return self._index[Source(source)].get(device)

    def device_ids(self, source: Source) -> Tuple[Optional[DeviceId], ...]:
        return tuple(p.device_id(source) for p in self.participants)

    def subset(self, labels: Iterable[str]) -> "Roster":
        wanted = set(labels)
        return Roster(p for p in self.participants if p.label in wanted)


__all__ = ["DeviceId", "Source", "EventKind", "Platform", "ScanEvent", "Participant", "Roster"]
