"""
Ingest logic: identifier hashing, roster/scan-log/survey parsing and
per-device activity timelines.
"""
import csv
import hashlib
import io
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from common.config import ACTIVITY_GAP_TOLERANCE, MAC_SEPARATORS, MAX_NOMINEES
from common.model import (
    ActivityTimeline, DeviceId, DirectedSurveyNetwork, EventKind, Participant,
    Platform, Roster, ScanEvent, Source, TimeGrid
)
from common.utils.errors import ParseError, ProxnetError, ValidationError
from common.utils.file_utils import atomic_write_text

logger = logging.getLogger("proxnet")

LOG_COLUMNS = ("ts", "source", "kind", "scanner", "observed")
ROSTER_COLUMNS = ("participant", "app_id", "badge_id", "platform")
SURVEY_RESPONDENT = "respondent"


@dataclass
class RejectionReport:
    """What happened to the rows of one log file."""
    path: str
    rows: int = 0
    accepted: int = 0
    duplicates: int = 0
    rejected: List[Tuple[int, str]] = field(default_factory=list)  # (line, reason)

    @property
    def rejected_count(self) -> int:
        return len(self.rejected)

    def to_dict(self) -> Dict:
        return {
            "path": self.path,
            "rows": self.rows,
            "accepted": self.accepted,
            "duplicates": self.duplicates,
            "rejected": [{"line": line, "reason": reason} for line, reason in self.rejected],
        }


@dataclass(frozen=True)
class SurveyResponse:
    """One respondent's resolved nominations (roster labels)."""
    respondent: str
    nominees: Tuple[str, ...]


@dataclass
class SurveyReport:
    path: str
    respondents: int = 0
    unresolved: List[Tuple[int, str]] = field(default_factory=list)  # (line, name)
    duplicates: int = 0
    self_nominations: int = 0

    @property
    def warning_count(self) -> int:
        return len(self.unresolved) + self.duplicates + self.self_nominations

    def to_dict(self) -> Dict:
        return {
            "path": self.path,
            "respondents": self.respondents,
            "unresolved": [{"line": line, "name": name} for line, name in self.unresolved],
            "duplicates": self.duplicates,
            "self_nominations": self.self_nominations,
        }


# --- Identifiers ---

def normalize_identifier(raw_identifier: str) -> str:
    """Strip separators and whitespace and lowercase (AA:BB:.. -> aabb..)."""
    text = str(raw_identifier).strip().lower()
    return "".join(ch for ch in text if ch not in MAC_SEPARATORS)


def hash_id(raw_identifier: str, salt: str) -> DeviceId:
    """
    Salted one-way SHA-256 signature of a raw device identifier.

    Args:
        raw_identifier: Raw id, e.g. a 12-hex-digit MAC address
        salt: Study-wide salt

    Returns:
        64-character lowercase hexadecimal DeviceId
    """
    normalized = normalize_identifier(raw_identifier) if raw_identifier is not None else ""
    if not normalized:
        raise ValidationError("Cannot hash an empty identifier")
    digest = hashlib.sha256((str(salt) + normalized).encode("utf-8")).hexdigest()
    return DeviceId(digest)


# --- Roster ---

def _read_text(path: Path) -> str:
    # Undecodable bytes survive as lone surrogates so the bad row can be located
    try:
        return path.read_bytes().decode("utf-8", errors="surrogateescape")
    except OSError as e:
        raise ParseError(f"Unreadable file: {e}", path=path)


def _undecodable(text: str) -> bool:
    return any("\udc80" <= ch <= "\udcff" for ch in text)


def _read_csv_rows(path, required: Sequence[str], lenient: bool = False):
    """
    Yield (line_number, row) from a headed CSV file, checking the header.

    A row holding invalid UTF-8 raises ParseError, or is yielded as a
    ValueError when `lenient` is set so the caller can reject just that row.
    """
    path = Path(path)
    text = _read_text(path)

    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    if _undecodable("".join(header)):
        raise ParseError("invalid UTF-8 in header", path=path, line=1)
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"Missing columns {missing} (header: {header})", path=path, line=1)
    reader.fieldnames = header
    for row in reader:
        cells = [v for v in row.values() if isinstance(v, str)] + list(row.get(None) or [])
        if _undecodable("".join(cells)):
            if not lenient:
                raise ParseError("invalid UTF-8", path=path, line=reader.line_num)
            yield reader.line_num, ValueError("invalid UTF-8")
            continue
        yield reader.line_num, row


def load_roster(path, salt: Optional[str] = None) -> Roster:
    """
    Read a roster CSV `participant,app_id,badge_id,platform`.

    Args:
        path: Roster file
        salt: When given, ids are raw identifiers and get hashed with hash_id

    Returns:
        Roster in file order
    """
    participants = []
    for line, row in _read_csv_rows(path, ROSTER_COLUMNS):
        try:
            label = (row.get("participant") or "").strip()
            if not label:
                raise ValidationError("empty participant label")
            ids = []
            for column in ("app_id", "badge_id"):
                value = (row.get(column) or "").strip()
                if not value:
                    ids.append(None)
                elif salt is not None:
                    ids.append(hash_id(value, salt))
                else:
                    ids.append(DeviceId(value))
            platform = Platform.parse(row.get("platform") or "")
            participants.append(Participant(label, ids[0], ids[1], platform))
        except ValidationError as e:
            raise ParseError(str(e), path=path, line=line)

    roster = Roster(participants)
    logger.info(f"Loaded roster of {len(roster)} participants from {path}")
    return roster


def write_roster(roster: Roster, path):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(ROSTER_COLUMNS)
    for p in roster:
        writer.writerow([p.label, p.app_id or "", p.badge_id or "", p.platform.value])
    atomic_write_text(path, buffer.getvalue())


# --- Scan logs ---

def _detect_format(path: Path, fmt: Optional[str]) -> str:
    if fmt is not None:
        if fmt not in ("csv", "jsonl"):
            raise ParseError(f"Unknown log format {fmt!r}", path=path)
        return fmt
    return "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson", ".json") else "csv"


def _event_from_row(row: Mapping, source: Source) -> ScanEvent:
    if row.get(None):
        raise ValidationError(f"row has {len(LOG_COLUMNS) + len(row[None])} fields, expected {len(LOG_COLUMNS)}")
    ts_text = str(row.get("ts") or "").strip()
    if not ts_text:
        raise ValidationError("missing timestamp")
    try:
        ts = pd.Timestamp(ts_text)
    except (ValueError, TypeError):
        raise ValidationError(f"unparseable timestamp {ts_text!r}")
    if ts is pd.NaT:
        raise ValidationError(f"unparseable timestamp {ts_text!r}")

    row_source = str(row.get("source") or "").strip()
    if row_source != source.value:
        raise ValidationError(f"source {row_source!r} does not match declared source {source.value!r}")

    kind = str(row.get("kind") or "").strip()
    if kind not in {k.value for k in EventKind}:
        raise ValidationError(f"unknown kind {kind!r}")

    observed = str(row.get("observed") or "").strip() or None
    if kind == EventKind.DETECT.value and observed is None:
        raise ValidationError("detect row without observed device")
    if kind != EventKind.DETECT.value and observed is not None:
        raise ValidationError(f"{kind} row must not carry an observed device")

    return ScanEvent(ts, source, EventKind(kind), str(row.get("scanner") or ""), observed)


def _iter_log_rows(path: Path, fmt: str):
    if fmt == "csv":
        yield from _read_csv_rows(path, LOG_COLUMNS, lenient=True)
        return

    text = _read_text(path)
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if _undecodable(line):
            yield line_number, ValueError("invalid UTF-8")
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            yield line_number, e
            continue
        yield line_number, row if isinstance(row, dict) else ValueError("row is not a JSON object")


def parse_scan_log(path, source, fmt: Optional[str] = None) -> Tuple[List[ScanEvent], RejectionReport]:
    """
    Parse one app or badge scan log.

    Args:
        path: CSV (with header) or JSON-lines file
        source: Declared source of every row
        fmt: "csv" or "jsonl"; guessed from the suffix when None

    Returns:
        Tuple of (events sorted by timestamp, rejection report)
    """
    path = Path(path)
    source = Source(source)
    fmt = _detect_format(path, fmt)
    report = RejectionReport(path=str(path))

    seen = set()
    events = []
    for line, row in _iter_log_rows(path, fmt):
        report.rows += 1
        if isinstance(row, Exception):
            label = "malformed JSON" if isinstance(row, json.JSONDecodeError) else "malformed row"
            report.rejected.append((line, f"{label}: {row}"))
            continue
        try:
            event = _event_from_row(row, source)
        except ProxnetError as e:
            report.rejected.append((line, str(e)))
            continue
        key = event.sort_key()
        if key in seen:
            report.duplicates += 1
            continue
        seen.add(key)
        events.append(event)

    events.sort(key=ScanEvent.sort_key)
    report.accepted = len(events)

    if report.rejected:
        first_line, first_reason = report.rejected[0]
        logger.warning(
            f"{path}: rejected {report.rejected_count} of {report.rows} rows "
            f"(first at line {first_line}: {first_reason})"
        )
    logger.info(f"Parsed {report.accepted} {source.value} events from {path} ({report.duplicates} duplicates)")
    return events, report


def write_scan_log(events: Iterable[ScanEvent], path, fmt: Optional[str] = None):
    """Serialize events in the ingest format (CSV with header, or JSON lines)."""
    path = Path(path)
    fmt = _detect_format(path, fmt)
    rows = [e.as_row() for e in events]
    if fmt == "jsonl":
        text = "".join(json.dumps(r, sort_keys=False) + "\n" for r in rows)
    else:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=LOG_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buffer.getvalue()
    atomic_write_text(path, text)


# --- Surveys ---

def load_resolution(path) -> Dict[str, str]:
    """Read an explicit name resolution table `name,participant`."""
    table = {}
    for line, row in _read_csv_rows(path, ("name", "participant")):
        name = (row.get("name") or "").strip()
        label = (row.get("participant") or "").strip()
        if not name or not label:
            raise ParseError("empty name or participant", path=path, line=line)
        table[name.casefold()] = label
    return table


def _resolver(roster: Roster, resolution: Optional[Mapping[str, str]]):
    by_label = {label: label for label in roster.labels}
    by_app = {p.app_id: p.label for p in roster if p.app_id is not None}
    table = {k.casefold(): v for k, v in (resolution or {}).items()}

    def resolve(name: str) -> Optional[str]:
        name = name.strip()
        if name in by_label:
            return name
        if name.lower() in by_app:
            return by_app[name.lower()]
        label = table.get(name.casefold())
        return label if label in by_label else None

    return resolve


def parse_survey(path, roster: Roster,
                 resolution: Optional[Mapping[str, str]] = None) -> Tuple[DirectedSurveyNetwork, SurveyReport]:
    """
    Build the directed nomination network from a survey CSV.

    The file has columns `respondent,nominee1..nominee5`; blank cells are
    allowed. Names resolve to roster participants by label, app id or the
    explicit resolution table, never by fuzzy matching.

    Args:
        path: Survey CSV
        roster: Study roster; rows/columns follow its order
        resolution: Optional name -> participant label table

    Returns:
        Tuple of (DirectedSurveyNetwork, SurveyReport)
    """
    path = Path(path)
    resolve = _resolver(roster, resolution)
    labels = roster.labels
    index = {label: k for k, label in enumerate(labels)}
    adjacency = np.zeros((len(labels), len(labels)), dtype=np.int8)
    report = SurveyReport(path=str(path))
    responses = []
    answered = set()

    for line, row in _read_csv_rows(path, (SURVEY_RESPONDENT,)):
        respondent_name = (row.get(SURVEY_RESPONDENT) or "").strip()
        respondent = resolve(respondent_name)
        if respondent is None:
            raise ParseError(f"respondent {respondent_name!r} is not in the roster", path=path, line=line)
        if respondent in answered:
            raise ParseError(f"respondent {respondent!r} answered twice", path=path, line=line)
        answered.add(respondent)

        names = [
            (value or "").strip()
            for key, value in row.items()
            if key is not None and key != SURVEY_RESPONDENT and isinstance(value, str) and value.strip()
        ]
        if row.get(None):
            names += [v.strip() for v in row[None] if v and v.strip()]
        if len(names) > MAX_NOMINEES:
            raise ParseError(
                f"respondent {respondent!r} nominated {len(names)} colleagues (max {MAX_NOMINEES})",
                path=path, line=line,
            )

        nominees = []
        for name in names:
            label = resolve(name)
            if label is None:
                report.unresolved.append((line, name))
            elif label == respondent:
                report.self_nominations += 1
            elif label in nominees:
                report.duplicates += 1
            else:
                nominees.append(label)

        responses.append(SurveyResponse(respondent, tuple(nominees)))
        for label in nominees:
            adjacency[index[respondent], index[label]] = 1

    report.respondents = len(responses)
    if report.warning_count:
        logger.warning(
            f"{path}: {len(report.unresolved)} unresolved nominees, "
            f"{report.duplicates} duplicates, {report.self_nominations} self-nominations omitted"
        )
    logger.info(f"Parsed {report.respondents} survey responses from {path}")
    return DirectedSurveyNetwork(labels, adjacency), report


# --- Activity ---

def _bridge_gaps(active: np.ndarray, grid: TimeGrid, gap_tolerance: int) -> np.ndarray:
    if gap_tolerance <= 0 or not active.any():
        return active
    bridged = active.copy()
    per_day = grid.daily_bins
    for start in range(0, len(active), per_day):
        day = active[start:start + per_day]
        on = np.flatnonzero(day)
        for left, right in zip(on[:-1], on[1:]):
            if 1 < right - left <= gap_tolerance + 1:
                bridged[start + left + 1:start + right] = True
    return bridged


def compute_activity(events: Sequence[ScanEvent], grid: TimeGrid,
                     peer_detections: Sequence[ScanEvent] = (),
                     gap_tolerance: int = ACTIVITY_GAP_TOLERANCE,
                     device: Optional[str] = None) -> ActivityTimeline:
    """
    Activity timeline of one device for one source.

    A bin is active iff it holds at least one of the device's own events (scan,
    telemetry, or a detection it made) or an event in which a peer observed it.
    Events outside the grid are ignored.

    Args:
        events: The device's own events
        grid: Time grid
        peer_detections: Detect events whose observed device is this device
        gap_tolerance: Inactive runs of at most this many bins between two
            active bins of the same day are marked active
        device: Device id recorded on the timeline

    Returns:
        ActivityTimeline
    """
    if gap_tolerance < 0:
        raise ValidationError(f"gap_tolerance must be >= 0, got {gap_tolerance}")
    evidence = list(events) + list(peer_detections)
    if device is None:
        device = str(events[0].scanner) if events else (str(peer_detections[0].observed) if peer_detections else "")

    active = np.zeros(grid.total_bins, dtype=bool)
    if evidence:
        bins = grid.bins_of([e.timestamp for e in evidence])
        active[bins[bins >= 0]] = True
    return ActivityTimeline(device, _bridge_gaps(active, grid, gap_tolerance))


def compute_timelines(events: Sequence[ScanEvent], grid: TimeGrid, roster: Roster, source,
                      gap_tolerance: int = ACTIVITY_GAP_TOLERANCE) -> Dict[str, ActivityTimeline]:
    """Activity timelines for every participant's device of one source, keyed by roster label."""
    source = Source(source)
    own = defaultdict(list)
    received = defaultdict(list)
    for event in events:
        if event.source is not source:
            continue
        own[event.scanner].append(event)
        if event.observed is not None:
            received[event.observed].append(event)

    timelines = {}
    for person in roster:
        device = person.device_id(source)
        if device is None:
            timelines[person.label] = ActivityTimeline("", np.zeros(grid.total_bins, dtype=bool))
            continue
        timelines[person.label] = compute_activity(
            own.get(device, []), grid, received.get(device, []), gap_tolerance, device=str(device)
        )
    return timelines


def activity_report(timelines_by_source: Mapping[str, Mapping[str, ActivityTimeline]],
                    roster: Roster) -> Tuple[pd.DataFrame, Dict]:
    """
    Per-device active fractions and per-platform summaries.

    Args:
        timelines_by_source: {source: {participant label: timeline}}
        roster: Study roster

    Returns:
        Tuple of (rows participant/source/platform/device/active_fraction,
        {source: {group: {"n", "mean", "sd"}}})
    """
    rows = []
    for source, timelines in timelines_by_source.items():
        for person in roster:
            timeline = timelines.get(person.label)
            if timeline is None or not timeline.device:
                continue
            rows.append({
                "participant": person.label,
                "source": Source(source).value,
                "platform": person.platform.value,
                "device": timeline.device,
                "active_fraction": timeline.active_fraction,
            })
    frame = pd.DataFrame(rows, columns=["participant", "source", "platform", "device", "active_fraction"])

    summary = {}
    for source, group in frame.groupby("source", sort=True):
        entry = {"all": _mean_sd(group["active_fraction"])}
        for platform, sub in group.groupby("platform", sort=True):
            entry[platform] = _mean_sd(sub["active_fraction"])
        summary[source] = entry
    return frame, summary


def _mean_sd(values: pd.Series) -> Dict:
    values = values.to_numpy(dtype=float)
    return {
        "n": int(len(values)),
        "mean": float(values.mean()) if len(values) else 0.0,
        "sd": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
    }
