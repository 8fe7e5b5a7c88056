"""
Database module for proxnet.
Stores the normalized event store (events, roster, grid metadata) using SQLite.
"""
import json
import logging
import os
import sqlite3
from typing import Dict, List, Optional, Tuple

from common.model import EventKind, Participant, Platform, Roster, ScanEvent, Source, TimeGrid
from common.utils.errors import ParseError

logger = logging.getLogger("proxnet")

# Default store file name inside an output directory
DB_FILE = "events.db"


def init_db(db_file):
    """Create a fresh store, replacing any previous file at that path."""
    try:
        if os.path.exists(db_file):
            os.remove(db_file)
            logger.info(f"Replaced existing event store {db_file}")

        conn = sqlite3.connect(db_file)
        cursor = conn.cursor()

        cursor.execute('''
        CREATE TABLE events (
            ts TEXT NOT NULL,
            source TEXT NOT NULL,
            kind TEXT NOT NULL,
            scanner TEXT NOT NULL,
            observed TEXT NOT NULL DEFAULT ''
        )
        ''')
        cursor.execute('''
        CREATE TABLE roster (
            position INTEGER PRIMARY KEY,
            participant TEXT NOT NULL UNIQUE,
            app_id TEXT NOT NULL DEFAULT '',
            badge_id TEXT NOT NULL DEFAULT '',
            platform TEXT NOT NULL
        )
        ''')
        cursor.execute('''
        CREATE TABLE meta (
            key TEXT PRIMARY KEY,
            value TEXT NOT NULL
        )
        ''')

        conn.commit()
        conn.close()
        logger.info(f"Created event store {db_file}")

    except Exception as e:
        logger.error(f"Error initializing event store: {e}")
        raise


STORE_TABLES = {"events", "roster", "meta"}


def _connect(db_file):
    if not os.path.exists(db_file):
        raise ParseError("Event store does not exist", path=db_file)
    conn = sqlite3.connect(db_file)
    try:
        tables = {row[0] for row in conn.execute("SELECT name FROM sqlite_master WHERE type = 'table'")}
    except sqlite3.DatabaseError as e:
        conn.close()
        raise ParseError(f"Not an event store: {e}", path=db_file)
    if not STORE_TABLES <= tables:
        conn.close()
        raise ParseError(f"Not an event store: missing tables {sorted(STORE_TABLES - tables)}", path=db_file)
    return conn


def store_events(db_file, events: List[ScanEvent]):
    """
    Append events to the store.

    Args:
        db_file: Path of the store
        events: Parsed events (already deduplicated and sorted)
    """
    conn = _connect(db_file)
    try:
        rows = [(r["ts"], r["source"], r["kind"], r["scanner"], r["observed"]) for r in (e.as_row() for e in events)]
        conn.executemany(
            "INSERT INTO events (ts, source, kind, scanner, observed) VALUES (?, ?, ?, ?, ?)", rows
        )
        conn.commit()
        logger.info(f"Stored {len(rows)} events in {db_file}")
    finally:
        conn.close()


def load_events(db_file, source: Optional[Source] = None) -> List[ScanEvent]:
    """
    Load events in timestamp order.

    Args:
        db_file: Path of the store
        source: Restrict to one source, or None for all

    Returns:
        List of ScanEvent
    """
    conn = _connect(db_file)
    try:
        query = "SELECT ts, source, kind, scanner, observed FROM events"
        params = []
        if source is not None:
            query += " WHERE source = ?"
            params.append(Source(source).value)
        query += " ORDER BY ts, source, kind, scanner, observed"
        rows = conn.execute(query, params).fetchall()
    finally:
        conn.close()

    return [
        ScanEvent(ts, Source(src), EventKind(kind), scanner, observed or None)
        for ts, src, kind, scanner, observed in rows
    ]


def store_roster(db_file, roster: Roster):
    conn = _connect(db_file)
    try:
        conn.executemany(
            "INSERT INTO roster (position, participant, app_id, badge_id, platform) VALUES (?, ?, ?, ?, ?)",
            [
                (k, p.label, p.app_id or "", p.badge_id or "", p.platform.value)
                for k, p in enumerate(roster)
            ],
        )
        conn.commit()
    finally:
        conn.close()


def load_roster(db_file) -> Roster:
    conn = _connect(db_file)
    try:
        rows = conn.execute(
            "SELECT participant, app_id, badge_id, platform FROM roster ORDER BY position"
        ).fetchall()
    finally:
        conn.close()
    return Roster(
        Participant(label, app_id or None, badge_id or None, Platform(platform))
        for label, app_id, badge_id, platform in rows
    )


def set_meta(db_file, key: str, value: Dict):
    conn = _connect(db_file)
    try:
        conn.execute(
            "INSERT OR REPLACE INTO meta (key, value) VALUES (?, ?)",
            (key, json.dumps(value, sort_keys=True)),
        )
        conn.commit()
    finally:
        conn.close()


def get_meta(db_file, key: str) -> Optional[Dict]:
    conn = _connect(db_file)
    try:
        row = conn.execute("SELECT value FROM meta WHERE key = ?", (key,)).fetchone()
    finally:
        conn.close()
    return json.loads(row[0]) if row else None


def count_events(db_file) -> Dict[str, int]:
    """Event counts per (source, kind)."""
    conn = _connect(db_file)
    try:
        rows = conn.execute(
            "SELECT source, kind, COUNT(*) FROM events GROUP BY source, kind ORDER BY source, kind"
        ).fetchall()
    finally:
        conn.close()
    return {f"{source}.{kind}": count for source, kind, count in rows}


def load_store(db_file) -> Tuple[List[ScanEvent], Roster, TimeGrid, int]:
    """
    Everything downstream commands need from an ingested store.

    Returns:
        Tuple of (events, roster, grid, activity gap tolerance)
    """
    grid = get_meta(db_file, "grid")
    if grid is None:
        raise ParseError("Event store has no grid metadata", path=db_file)
    gap_tolerance = get_meta(db_file, "gap_tolerance") or 0
    try:
        return load_events(db_file), load_roster(db_file), TimeGrid.from_dict(grid), int(gap_tolerance)
    except (sqlite3.DatabaseError, ValueError) as e:
        raise ParseError(f"Corrupt event store: {e}", path=db_file)


# Create a singleton database instance
database = {
    'init_db': init_db,
    'store_events': store_events,
    'load_events': load_events,
    'store_roster': store_roster,
    'load_roster': load_roster,
    'set_meta': set_meta,
    'get_meta': get_meta,
    'count_events': count_events,
    'load_store': load_store,
}
