import numpy as np
import pandas as pd
import pytest

from common.model import EventKind, Platform, ScanEvent, Source
from common.utils.errors import ParseError, ValidationError
from conftest import at, detect, make_roster, scan, telemetry, write_csv
from pipeline.ingest.ingest import (
    activity_report, compute_activity, compute_timelines, hash_id, load_resolution, load_roster,
    normalize_identifier, parse_scan_log, parse_survey, write_roster, write_scan_log
)


# --- Identifiers ---

def test_hash_id_known_vector():
    assert hash_id("abc", "") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def test_hash_id_normalizes_separators_and_case():
    assert normalize_identifier("AA:BB-CC.DD EE:FF") == "aabbccddeeff"
    assert hash_id("AA:BB:CC:DD:EE:FF", "s") == hash_id("aabbccddeeff", "s")


def test_hash_id_depends_on_salt():
    assert hash_id("aabbccddeeff", "one") != hash_id("aabbccddeeff", "two")


def test_hash_id_rejects_empty():
    with pytest.raises(ValidationError):
        hash_id("  ::  ", "salt")


# --- Roster ---

def test_load_roster_hashes_raw_ids(tmp_path):
    path = write_csv(tmp_path / "roster.csv", """
participant,app_id,badge_id,platform
alice,AA:BB:CC:DD:EE:01,11:22:33:44:55:66,android
bob,AA:BB:CC:DD:EE:02,,ios
""")
    roster = load_roster(path, salt="s")
    assert roster.labels == ("alice", "bob")
    assert roster.platforms == (Platform.PLATFORM_A, Platform.PLATFORM_B)
    assert roster.participants[0].app_id == hash_id("aabbccddee01", "s")
    assert roster.participants[1].badge_id is None


def test_roster_write_then_load(tmp_path):
    roster = make_roster(3)
    write_roster(roster, tmp_path / "roster.csv")
    assert load_roster(tmp_path / "roster.csv") == roster


def test_roster_missing_column(tmp_path):
    path = write_csv(tmp_path / "roster.csv", "participant,app_id\nalice,aa\n")
    with pytest.raises(ParseError) as excinfo:
        load_roster(path)
    assert ":1:" in str(excinfo.value)


# --- Scan logs ---

LOG = """
ts,source,kind,scanner,observed
2015-08-17T09:00:10Z,app,scan,aa,
2015-08-17T09:00:10Z,app,detect,aa,bb
2015-08-17T09:00:10Z,app,detect,aa,bb
2015-08-17T09:06:00Z,app,telemetry,bb,
"""


def test_parse_scan_log_counts_duplicates(tmp_path):
    events, report = parse_scan_log(write_csv(tmp_path / "app.csv", LOG), Source.APP)
    assert [e.kind for e in events] == [EventKind.DETECT, EventKind.SCAN, EventKind.TELEMETRY]
    assert report.rows == 4
    assert report.accepted == 3
    assert report.duplicates == 1
    assert report.rejected == []


@pytest.mark.parametrize("bad_row, reason", [
    ("not-a-time,app,scan,aa,", "timestamp"),
    ("2015-08-17T09:00:10Z,app,wave,aa,", "kind"),
    ("2015-08-17T09:00:10Z,app,detect,aa,", "observed"),
    ("2015-08-17T09:00:10Z,badge,scan,aa,", "source"),
    ("2015-08-17T09:00:10Z,app,scan,aa,,extra", "fields"),
    ("2015-08-17T09:00:10Z,app,scan,zz-not-hex,", "hexadecimal"),
])
def test_parse_scan_log_rejects_with_line_number(tmp_path, bad_row, reason):
    text = LOG.rstrip("\n") + "\n" + bad_row + "\n"
    events, report = parse_scan_log(write_csv(tmp_path / "app.csv", text), Source.APP)
    assert len(events) == 3
    assert report.rejected_count == 1
    line, message = report.rejected[0]
    assert line == 6
    assert reason in message


def test_parse_jsonl_log(tmp_path):
    path = tmp_path / "badge.jsonl"
    path.write_text(
        '{"ts": "2015-08-17T09:00:10Z", "source": "badge", "kind": "detect", "scanner": "aa", "observed": "bb"}\n'
        "{broken\n"
        "\n"
        '{"ts": "2015-08-17T09:01:10Z", "source": "badge", "kind": "telemetry", "scanner": "aa"}\n',
        encoding="utf-8",
    )
    events, report = parse_scan_log(path, Source.BADGE)
    assert len(events) == 2
    assert report.rejected[0][0] == 2


def test_scan_log_written_in_ingest_format(tmp_path, small_grid):
    roster = make_roster(2)
    events = [
        scan(small_grid, roster, 0, 3),
        detect(small_grid, roster, 0, 1, 3),
        telemetry(small_grid, roster, 1, 5),
    ]
    for name in ("log.csv", "log.jsonl"):
        write_scan_log(events, tmp_path / name)
        parsed, report = parse_scan_log(tmp_path / name, Source.APP)
        assert parsed == sorted(events, key=lambda e: e.sort_key())
        assert report.rejected == []


def test_missing_log_is_a_parse_error(tmp_path):
    with pytest.raises(ParseError):
        parse_scan_log(tmp_path / "absent.csv", Source.APP)


def test_invalid_utf8_rejects_only_that_row(tmp_path):
    path = tmp_path / "app.csv"
    path.write_bytes(LOG.lstrip("\n").encode("utf-8") + b"2015-08-17T09:10:00Z,app,scan,ab\xff\xfe,\n")
    events, report = parse_scan_log(path, Source.APP)
    assert len(events) == 3
    assert report.rejected == [(6, "malformed row: invalid UTF-8")]


def test_invalid_utf8_in_jsonl_rejects_only_that_line(tmp_path):
    path = tmp_path / "badge.jsonl"
    path.write_bytes(
        b'{"ts": "2015-08-17T09:00:10Z", "source": "badge", "kind": "telemetry", "scanner": "aa"}\n'
        b'{"ts": "2015-08-17T09:01:10Z", "source": "badge", "kind": "telemetry", "scanner": "a\xff"}\n'
    )
    events, report = parse_scan_log(path, Source.BADGE)
    assert len(events) == 1
    assert report.rejected[0][0] == 2


def test_invalid_utf8_in_roster_is_a_parse_error(tmp_path):
    path = tmp_path / "roster.csv"
    path.write_bytes(b"participant,app_id,badge_id,platform\nal\xffce,aa,,android\n")
    with pytest.raises(ParseError) as error:
        load_roster(path)
    assert error.value.line == 2


# --- Survey ---

def test_parse_survey(tmp_path):
    roster = make_roster(4)
    path = write_csv(tmp_path / "survey.csv", """
respondent,nominee1,nominee2,nominee3,nominee4,nominee5
P1,P2,Robin,P1,P2,
P2,P1,,,,
P3,carol,,,,
""")
    resolution = load_resolution(write_csv(tmp_path / "names.csv", "name,participant\nrobin,P4\n"))
    survey, report = parse_survey(path, roster, resolution)
    assert survey.adjacency[0].tolist() == [0, 1, 0, 1]
    assert survey.adjacency[1].tolist() == [1, 0, 0, 0]
    assert survey.adjacency[2].sum() == 0
    assert report.respondents == 3
    assert report.self_nominations == 1
    assert report.duplicates == 1
    assert report.unresolved == [(4, "carol")]


def test_survey_with_too_many_nominees(tmp_path):
    roster = make_roster(7)
    path = write_csv(tmp_path / "survey.csv", """
respondent,n1,n2,n3,n4,n5,n6
P1,P2,P3,P4,P5,P6,P7
""")
    with pytest.raises(ParseError) as excinfo:
        parse_survey(path, roster)
    assert ":2:" in str(excinfo.value)


def test_survey_unknown_respondent(tmp_path):
    path = write_csv(tmp_path / "survey.csv", "respondent,n1\nstranger,P1\n")
    with pytest.raises(ParseError):
        parse_survey(path, make_roster(2))


# --- Activity ---

def test_activity_from_own_events_and_peer_detections(small_grid):
    roster = make_roster(2)
    own = [scan(small_grid, roster, 0, 1), telemetry(small_grid, roster, 0, 4)]
    seen = [detect(small_grid, roster, 1, 0, 7)]
    timeline = compute_activity(own, small_grid, seen)
    assert np.flatnonzero(timeline.active).tolist() == [1, 4, 7]
    assert timeline.device == roster.participants[0].app_id


def test_activity_ignores_events_outside_grid(small_grid):
    roster = make_roster(1)
    event = scan(small_grid, roster, 0, 0)
    outside = ScanEvent(at(small_grid, 11) + pd.Timedelta(minutes=10), Source.APP, EventKind.SCAN, event.scanner)
    timeline = compute_activity([event, outside], small_grid)
    assert timeline.active_bins == 1


def test_gap_tolerance_bridges_within_a_day(small_grid):
    roster = make_roster(1)
    events = [scan(small_grid, roster, 0, b) for b in (0, 3, 11, 12)]
    assert compute_activity(events, small_grid, gap_tolerance=1).active_bins == 4
    bridged = compute_activity(events, small_grid, gap_tolerance=2)
    assert np.flatnonzero(bridged.active).tolist() == [0, 1, 2, 3, 11, 12]
    with pytest.raises(ValidationError):
        compute_activity(events, small_grid, gap_tolerance=-1)


def test_activity_report_groups_by_platform(small_grid):
    roster = make_roster(3, [Platform.PLATFORM_A, Platform.PLATFORM_B, Platform.PLATFORM_B])
    events = [scan(small_grid, roster, 0, b) for b in range(12)]
    events += [scan(small_grid, roster, 1, b) for b in range(6)]
    timelines = {"app": compute_timelines(events, small_grid, roster, Source.APP)}
    frame, summary = activity_report(timelines, roster)
    assert frame["active_fraction"].tolist() == [0.5, 0.25, 0.0]
    assert summary["app"]["platform_A"] == {"n": 1, "mean": 0.5, "sd": 0.0}
    assert summary["app"]["platform_B"]["mean"] == pytest.approx(0.125)
    assert summary["app"]["platform_B"]["sd"] == pytest.approx(np.std([0.25, 0.0], ddof=1))
