import numpy as np
import pytest

from common.model import ActivityTimeline, EventKind, ScanEvent, Source
from common.utils.errors import DataIntegrityError, EmptyNetworkError, ValidationError
from conftest import at, detect, detection_grid, make_roster, scan, telemetry
from pipeline.estimate.estimate import (
    Universe, WeightMode, build_detection_grid, coactive_bins, connection_strength, resample_network,
    resampled_weights, scan_statistics, simultaneous_activity, universe_mask, weighted_network
)
from pipeline.ingest.ingest import hash_id


# --- Connection strength ---

def test_connection_strength_zero_scans_is_zero():
    assert connection_strength(0, 0, 0, 0) == 0.0


def test_connection_strength_mutual_detection_is_one():
    assert connection_strength(5, 7, 5, 7) == 1.0


def test_connection_strength_example():
    assert connection_strength(2, 1, 4, 6) == pytest.approx(0.3)


@pytest.mark.parametrize("counts", [(3, 0, 2, 5), (0, 6, 2, 5), (-1, 0, 2, 5), (0, 0, -2, 5)])
def test_connection_strength_rejects_impossible_counts(counts):
    with pytest.raises(DataIntegrityError):
        connection_strength(*counts)


def test_connection_strength_bounds():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n_i, n_j = rng.integers(0, 20, size=2)
        value = connection_strength(rng.integers(0, n_i + 1), rng.integers(0, n_j + 1), n_i, n_j)
        assert 0.0 <= value <= 1.0


def test_connection_strength_is_monotone_in_detections():
    for n_i in range(6):
        for n_j in range(6):
            for n_ji in range(n_j + 1):
                values = [connection_strength(n_ij, n_ji, n_i, n_j) for n_ij in range(n_i + 1)]
                assert values == sorted(values)


# --- Detection grids ---

def test_build_detection_grid_counts(small_grid, roster3):
    stranger = hash_id("ff:ff:ff:ff:ff:ff", "")
    events = [
        scan(small_grid, roster3, 0, 2),
        scan(small_grid, roster3, 0, 2, seconds=100),
        detect(small_grid, roster3, 0, 1, 2),
        detect(small_grid, roster3, 0, 1, 2, seconds=100),
        ScanEvent(at(small_grid, 2), Source.APP, EventKind.DETECT, roster3.participants[0].app_id, stranger),
        telemetry(small_grid, roster3, 2, 4),
        scan(small_grid, roster3, 1, 3, source=Source.BADGE),
    ]
    grid = build_detection_grid(events, small_grid, roster3, Source.APP)
    assert grid.scans[0, 2] == 2
    assert grid.scans.sum() == 2
    assert grid.hits[0, 1, 2] == 2
    assert grid.hits.sum() == 2
    assert grid.directed_counts[0, 1] == 2
    assert grid.detected[1, 0, 2]


def _scan_normalized_fixture(small_grid, roster):
    events = [scan(small_grid, roster, 0, b) for b in range(4)]
    events += [scan(small_grid, roster, 1, b) for b in range(2)]
    events += [detect(small_grid, roster, 0, 1, b) for b in (0, 1)]
    events += [detect(small_grid, roster, 1, 0, 0)]
    return build_detection_grid(events, small_grid, roster, Source.APP)


def test_scan_normalized_weights(small_grid):
    roster = make_roster(2)
    grid = _scan_normalized_fixture(small_grid, roster)
    network = weighted_network(grid, mode=WeightMode.SCAN_NORMALIZED)
    assert network.weights[0, 1] == pytest.approx(3 / 6)


def test_time_fraction_all_office_bins(small_grid):
    roster = make_roster(2)
    grid = _scan_normalized_fixture(small_grid, roster)
    network = weighted_network(grid, mode=WeightMode.TIME_FRACTION, universe=Universe.ALL_OFFICE_BINS)
    assert network.weights[0, 1] == pytest.approx(2 / 24)


def test_time_fraction_sampled_bins(small_grid):
    roster = make_roster(2)
    grid = _scan_normalized_fixture(small_grid, roster)
    network = weighted_network(grid, universe=Universe.SAMPLED_BINS)
    assert network.weights[0, 1] == pytest.approx(2 / 4)


def test_time_fraction_coactive_bins(small_grid):
    roster = make_roster(2)
    hits = np.zeros((2, 2, 24))
    hits[0, 1, [0, 8]] = 1
    grid = detection_grid(small_grid, roster, hits, np.ones((2, 24)))
    timelines = {
        "P1": ActivityTimeline("a", np.arange(24) < 12),
        "P2": ActivityTimeline("b", np.arange(24) < 6),
    }
    assert coactive_bins(timelines["P1"], timelines["P2"]).tolist() == list(range(6))
    network = weighted_network(grid, timelines, universe=Universe.COACTIVE_BINS)
    assert network.weights[0, 1] == pytest.approx(1 / 6)


def test_coactive_universe_needs_timelines(small_grid):
    roster = make_roster(2)
    grid = detection_grid(small_grid, roster, np.zeros((2, 2, 24)), np.zeros((2, 24)))
    with pytest.raises(ValidationError):
        universe_mask(grid, Universe.COACTIVE_BINS)


def test_badge_scan_normalized_uses_activity(small_grid):
    roster = make_roster(2)
    hits = np.zeros((2, 2, 24))
    hits[0, 1, [0, 1]] = 1
    grid = detection_grid(small_grid, roster, hits, np.zeros((2, 24)), source=Source.BADGE)
    timelines = {
        "P1": ActivityTimeline("a", np.arange(24) < 4),
        "P2": ActivityTimeline("b", np.arange(24) < 2),
    }
    network = weighted_network(grid, timelines, mode=WeightMode.SCAN_NORMALIZED)
    assert network.weights[0, 1] == pytest.approx(2 / 6)


def test_weighted_network_properties_on_random_grids(small_grid):
    rng = np.random.default_rng(11)
    roster = make_roster(5)
    for _ in range(20):
        scans = rng.integers(0, 3, size=(5, 24))
        hits = rng.integers(0, 3, size=(5, 5, 24)) * (scans[:, None, :] > 0)
        for k in range(5):
            hits[k, k] = 0
        grid = detection_grid(small_grid, roster, hits, scans)
        for mode in WeightMode:
            for universe in (Universe.ALL_OFFICE_BINS, Universe.SAMPLED_BINS):
                w = weighted_network(grid, mode=mode, universe=universe).weights
                assert np.array_equal(w, w.T)
                assert np.all(np.diag(w) == 0)
                assert w.min() >= 0 and w.max() <= 1


def test_coactive_universe_never_lowers_time_fraction_weights(small_grid):
    rng = np.random.default_rng(19)
    roster = make_roster(4)
    for _ in range(20):
        active = rng.random((4, 24)) < 0.6
        scans = active.astype(int)
        hits = (rng.random((4, 4, 24)) < 0.5) & active[:, None, :] & active[None, :, :]
        for k in range(4):
            hits[k, k] = False
        grid = detection_grid(small_grid, roster, hits, scans)
        timelines = {label: ActivityTimeline(label, active[k]) for k, label in enumerate(roster.labels)}
        everywhere = weighted_network(grid, timelines, universe=Universe.ALL_OFFICE_BINS).weights
        coactive = weighted_network(grid, timelines, universe=Universe.COACTIVE_BINS).weights
        assert np.all(coactive >= everywhere)


def test_empty_roster_has_no_network(small_grid):
    grid = detection_grid(small_grid, make_roster(0), np.zeros((0, 0, 24)), np.zeros((0, 24)))
    with pytest.raises(EmptyNetworkError):
        weighted_network(grid)


# --- Resampling ---

def test_resampled_weights_count_own_draws_only():
    directed = np.zeros((2, 2, 4), dtype=bool)
    directed[0, 1, [0, 1]] = True
    drawn = np.array([[1, 0, 1, 0], [0, 1, 0, 1]], dtype=bool)
    weights = resampled_weights(directed, drawn)
    assert weights[0, 1] == pytest.approx(1 / 4)
    assert weights[1, 0] == weights[0, 1]


def _resampling_grid(small_grid):
    roster = make_roster(4)
    scans = np.zeros((4, 24))
    scans[0, :20] = 1
    scans[1, :12] = 1
    scans[2, :8] = 1
    scans[3, :3] = 1
    hits = np.zeros((4, 4, 24))
    hits[0, 1, :10] = 1
    hits[2, 0, :4] = 1
    return detection_grid(small_grid, roster, hits, scans)


def test_resample_network_excludes_sparse_scanners(small_grid):
    grid = _resampling_grid(small_grid)
    network, labels = resample_network(grid, 8, rng_seed=3)
    assert labels == ("P1", "P2", "P3")
    assert network.roster == labels


def test_resample_network_is_deterministic(small_grid):
    grid = _resampling_grid(small_grid)
    first, _ = resample_network(grid, 5, rng_seed=3, stream=2)
    second, _ = resample_network(grid, 5, rng_seed=3, stream=2)
    assert first == second


def test_resample_network_with_too_many_samples(small_grid):
    with pytest.raises(EmptyNetworkError):
        resample_network(_resampling_grid(small_grid), 21, rng_seed=0)


# --- Descriptives ---

def test_scan_statistics(small_grid):
    roster = make_roster(2)
    grid = _scan_normalized_fixture(small_grid, roster)
    devices, dyads, summary = scan_statistics(grid)
    assert devices["scans"].tolist() == [4, 2]
    assert devices["scans_per_hour"].tolist() == [2.0, 1.0]
    assert devices["adherence"].tolist() == [4 / 24, 2 / 24]
    assert dyads["scans_per_hour"].tolist() == [3.0]
    assert summary["dyads_hourly"] == 1.0
    assert summary["dyads_quarter_hourly"] == 0.0


def test_simultaneous_activity():
    roster = make_roster(3)
    timelines = {
        "P1": ActivityTimeline("a", [1, 1, 1, 1]),
        "P2": ActivityTimeline("b", [1, 1, 0, 0]),
        "P3": ActivityTimeline("c", [0, 1, 1, 0]),
    }
    frame, summary = simultaneous_activity(timelines, roster)
    assert frame["coactive_fraction"].tolist() == [0.5, 0.5, 0.25]
    assert summary["mean"] == pytest.approx(0.4166666, rel=1e-5)
    assert summary["dyads"] == 3
