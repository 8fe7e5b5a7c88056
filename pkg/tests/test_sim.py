import numpy as np
import pytest
from scipy.stats import spearmanr

from common.model import EventKind, Source, TimeGrid
from common.utils.errors import ConfigError
from pipeline.estimate.estimate import build_detection_grid, weighted_network
from pipeline.ingest.ingest import compute_timelines
from pipeline.sim.sim import SimConfig, realized_scan_rates, simulate, truth_network
from pipeline.stats.mantel import mantel
from pipeline.stats.resampling import resampling_curve


def week_grid(daily_end="12:00"):
    return TimeGrid(
        start_date="2015-08-17",
        end_date="2015-08-21",
        days_of_week={0, 1, 2, 3, 4},
        daily_start="09:00",
        daily_end=daily_end,
        timezone="UTC",
        bin_seconds=300,
    )


def noiseless_config(**changes):
    options = dict(
        n_participants=6,
        platform_mix={"platform_A": 6},
        adherence={"platform_A": 1.0},
        grid=week_grid(),
        on_rate=(0.05, 0.2),
        off_rate=(0.1, 0.4),
        q_det=1.0,
        q_spur=0.0,
        badge_wear_probability=0.0,
        seed=17,
    )
    options.update(changes)
    return SimConfig(**options)


# --- Configuration ---

@pytest.mark.parametrize("changes", [
    {"n_participants": 1, "platform_mix": {"platform_A": 1}},
    {"platform_mix": {"platform_A": 5}},
    {"platform_mix": {"badge": 6}},
    {"q_det": 1.5},
    {"on_rate": (0.3, 0.1)},
    {"on_rate": (0.0, 0.0), "off_rate": (0.0, 0.0)},
    {"off_window_bins": -1},
    {"seed": None},
])
def test_invalid_sim_config(changes):
    with pytest.raises(ConfigError):
        noiseless_config(**changes)


def test_sim_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"n_participants": 21, "teleport": True})


def test_sim_config_dict_round_trip():
    config = noiseless_config()
    assert SimConfig.from_dict(config.to_dict()) == config


def test_default_config_is_the_study_setup():
    config = SimConfig()
    assert config.platform_mix == {"platform_A": 9, "platform_B": 12}
    assert config.grid == TimeGrid.study()


# --- Simulation ---

def test_simulation_is_deterministic():
    config = noiseless_config(q_det=0.6, adherence={"platform_A": 0.5}, badge_wear_probability=0.5)
    first = simulate(config)
    second = simulate(config)
    assert first[0] == second[0]
    assert first[1] == second[1]
    assert np.array_equal(first[2].contact, second[2].contact)


def test_seed_changes_the_run():
    app_a, _, _ = simulate(noiseless_config(seed=1))
    app_b, _, _ = simulate(noiseless_config(seed=2))
    assert app_a != app_b


def test_logs_use_roster_devices():
    app_log, badge_log, truth = simulate(noiseless_config(badge_wear_probability=1.0))
    app_ids = set(truth.roster.device_ids(Source.APP))
    badge_ids = set(truth.roster.device_ids(Source.BADGE))
    assert {e.scanner for e in app_log} <= app_ids
    assert {e.scanner for e in badge_log} <= badge_ids
    assert all(e.source is Source.BADGE for e in badge_log)
    assert not any(e.kind is EventKind.SCAN for e in badge_log)
    assert app_log == sorted(app_log, key=lambda e: e.sort_key())


def test_truth_is_symmetric_contact_fraction():
    _, _, truth = simulate(noiseless_config())
    assert np.array_equal(truth.contact, truth.contact.transpose(1, 0, 2))
    assert not truth.contact[np.arange(6), np.arange(6)].any()
    assert np.allclose(truth_network(truth).weights, truth.contact.mean(axis=2))


def test_noiseless_run_recovers_truth_exactly():
    config = noiseless_config()
    app_log, _, truth = simulate(config)
    grid = build_detection_grid(app_log, config.grid, truth.roster, Source.APP)
    estimate = weighted_network(grid)
    assert np.allclose(estimate.weights, truth.true_weights.weights, rtol=0, atol=1e-12)
    assert mantel(estimate, truth.true_weights, n_permutations=99, rng_seed=0).rho == 1.0


def test_spurious_detections_raise_weights():
    base = noiseless_config(q_det=0.7, adjacency_fraction=0.5)
    noisy = noiseless_config(q_det=0.7, adjacency_fraction=0.5, q_spur=0.3)
    weights = []
    for config in (base, noisy):
        app_log, _, truth = simulate(config)
        grid = build_detection_grid(app_log, config.grid, truth.roster, Source.APP)
        weights.append(weighted_network(grid).weights)
    assert np.all(weights[1] >= weights[0])
    assert weights[1].mean() > weights[0].mean()


def test_off_windows_silence_the_app():
    config = noiseless_config(off_window_probability=1.0, off_window_bins=6)
    _, _, truth = simulate(config)
    per_day = truth.app_active.reshape(6, 5, config.grid.daily_bins)
    assert np.all((~per_day).sum(axis=2) >= 1)
    assert np.all((~per_day).sum(axis=2) <= 6)
    assert not (truth.scan_schedule & ~truth.app_active).any()


def test_curve_band_contains_its_mean():
    config = noiseless_config(q_det=0.7, adherence={"platform_A": 0.6}, seed=23)
    app_log, _, truth = simulate(config)
    grid = build_detection_grid(app_log, config.grid, truth.roster, Source.APP)
    curve = resampling_curve(grid, {"truth": truth.true_weights}, (5, 20, 60), repeats=15, rng_seed=23)
    for point in curve.points:
        for stats in point.correlations.values():
            if stats["valid"]:
                assert stats["low"] <= stats["mean"] <= stats["high"]


@pytest.mark.slow
def test_noiseless_study_run_recovers_truth():
    config = SimConfig(
        adherence={"platform_A": 1.0, "platform_B": 1.0}, q_det=1.0, badge_wear_probability=0.0,
        app_telemetry=False, seed=21,
    )
    app_log, _, truth = simulate(config)
    grid = build_detection_grid(app_log, config.grid, truth.roster, Source.APP)
    estimate = weighted_network(grid)
    assert mantel(estimate, truth.true_weights, n_permutations=199, rng_seed=21).rho == 1.0


@pytest.mark.slow
def test_adherence_calibration():
    config = SimConfig(on_rate=(0.0, 0.0), app_telemetry=False, badge_wear_probability=0.0, seed=3)
    app_log, _, truth = simulate(config)
    rates = realized_scan_rates(truth, config.grid)
    assert rates["platform_A"] == pytest.approx(5.64, rel=0.1)
    assert rates["platform_B"] == pytest.approx(1.08, rel=0.1)
    assert sum(e.kind is EventKind.SCAN for e in app_log) == int(truth.scan_schedule.sum())


@pytest.mark.slow
def test_badge_wear_matches_activity_rate():
    grid = TimeGrid(
        start_date="2015-08-17", end_date="2015-09-11", days_of_week={0, 1, 2, 3, 4},
        daily_start="09:00", daily_end="10:00", timezone="Australia/Sydney", bin_seconds=300,
    )
    config = SimConfig(
        n_participants=150, platform_mix={"platform_A": 150}, adherence={"platform_A": 0.0}, grid=grid,
        on_rate=(0.0, 0.0), badge_q_det=0.0, app_telemetry=False, seed=8,
    )
    _, badge_log, truth = simulate(config)
    timelines = compute_timelines(badge_log, grid, truth.roster, Source.BADGE)
    fractions = [timeline.active_fraction for timeline in timelines.values()]
    assert np.mean(fractions) == pytest.approx(0.37, abs=0.03)


@pytest.mark.slow
def test_resampling_curve_against_truth():
    s_values = (10, 50, 100, 250, 500)
    curves, increasing = [], 0
    for seed in range(1, 11):
        config = SimConfig(seed=seed, badge_wear_probability=0.0, app_telemetry=False)
        app_log, _, truth = simulate(config)
        grid = build_detection_grid(app_log, config.grid, truth.roster, Source.APP)
        curve = resampling_curve(grid, {"truth": truth.true_weights}, s_values, repeats=50, rng_seed=seed)
        sizes = [point.roster_n for point in curve.points]
        assert sizes == sorted(sizes, reverse=True)
        assert sizes[0] == 21
        means = curve.means("truth")
        increasing += bool(np.all(np.diff(means) > 0))
        curves.append(means)
    mean_curve = np.mean(curves, axis=0)
    assert np.all(np.diff(mean_curve) > 0)
    assert spearmanr(s_values, mean_curve)[0] > 0.9
    assert increasing >= 8


@pytest.mark.slow
def test_truth_converges_to_the_stationary_contact_fraction():
    grid = TimeGrid(
        start_date="2015-08-17", end_date="2015-12-31", days_of_week={0, 1, 2, 3, 4},
        daily_start="09:00", daily_end="17:00", timezone="UTC", bin_seconds=300,
    )
    config = SimConfig(
        n_participants=4, platform_mix={"platform_A": 4}, adherence={"platform_A": 0.0}, grid=grid,
        on_rate=(0.1, 0.1), off_rate=(0.3, 0.3), badge_wear_probability=0.0, app_telemetry=False, seed=12,
    )
    _, _, truth = simulate(config)
    weights = truth_network(truth).weights
    rows, cols = np.triu_indices(4, k=1)
    assert weights[rows, cols] == pytest.approx(np.full(6, 0.25), abs=0.05)


@pytest.mark.slow
def test_lower_adherence_never_improves_the_estimate():
    for seed in (4, 9):
        rhos, truths = [], []
        for adherence in (1.0, 0.5, 0.2, 0.05):
            config = SimConfig(
                adherence={"platform_A": adherence, "platform_B": adherence}, q_det=1.0,
                badge_wear_probability=0.0, app_telemetry=False, seed=seed,
            )
            app_log, _, truth = simulate(config)
            grid = build_detection_grid(app_log, config.grid, truth.roster, Source.APP)
            rhos.append(mantel(weighted_network(grid), truth.true_weights, n_permutations=99, rng_seed=seed).rho)
            truths.append(truth.contact)
        assert all(np.array_equal(truths[0], contact) for contact in truths[1:])
        assert rhos[0] == 1.0
        assert rhos == sorted(rhos, reverse=True)
