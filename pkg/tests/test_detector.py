"""Sliding-window analysis and change-detector behavior."""

import numpy as np
import pytest

from ospfrqa import detect, ingest, rqa
from ospfrqa.detect import Alert, DetectorConfig, MeasureSeries


def count_series(counts, bin_size=10, start_us=0):
    return ingest.CountSeries(start_us, bin_size, np.asarray(counts))


def synthetic_measures(values_by_name, bin_size=10):
    n = len(next(iter(values_by_name.values())))
    return MeasureSeries(
        window_end_bins=np.arange(199, 199 + n),
        values={name: np.asarray(v, dtype=float) for name, v in values_by_name.items()},
        bin_size_s=bin_size,
        start_us=0,
    )


def flat_config(**kw):
    # unit floors keep synthetic-series scores easy to reason about
    defaults = dict(
        window_bins=200, baseline_bins=20, k_mad=6.0,
        measures_enabled=("rr",), floors={"rr": 0.01},
    )
    defaults.update(kw)
    return DetectorConfig(**defaults)


class TestSlidingRqa:
    def test_single_window(self):
        cfg = DetectorConfig()
        ms = detect.sliding_rqa(count_series([1, 0, 2] * 67), cfg)  # 201 bins
        assert len(ms) == 2
        assert ms.window_end_bins.tolist() == [199, 200]

    def test_series_shorter_than_window_errors(self):
        with pytest.raises(rqa.SeriesTooShortError):
            detect.sliding_rqa(count_series([1] * 50), DetectorConfig())

    def test_constant_series_degenerate_throughout(self):
        cfg = DetectorConfig()
        ms = detect.sliding_rqa(count_series([3] * 220), cfg)
        assert ms.degenerate_windows == len(ms)
        assert np.all(ms.values["rr"] == 1.0)
        assert np.all(ms.values["det"] == 1.0)

    def test_spike_windows_differ_from_quiet(self):
        counts = np.zeros(420, dtype=int)
        counts[::180] = 1  # keep every window non-degenerate
        counts[300] = 25
        cfg = DetectorConfig()
        ms = detect.sliding_rqa(count_series(counts), cfg)
        ends = ms.window_end_bins
        with_spike = ms.values["rr"][np.searchsorted(ends, 310)]
        without = ms.values["rr"][np.searchsorted(ends, 240)]
        assert with_spike != without

    def test_step_bins(self):
        cfg = DetectorConfig(step_bins=5)
        ms = detect.sliding_rqa(count_series([1, 0] * 150), cfg)
        assert np.all(np.diff(ms.window_end_bins) == 5)

    def test_shift_invariance(self):
        rng = np.random.default_rng(3)
        counts = rng.poisson(0.4, size=260)
        cfg = DetectorConfig()
        a = detect.sliding_rqa(count_series(counts), cfg)
        b = detect.sliding_rqa(count_series(counts + 9), cfg)
        for name in rqa.MEASURE_NAMES:
            assert np.array_equal(a.values[name], b.values[name]), name


class TestDetect:
    def test_too_short_for_baseline_returns_empty(self):
        ms = synthetic_measures({"rr": np.ones(15)})
        assert detect.detect(ms, flat_config()) == []

    def test_step_change_alerts_within_two_windows(self):
        rng = np.random.default_rng(0)
        v = 0.5 + 0.002 * rng.normal(size=120)
        v[70:] += 0.3
        alerts = detect.detect(synthetic_measures({"rr": v}), flat_config())
        assert alerts
        first = alerts[0]
        step_bin = int(synthetic_measures({"rr": v}).window_end_bins[70])
        assert step_bin <= first.bin_index <= step_bin + 2
        assert first.triggered[0].name == "rr"
        assert first.severity >= 6.0

    def test_stationary_noise_no_alerts(self):
        rng = np.random.default_rng(42)
        v = 0.5 + 0.01 * rng.normal(size=1000)
        alerts = detect.detect(synthetic_measures({"rr": v}), flat_config())
        assert alerts == []

    def test_contiguous_run_collapses_to_one_alert(self):
        v = np.full(80, 0.5)
        v[50:60] = 0.9
        alerts = detect.detect(synthetic_measures({"rr": v}), flat_config())
        assert len(alerts) >= 1
        bins = [a.bin_index for a in alerts]
        assert bins[0] == 199 + 50
        # the deviant stretch 50..59 produces exactly one alert
        assert sum(1 for b in bins if 199 + 50 <= b < 199 + 60) == 1

    def test_warm_up_invariant(self):
        rng = np.random.default_rng(7)
        v = 0.5 + 0.001 * rng.normal(size=300)
        v[rng.integers(0, 300, size=40)] += 0.5  # fires wherever allowed
        cfg = flat_config(baseline_bins=40)
        alerts = detect.detect(synthetic_measures({"rr": v}), cfg)
        assert alerts
        assert min(a.bin_index for a in alerts) >= 199 + 40

    def test_causality_truncation(self):
        rng = np.random.default_rng(5)
        v = 0.5 + 0.002 * rng.normal(size=200)
        v[100:110] += 0.2
        v[150:] += 0.4
        cfg = flat_config()
        full = detect.detect(synthetic_measures({"rr": v}), cfg)
        cut = detect.detect(synthetic_measures({"rr": v[:120]}), cfg)
        horizon = 199 + 120
        assert [a.bin_index for a in full if a.bin_index < horizon] == \
               [a.bin_index for a in cut]

    def test_doubling_k_shrinks_deviant_set(self):
        # The provable sensitivity property: raising the threshold can only
        # remove deviant windows.  (Alert counts can occasionally rise when
        # a long post-event deviant run splits; scores cannot.)
        rng = np.random.default_rng(11)
        for _ in range(10):
            v = 0.5 + 0.005 * rng.normal(size=400)
            for at in rng.integers(30, 380, size=3):
                v[at : at + rng.integers(2, 20)] += rng.uniform(0.05, 0.5)
            ms = synthetic_measures({"rr": v})
            scores, _ = detect.deviation_scores(ms, flat_config())
            hi = set(np.flatnonzero(scores["rr"] >= 12.0))
            lo = set(np.flatnonzero(scores["rr"] >= 6.0))
            assert hi <= lo

    def test_doubling_k_alerts_stay_inside_deviant_stretches(self):
        # Raising the threshold never creates an alert in a stretch that
        # was clean at the lower threshold.  (The raw alert COUNT is not
        # monotone: a run whose score plateau wobbles across the higher
        # threshold splits in two.)
        rng = np.random.default_rng(13)
        for _ in range(20):
            v = 0.5 + 0.005 * rng.normal(size=400)
            starts = rng.choice(np.arange(30, 360, 45), size=rng.integers(1, 4), replace=False)
            for at in starts:
                v[at : at + rng.integers(2, 8)] += rng.uniform(0.1, 0.5)
            ms = synthetic_measures({"rr": v})
            scores, _ = detect.deviation_scores(ms, flat_config())
            deviant_low = set(ms.window_end_bins[np.flatnonzero(scores["rr"] >= 6.0)])
            for alert in detect.detect(ms, flat_config(k_mad=12.0)):
                assert alert.bin_index in deviant_low

    def test_multiple_measures_reported(self):
        v1 = np.full(60, 0.5)
        v2 = np.full(60, 2.0)
        v1[40:] = 0.9
        v2[40:] = 4.0
        ms = synthetic_measures({"rr": v1, "tt": v2})
        cfg = flat_config(measures_enabled=("rr", "tt"), floors={"rr": 0.01, "tt": 0.05})
        alerts = detect.detect(ms, cfg)
        assert {t.name for t in alerts[0].triggered} == {"rr", "tt"}
        assert alerts[0].severity == max(t.deviation_score for t in alerts[0].triggered)

    def test_floor_scale_tames_alerts(self):
        v = np.full(60, 0.5)
        v[40:] = 0.56
        ms = synthetic_measures({"rr": v})
        assert detect.detect(ms, flat_config()) != []
        assert detect.detect(ms, flat_config(floor_scale=10.0)) == []


class TestSerialization:
    def test_measures_csv_round_shape(self, tmp_path):
        cfg = DetectorConfig()
        ms = detect.sliding_rqa(count_series([1, 0, 0, 2] * 60), cfg)
        path = tmp_path / "measures.csv"
        detect.write_measures_csv(path, ms)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "window_end_bin,t_s," + ",".join(rqa.MEASURE_NAMES)
        assert len(lines) == len(ms) + 1

    def test_alerts_jsonl_round_trip(self, tmp_path):
        alerts = [Alert(
            bin_index=250, time_s=2510.0,
            triggered=(detect.TriggeredMeasure("rr", 0.9, 0.5, 12.5),),
            severity=12.5,
        )]
        path = tmp_path / "alerts.jsonl"
        detect.write_alerts_jsonl(path, alerts)
        back = detect.read_alerts_jsonl(path)
        assert back == alerts


class TestAnalyzeRun:
    def test_composition(self):
        events = [
            ingest.LsaEvent(int(t * 1e6), "m", 1, "10.0.0.1", "10.0.0.1", 2, -2147483600)
            for t in range(0, 3000, 600)
        ]
        cfg = DetectorConfig(window_bins=30, baseline_bins=10)
        series, ms, alerts = detect.analyze_run(
            events, ingest.EventFilter(monitor="m"), cfg, 0, 3_000_000_000, bin_size_s=10,
        )
        assert len(series) == 300
        assert len(ms) == 271
        assert isinstance(alerts, list)
