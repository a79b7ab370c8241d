import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bladepressure.campaign import CampaignManifest, calibrate_runs, simulate_run
from bladepressure.flow import ChordStation, FlowConditions, FlowModelParams, SensorKind, ar1_noise
from bladepressure.pipeline import (
    AcquisitionRun,
    CalibrationParams,
    StationAggregate,
    aggregate_run,
    calibrate_alpha,
    compensate_tube,
    delta_mems,
    estimate_atm,
    estimate_clock_offset,
    outlier_filter,
    process_run,
    settling_time,
    synchronize_resample,
    to_scanner_frame,
)
from bladepressure.sensors import ScannerSpec, apply_tube
from bladepressure.timeseries import TimeSeries

from conftest import mems_stations, tap_stations

finite = st.floats(-1e4, 1e4, allow_nan=False)


def _ts(values, rate=100.0, start=0.0, channel="ch"):
    return TimeSeries(channel, start, rate, np.asarray(values, dtype=float))


def _agg(x, aoa, mean, kind=SensorKind.MEMS, std=1.0):
    return StationAggregate(ChordStation(x, kind), aoa, mean, std, 100)


class TestOutlierFilter:
    def test_spike_removed(self):
        x = np.zeros(20)
        x[2] = 500.0
        npt.assert_array_equal(outlier_filter(_ts(x), k=6).values, 0.0)

    def test_constant_untouched(self):
        x = np.full(50, 101325.0)
        npt.assert_array_equal(outlier_filter(_ts(x)).values, x)

    def test_ramp_untouched(self):
        x = np.linspace(0, 10, 50)
        npt.assert_array_equal(outlier_filter(_ts(x)).values, x)

    def test_spike_in_noise_replaced_by_neighbours(self):
        rng = np.random.default_rng(0)
        x = rng.normal(0, 1.5, 1000)
        x[400] += 300.0
        y = outlier_filter(_ts(x)).values
        assert y[400] == pytest.approx(0.5 * (x[399] + x[401]))

    @pytest.mark.parametrize("seed", range(10))
    def test_ar_noise_rarely_altered(self, seed):
        rng = np.random.default_rng(seed)
        x = 15.0 * ar1_noise(12000, math.exp(-2 * math.pi * 20 / 100), rng)
        y = outlier_filter(_ts(x)).values
        assert np.mean(y != x) < 0.005

    @given(arrays(np.float64, st.integers(8, 200), elements=finite))
    @settings(max_examples=1000, deadline=None)
    def test_idempotent(self, x):
        once = outlier_filter(_ts(x))
        twice = outlier_filter(once)
        npt.assert_array_equal(twice.values, once.values)

    def test_too_short(self):
        with pytest.raises(ValueError):
            outlier_filter(_ts(np.zeros(5)))


class TestReferencing:
    def test_estimate_atm_constant(self):
        assert estimate_atm(_ts(np.full(1000, 101325.0))) == 101325.0

    @pytest.mark.parametrize("seed", range(5))
    def test_estimate_atm_noise(self, seed):
        rng = np.random.default_rng(seed)
        x = 101325.0 + rng.normal(0, 1.5, 1000)
        assert abs(estimate_atm(_ts(x)) - 101325.0) < 3 * 1.5 / math.sqrt(1000)

    def test_estimate_atm_too_short(self):
        with pytest.raises(ValueError, match="10"):
            estimate_atm(_ts(np.zeros(900)))

    def test_delta(self):
        npt.assert_array_equal(delta_mems(_ts(np.full(10, 101000.0)), 101325.0).values, -325.0)
        npt.assert_array_equal(delta_mems(_ts(np.full(10, 101325.0)), 101325.0).values, 0.0)

    @pytest.mark.parametrize("q,alpha,expected", [(980.0, 1.0, -500.0), (0.0, 1.0, -1480.0), (980.0, 0.9, -598.0)])
    def test_to_scanner_frame(self, q, alpha, expected):
        out = to_scanner_frame(_ts(np.full(5, -1480.0)), q, CalibrationParams(alpha))
        npt.assert_allclose(out.values, expected, atol=1e-9)

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValueError):
            CalibrationParams(alpha=0.0)


class TestCalibrateAlpha:
    def test_hand_computed(self):
        mems = [_agg(0.28, 24.0, -1482.0), _agg(0.34, 24.0, -1480.0), _agg(0.3, 24.0, 0.0)]
        taps = [_agg(0.28, 24.0, -500.0, SensorKind.TAP), _agg(0.34, 24.0, -500.0, SensorKind.TAP)]
        cal = calibrate_alpha(mems, taps, 980.0)
        assert cal.alpha == pytest.approx(((982.0 / 980.0) + 1.0) / 2)

    def test_no_pair(self):
        with pytest.raises(ValueError, match="co-located"):
            calibrate_alpha([_agg(0.3, 24.0, 0.0)], [_agg(0.28, 24.0, 0.0, SensorKind.TAP)], 980.0)

    def test_no_reference_aoa(self):
        with pytest.raises(ValueError, match="reference"):
            calibrate_alpha([_agg(0.3, 20.0, 0.0)], [_agg(0.3, 20.0, 0.0, SensorKind.TAP)], 980.0)

    @pytest.mark.parametrize("beta", [0.9, 1.0])
    def test_noise_free_simulation(self, beta):
        m = CampaignManifest(
            aoa_list=[24.0], stagnation_factor=beta, noise_free=True, duration=12.0,
            stations=mems_stations([0.28, 0.4, 0.55]) + tap_stations([0.28, 0.4, 0.55]),
            blade_states=["instrumented"],
        )
        run = simulate_run(m, "instrumented", 24.0)
        cal = calibrate_runs([process_run(run, m.scanner_spec())], 24.0)
        assert cal.alpha == pytest.approx(beta, abs=1e-6)

    @pytest.mark.slow
    @given(beta=st.floats(0.8, 1.2), seed=st.integers(0, 10_000))
    @settings(max_examples=5, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    def test_recovery_under_default_noise(self, beta, seed):
        pos = [0.28, 0.34, 0.40, 0.49, 0.52, 0.55]
        m = CampaignManifest(
            aoa_list=[24.0], stagnation_factor=beta, seed=seed,
            stations=mems_stations(pos) + tap_stations(pos), blade_states=["instrumented"],
        )
        run = simulate_run(m, "instrumented", 24.0)
        cal = calibrate_runs([process_run(run, m.scanner_spec())], 24.0)
        assert abs(cal.alpha - beta) <= 0.01


class TestCompensateTube:
    SPEC = ScannerSpec()

    def test_constant(self):
        out = compensate_tube(_ts(np.full(512, -500.0), rate=512.0), self.SPEC)
        npt.assert_allclose(out.values, -500.0, atol=1e-9)

    @pytest.mark.parametrize("model_rate", [None, 12800.0])
    def test_round_trip_20hz(self, model_rate):
        fs_truth, fs = 12800.0, 512.0
        t = np.arange(int(4 * fs_truth)) / fs_truth
        truth = _ts(100 * np.sin(2 * np.pi * 20 * t), rate=fs_truth)
        sampled = apply_tube(truth, self.SPEC).values[::25]
        out = compensate_tube(_ts(sampled, rate=fs), self.SPEC, model_rate=model_rate).values
        trim = int(math.ceil(settling_time(self.SPEC) * fs))
        ref = truth.values[::25]
        err = out[trim:-trim] - ref[trim:-trim]
        assert np.sqrt(np.mean(err**2)) / np.sqrt(np.mean(ref**2)) < 0.01

    @pytest.mark.parametrize("fs", [512.0, 2048.0, 12800.0])
    def test_noise_gain_bounded(self, fs):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(8192)
        y = compensate_tube(_ts(x, rate=fs), self.SPEC).values
        assert np.sqrt(np.mean(y**2)) <= 20.0 * np.sqrt(np.mean(x**2))

    def test_invalid_gmax(self):
        with pytest.raises(ValueError):
            compensate_tube(_ts(np.zeros(16), rate=512.0), self.SPEC, g_max=0.5)


class TestSynchronize:
    @staticmethod
    def _signal(n, rate, seed=0):
        rng = np.random.default_rng(seed)
        return 10 * ar1_noise(n, math.exp(-2 * math.pi * 5 / rate), rng)

    def test_constructed_offset(self):
        x = self._signal(1000, 100.0)
        a = _ts(x, channel="a")
        b = _ts(x, start=0.25, channel="b")
        pulses = {"a": np.arange(11.0), "b": np.arange(11.0) + 0.25}
        frame = synchronize_resample([a, b], pulses, 100.0)
        assert frame.clock_offsets["b"] == pytest.approx(0.25)
        ya, yb = frame.channels["a"], frame.channels["b"]
        npt.assert_allclose(ya, yb, atol=1e-9)
        ya0, yb0 = ya - ya.mean(), yb - yb.mean()
        xc = np.correlate(ya0, yb0, mode="full")
        assert np.argmax(xc) - (len(ya) - 1) == 0

    def test_single_stream_identity(self):
        x = self._signal(500, 100.0)
        frame = synchronize_resample([_ts(x, channel="a")], {"a": np.arange(6.0)}, 100.0)
        npt.assert_allclose(frame.channels["a"], x, atol=1e-9)

    def test_multi_rate(self):
        fast = _ts(np.ones(512 * 3), rate=512.0, channel="scan")
        slow = _ts(np.ones(300), rate=100.0, start=0.005, channel="mems")
        pulses = {"scan": np.arange(4.0), "mems": np.arange(4.0)}
        frame = synchronize_resample([fast, slow], pulses, 100.0)
        assert frame.sample_rate == 100.0
        npt.assert_allclose(np.diff(frame.time), 0.01)
        assert frame.time[0] >= max(fast.start_time, slow.start_time) - 1e-12
        assert frame.time[-1] <= min(fast.end_time, slow.end_time) + 1e-12

    def test_target_above_slowest(self):
        with pytest.raises(ValueError):
            synchronize_resample([_ts(np.ones(300), channel="a")], {"a": np.arange(4.0)}, 200.0)

    def test_clock_offset_needs_two(self):
        with pytest.raises(ValueError):
            estimate_clock_offset([0.1])


class TestAggregate:
    def test_textbook(self):
        assert aggregate_run([1.0, 2.0, 3.0]) == (2.0, 1.0)

    def test_constant(self):
        assert aggregate_run(np.full(10, -7.5)) == (-7.5, 0.0)

    @given(
        arrays(np.float64, st.integers(2, 100), elements=st.floats(-1e3, 1e3)),
        st.floats(-10, 10), st.floats(-1e3, 1e3),
    )
    def test_shift_scale(self, x, a, b):
        m, s = aggregate_run(x)
        m2, s2 = aggregate_run(a * x + b)
        assert m2 == pytest.approx(a * m + b, abs=1e-7 * (1 + abs(a) * np.max(np.abs(x)) + abs(b)))
        assert s2 == pytest.approx(abs(a) * s, abs=1e-7 * (1 + abs(a) * np.max(np.abs(x))))

    @pytest.mark.parametrize("seed", range(3))
    def test_ar_std(self, seed):
        rng = np.random.default_rng(seed)
        x = 15.0 * ar1_noise(12000, math.exp(-2 * math.pi * 20 / 100), rng)
        assert aggregate_run(x)[1] == pytest.approx(15.0, rel=0.05)

    def test_single_sample(self):
        with pytest.raises(ValueError):
            aggregate_run([1.0])


class TestProcessRun:
    def test_missing_stationary(self):
        m = CampaignManifest(aoa_list=[0.0], duration=12.0, stations=mems_stations([0.3]) + tap_stations([0.3]),
                             blade_states=["instrumented"])
        run = simulate_run(m, "instrumented", 0.0)
        run.stationary.clear()
        with pytest.raises(ValueError, match="stationary"):
            process_run(run, m.scanner_spec())

    def test_short_stationary_rejected(self):
        with pytest.raises(ValueError, match="10 s"):
            AcquisitionRun("r", 0.0, FlowConditions(), {"a": _ts(np.zeros(10), channel="a")},
                           {"a": ChordStation(0.3)}, stationary={"a": _ts(np.zeros(900))})

    def test_clock_offsets_removed(self):
        kw = dict(aoa_list=[0.0], duration=12.0, noise_free=True, blade_states=["instrumented"],
                  stations=mems_stations([0.3]) + tap_stations([0.3]))
        ref = process_run(simulate_run(CampaignManifest(**kw), "instrumented", 0.0), ScannerSpec())
        shifted_m = CampaignManifest(**kw, mems_clock_offset=0.2, scanner_clock_offset=-0.1)
        shifted = process_run(simulate_run(shifted_m, "instrumented", 0.0), ScannerSpec())
        for a, b in zip(ref.aggregates(CalibrationParams()), shifted.aggregates(CalibrationParams())):
            assert a.mean == pytest.approx(b.mean, abs=1e-6)
