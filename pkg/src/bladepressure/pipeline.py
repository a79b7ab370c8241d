"""Normalization chain from raw acquisitions to per-station statistics.

MEMS channels: outlier filter, atmospheric referencing from the wind-off
segment, then the shift into the scanner frame by ``alpha * q_inf``.
Scanner channels: tube compensation. Both are then aligned on the shared
1 Hz signal and reduced to mean and standard deviation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .flow import ChordStation, FlowConditions, SensorKind
from .sensors import ScannerSpec, tube_response
from .timeseries import TimeSeries

log = logging.getLogger(__name__)

MIN_STATIONARY_S = 10.0


@dataclass(frozen=True)
class CalibrationParams:
    alpha: float = 1.0
    reference_aoa: float = 24.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class StationAggregate:
    station: ChordStation
    aoa: float
    mean: float
    std: float
    n_samples: int

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("std must be non-negative")
        if self.n_samples < 2:
            raise ValueError("an aggregate needs at least two samples")


@dataclass
class AcquisitionRun:
    """One constant-AoA recording with its wind-off segments.

    ``stationary`` maps MEMS channel names to their wind-off record, ``pulses``
    maps every channel to the sync pulse times seen in that channel's clock.
    """

    run_id: str
    aoa: float
    conditions: FlowConditions
    channels: dict[str, TimeSeries]
    stations: dict[str, ChordStation]
    stationary: dict[str, TimeSeries] = field(default_factory=dict)
    pulses: dict[str, np.ndarray] = field(default_factory=dict)
    duration: float = 120.0
    blade_state: str = "instrumented"

    def __post_init__(self):
        if self.blade_state not in ("clean", "instrumented"):
            raise ValueError(f"unknown blade_state {self.blade_state!r}")
        missing = set(self.channels) - set(self.stations)
        if missing:
            raise ValueError(f"channels without a station: {sorted(missing)}")
        for name, seg in self.stationary.items():
            if seg.duration < MIN_STATIONARY_S - 1e-9:
                raise ValueError(f"stationary segment {name} lasts {seg.duration:g} s, need >= 10 s")


def outlier_filter(
    series: TimeSeries, k: float = 6.0, resolution: float = 0.01, max_passes: int = 200
) -> TimeSeries:
    """Replace isolated spikes detected on first differences.

    A sample is a spike when the jump into it and the jump out of it both
    deviate from the median difference by more than ``k`` times the MAD of the
    differences, with opposite signs. The MAD is floored at ``resolution`` (Pa)
    so flat records do not flag rounding-level steps. Spikes are replaced by
    linear interpolation between the nearest kept neighbours. Detection repeats
    until nothing is flagged, so the filter is idempotent.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    x = np.array(series.values, dtype=float)
    if x.size < 8:
        raise ValueError(f"outlier filter needs at least 8 samples, got {x.size}")
    idx = np.arange(x.size)
    for _ in range(max_passes):
        d = np.diff(x)
        dev = d - np.median(d)
        thr = k * max(float(np.median(np.abs(dev))), resolution)
        big = np.abs(dev) > thr
        spike = np.zeros(x.size, dtype=bool)
        spike[1:-1] = big[:-1] & big[1:] & (dev[:-1] * dev[1:] < 0)
        if not spike.any():
            break
        keep = ~spike
        x[spike] = np.interp(idx[spike], idx[keep], x[keep])
    else:
        log.warning("%s: outlier filter did not settle after %d passes", series.channel, max_passes)
    return series.with_values(x)


def estimate_atm(stationary: TimeSeries, min_duration: float = MIN_STATIONARY_S) -> float:
    """Atmospheric pressure as the mean of a wind-off recording."""
    if stationary.duration < min_duration - 1e-9:
        raise ValueError(
            f"{stationary.channel}: stationary segment is {stationary.duration:g} s, "
            f"need at least {min_duration:g} s"
        )
    return float(np.mean(stationary.values))


def delta_mems(series: TimeSeries, p_atm: float) -> TimeSeries:
    """MEMS absolute reading referenced to atmosphere, ``P_i - P_atm``."""
    if not math.isfinite(p_atm):
        raise ValueError("p_atm must be finite")
    return series.with_values(series.values - p_atm)


def to_scanner_frame(series: TimeSeries, q_inf: float, cal: CalibrationParams) -> TimeSeries:
    """Shift atmosphere-referenced MEMS data by ``alpha * q_inf``."""
    if q_inf < 0:
        raise ValueError("q_inf must be non-negative")
    return series.with_values(series.values + q_inf * cal.alpha)


def calibrate_alpha(
    mems_agg: Iterable[StationAggregate],
    scanner_agg: Iterable[StationAggregate],
    q_inf: float,
    reference_aoa: float = 24.0,
    position_tol: float = 1e-6,
) -> CalibrationParams:
    """Fit ``alpha`` so that co-located MEMS and scanner means agree at ``reference_aoa``.

    ``mems_agg`` must hold atmosphere-referenced (not yet shifted) means.
    ``alpha`` is the mean over co-located pairs of
    ``(scanner_mean - mems_mean) / q_inf``.
    """
    if not q_inf > 0:
        raise ValueError("alpha calibration needs a positive dynamic pressure")
    at_ref = lambda aggs: [a for a in aggs if math.isclose(a.aoa, reference_aoa, abs_tol=1e-9)]
    mems = at_ref(mems_agg)
    scanner = at_ref(scanner_agg)
    if not mems or not scanner:
        raise ValueError(f"no aggregates at the reference AoA {reference_aoa}")
    ratios = []
    for m in mems:
        for s in scanner:
            if abs(m.station.position - s.station.position) <= position_tol:
                ratios.append((s.mean - m.mean) / q_inf)
    if not ratios:
        raise ValueError(f"no co-located MEMS/scanner pair at AoA {reference_aoa}")
    return CalibrationParams(alpha=float(np.mean(ratios)), reference_aoa=reference_aoa)


def compensate_tube(
    series: TimeSeries,
    spec: ScannerSpec,
    g_max: float = 20.0,
    model_rate: float | None = None,
) -> TimeSeries:
    """Undo the tube response by clamped frequency-domain division.

    The record is mirrored to avoid a wrap-around jump, divided by the tube
    response (the continuous model, or the discrete one at ``model_rate``) and
    the inverse gain is limited to ``g_max`` in magnitude. A few tube settling
    times at either end should be discarded by the caller.
    """
    if not spec.tube_damping > 0:
        raise ValueError("tube damping must be positive")
    if not g_max >= 1:
        raise ValueError("g_max must be at least 1")
    x = series.values
    n = x.size
    ext = np.concatenate([x, x[::-1]])
    freqs = np.fft.rfftfreq(2 * n, d=1.0 / series.sample_rate)
    inv = 1.0 / tube_response(freqs, spec, model_rate)
    mag = np.abs(inv)
    over = mag > g_max
    inv[over] *= g_max / mag[over]
    y = np.fft.irfft(np.fft.rfft(ext) * inv, 2 * n)[:n]
    return series.with_values(y)


def settling_time(spec: ScannerSpec) -> float:
    """Five time constants of the tube envelope, ``5 / (zeta * 2*pi*f_n)``."""
    return 5.0 / (spec.tube_damping * 2.0 * math.pi * spec.tube_natural_freq)


@dataclass
class AlignedFrame:
    """Streams resampled onto one time grid."""

    time: np.ndarray
    sample_rate: float
    channels: dict[str, np.ndarray]
    clock_offsets: dict[str, float]

    def series(self, channel: str) -> TimeSeries:
        return TimeSeries(channel, float(self.time[0]), self.sample_rate, self.channels[channel])


def estimate_clock_offset(recorded, reference=None) -> float:
    """Mean lag of recorded sync pulses behind the reference pulse train.

    Pulses are paired in order; the reference defaults to whole seconds from 0.
    """
    recorded = np.asarray(recorded, dtype=float)
    if recorded.size < 2:
        raise ValueError("at least two sync pulses are needed")
    if reference is None:
        reference = np.arange(recorded.size, dtype=float)
    reference = np.asarray(reference, dtype=float)
    m = min(recorded.size, reference.size)
    return float(np.mean(recorded[:m] - reference[:m]))


def synchronize_resample(
    streams: Iterable[TimeSeries],
    pulses: Mapping[str, np.ndarray],
    target_rate: float,
    reference=None,
) -> AlignedFrame:
    """Remove each stream's clock offset and interpolate onto a shared grid.

    ``pulses[channel]`` holds the sync pulse times recorded in that stream's
    clock. The grid runs at ``target_rate`` over the span common to all
    corrected streams.
    """
    streams = list(streams)
    if not streams:
        raise ValueError("nothing to synchronize")
    if target_rate > min(s.sample_rate for s in streams) * (1 + 1e-12):
        raise ValueError("target_rate exceeds the slowest stream rate")
    offsets, starts, ends = {}, [], []
    for s in streams:
        rec = np.asarray(pulses[s.channel], dtype=float)
        inside = rec[(rec >= s.start_time - 1e-9) & (rec <= s.end_time + 1e-9)]
        if inside.size < 2:
            raise ValueError(f"{s.channel}: stream spans fewer than two sync pulses")
        off = estimate_clock_offset(rec, reference)
        offsets[s.channel] = off
        starts.append(s.start_time - off)
        ends.append(s.end_time - off)
    t0, t1 = max(starts), min(ends)
    if t1 < t0:
        raise ValueError("streams do not overlap in time")
    m = int(math.floor((t1 - t0) * target_rate + 1e-9)) + 1
    grid = t0 + np.arange(m) / target_rate
    channels = {}
    for s in streams:
        channels[s.channel] = np.interp(grid, s.times() - offsets[s.channel], s.values)
    return AlignedFrame(grid, float(target_rate), channels, offsets)


def aggregate_run(series) -> tuple[float, float]:
    """Mean and sample (N-1) standard deviation."""
    values = np.asarray(series.values if isinstance(series, TimeSeries) else series, dtype=float)
    if values.size < 2:
        raise ValueError("aggregation needs at least two samples")
    return float(np.mean(values)), float(np.std(values, ddof=1))


@dataclass
class ProcessedRun:
    """A run after referencing, tube compensation and alignment, before the alpha shift."""

    run: AcquisitionRun
    frame: AlignedFrame
    trim: int

    def aggregates(self, cal: CalibrationParams | None = None) -> list[StationAggregate]:
        """Per-channel statistics; MEMS channels are moved to the scanner frame when ``cal`` is given."""
        q_inf = self.run.conditions.dynamic_pressure
        out = []
        for name in sorted(self.frame.channels, key=lambda c: (self.run.stations[c].position, c)):
            station = self.run.stations[name]
            s = self.frame.series(name)
            if station.kind is SensorKind.MEMS and cal is not None:
                s = to_scanner_frame(s, q_inf, cal)
            values = s.values[self.trim : s.values.size - self.trim] if self.trim else s.values
            mean, std = aggregate_run(values)
            out.append(StationAggregate(station, self.run.aoa, mean, std, values.size))
        return out


def process_run(
    run: AcquisitionRun,
    scanner_spec: ScannerSpec,
    outlier_k: float = 6.0,
    g_max: float = 20.0,
    model_rate: float | None = None,
    target_rate: float | None = None,
) -> ProcessedRun:
    """Run every per-channel stage of one acquisition and align the channels.

    The grid rate defaults to the slowest channel rate. One tube settling
    window is trimmed from each end of the aligned frame before aggregation.
    """
    processed = []
    for name in sorted(run.channels):
        s = run.channels[name]
        station = run.stations[name]
        if station.kind is SensorKind.MEMS:
            if name not in run.stationary:
                raise ValueError(f"{run.run_id}: no stationary segment for MEMS channel {name}")
            s = outlier_filter(s, outlier_k)
            s = delta_mems(s, estimate_atm(run.stationary[name]))
        else:
            s = compensate_tube(s, scanner_spec, g_max, model_rate)
        processed.append(s)
    rate = target_rate or min(s.sample_rate for s in processed)
    frame = synchronize_resample(processed, run.pulses, rate)
    trim = int(math.ceil(settling_time(scanner_spec) * rate))
    if frame.time.size - 2 * trim < 2:
        trim = 0
    return ProcessedRun(run, frame, trim)
