"""Emulated acquisition chains.

Two chains observe the same ground-truth field:

* a MEMS barometer array on the surface, reporting absolute pressure at a low
  rate with white noise and a static per-channel offset;
* pressure taps connected through vinyl tubing to a scanner, reporting
  ``P_i - P_inf`` at a higher rate after the tube/cavity resonance.

The boards share a 1 Hz synchronization signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import signal

from .flow import FlowConditions
from .timeseries import TimeSeries, derive_seed


@dataclass(frozen=True)
class MemsSpec:
    """LPS28DFW-class barometer.

    ``noise_rms`` is the relative accuracy treated as white noise and
    ``offset_bound`` the absolute accuracy treated as a fixed offset per channel.
    """

    sample_rate: float = 100.0
    noise_rms: float = 1.5
    offset_bound: float = 50.0
    power_per_sensor: float = 0.16  # mW at 100 Hz
    height: float = 1.95  # mm

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.noise_rms < 0 or self.offset_bound < 0 or self.power_per_sensor < 0:
            raise ValueError("noise_rms, offset_bound and power_per_sensor must be non-negative")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class ScannerSpec:
    """Multiplexed differential scanner behind pneumatic tubing.

    ``accuracy_bound`` and ``static_error_fraction`` (of ``full_scale``) are
    separate knobs; the datasheet figures behind them are not reconciled.
    """

    sample_rate: float = 512.0
    noise_rms: float = 1.0
    accuracy_bound: float = 7.5
    tube_natural_freq: float = 250.0
    tube_damping: float = 0.25
    characterization_rate: float = 1024.0
    static_error_fraction: float = 3e-4
    full_scale: float = 2500.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.noise_rms < 0 or self.accuracy_bound < 0:
            raise ValueError("noise_rms and accuracy_bound must be non-negative")
        if not 0 < self.tube_damping < 1:
            raise ValueError(f"tube_damping must lie in (0, 1), got {self.tube_damping}")
        if not 0 < self.tube_natural_freq < self.characterization_rate / 2:
            raise ValueError("tube_natural_freq must be below half the characterization rate")

    @property
    def static_error_bound(self) -> float:
        return self.static_error_fraction * self.full_scale

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: float(v) for k, v in d.items()})


def _rate_ratio(src: float, dst: float) -> int:
    ratio = src / dst
    r = int(round(ratio))
    if r < 1 or abs(ratio - r) > 1e-9 * ratio:
        raise ValueError(f"source rate {src} Hz is not an integer multiple of {dst} Hz")
    return r


def block_mean(values: np.ndarray, r: int) -> np.ndarray:
    """Mean of consecutive blocks of ``r`` samples; a trailing partial block is dropped."""
    m = values.size // r
    return values[: m * r].reshape(m, r).mean(axis=1)


def draw_mems_offset(spec: MemsSpec, seed: int) -> float:
    """Static offset of one MEMS channel, uniform in ``[-offset_bound, offset_bound]``."""
    rng = np.random.default_rng(derive_seed(seed, "mems-offset"))
    return float(rng.uniform(-spec.offset_bound, spec.offset_bound))


def draw_scanner_offset(spec: ScannerSpec, seed: int) -> float:
    rng = np.random.default_rng(derive_seed(seed, "scanner-offset"))
    return float(rng.uniform(-spec.accuracy_bound, spec.accuracy_bound))


def mems_acquire(
    truth: TimeSeries,
    spec: MemsSpec,
    fc: FlowConditions,
    seed: int,
    offset: float | None = None,
    channel: str | None = None,
) -> TimeSeries:
    """Absolute pressure as recorded by one MEMS barometer.

    Each output sample is the block mean of the truth over one MEMS period,
    time-stamped at the block centre, plus ``P_atm - beta*q_inf``, the static
    offset and white noise. ``offset`` defaults to a draw from ``seed``; pass
    it explicitly to keep one offset across several recordings of a channel.
    """
    r = _rate_ratio(truth.sample_rate, spec.sample_rate)
    blocks = block_mean(truth.values, r)
    if offset is None:
        offset = draw_mems_offset(spec, seed)
    elif abs(offset) > spec.offset_bound:
        raise ValueError(f"offset {offset} exceeds offset_bound {spec.offset_bound}")
    rng = np.random.default_rng(derive_seed(seed, "mems-noise"))
    noise = spec.noise_rms * rng.standard_normal(blocks.size) if spec.noise_rms > 0 else 0.0
    base = fc.atmospheric_pressure - fc.stagnation_factor * fc.dynamic_pressure + offset
    values = base + blocks + noise
    start = truth.start_time + (r - 1) / (2.0 * truth.sample_rate)
    return TimeSeries(channel or truth.channel, start, spec.sample_rate, values)


def _prewarped_omega(spec: ScannerSpec, fs: float) -> float:
    if spec.tube_natural_freq >= fs / 2:
        raise ValueError(f"tube natural frequency must be below Nyquist of {fs} Hz")
    return 2.0 * fs * math.tan(math.pi * spec.tube_natural_freq / fs)


def tube_filter(spec: ScannerSpec, fs: float):
    """Bilinear discretization at ``fs`` of the unity-DC second-order tube model.

    The natural frequency is pre-warped so the discrete resonance sits exactly
    at ``tube_natural_freq``. Returns ``(b, a)``.
    """
    wn = _prewarped_omega(spec, fs)
    zeta = spec.tube_damping
    return signal.bilinear([wn * wn], [1.0, 2.0 * zeta * wn, wn * wn], fs=fs)


def tube_response(freqs, spec: ScannerSpec, fs: float | None = None) -> np.ndarray:
    """Complex tube response at ``freqs`` (Hz).

    With ``fs`` the response of the discrete model from :func:`tube_filter`,
    otherwise the continuous-time model.
    """
    freqs = np.asarray(freqs, dtype=float)
    if fs is not None:
        b, a = tube_filter(spec, fs)
        _, h = signal.freqz(b, a, worN=freqs, fs=fs)
        return h
    wn = 2.0 * math.pi * spec.tube_natural_freq
    w = 2.0 * math.pi * freqs
    return wn * wn / (wn * wn - w * w + 2j * spec.tube_damping * wn * w)


def apply_tube(truth: TimeSeries, spec: ScannerSpec) -> TimeSeries:
    """Pass the truth through the tube at its own rate, starting from steady state."""
    b, a = tube_filter(spec, truth.sample_rate)
    x = truth.values
    zi = signal.lfilter_zi(b, a) * x[0]
    y, _ = signal.lfilter(b, a, x, zi=zi)
    return truth.with_values(y)


def scanner_acquire(
    truth: TimeSeries,
    spec: ScannerSpec,
    seed: int,
    offset: float = 0.0,
    channel: str | None = None,
) -> TimeSeries:
    """Differential pressure as recorded by one scanner channel.

    The truth is filtered by the tube at the truth rate, then sampled every
    ``truth_rate / sample_rate`` samples, plus white noise and ``offset``.
    """
    r = _rate_ratio(truth.sample_rate, spec.sample_rate)
    filtered = apply_tube(truth, spec).values
    m = filtered.size // r
    sampled = filtered[: m * r : r]
    rng = np.random.default_rng(derive_seed(seed, "scanner-noise"))
    noise = spec.noise_rms * rng.standard_normal(m) if spec.noise_rms > 0 else 0.0
    return TimeSeries(channel or truth.channel, truth.start_time, spec.sample_rate, sampled + noise + offset)


def sync_pulses(duration: float) -> np.ndarray:
    """Timestamps of the 1 Hz synchronization signal over ``duration`` seconds."""
    if not duration > 0:
        raise ValueError("duration must be positive")
    return np.arange(math.floor(duration) + 1, dtype=float)


def sensing_power(spec: MemsSpec, n_sensors: int) -> float:
    """Total sensing power in mW for ``n_sensors`` barometers."""
    if n_sensors < 0:
        raise ValueError("n_sensors must be non-negative")
    return n_sensors * spec.power_per_sensor
