"""Synthetic ground-truth surface pressure on the suction side of a blade section.

The mean field is affine in angle of attack while the flow is attached and is
blended towards a constant plateau downstream of a separation front that moves
from the trailing edge (``te_separation_aoa``) to the leading edge
(``full_separation_aoa``). Fluctuations are first-order autoregressive noise
whose standard deviation peaks at the front and rises again once the section
is fully stalled.

All pressures are differential, ``P_i - P_inf``, in Pa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np
from scipy import signal

from .timeseries import TimeSeries

MAX_SAMPLES = 2**27


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def dynamic_pressure(rho: float, speed: float) -> float:
    """Free-stream dynamic pressure ``0.5 * rho * U**2`` in Pa."""
    _check_finite("air density", rho)
    _check_finite("wind speed", speed)
    if rho <= 0:
        raise ValueError(f"air density must be positive, got {rho}")
    if speed < 0:
        raise ValueError(f"wind speed must be non-negative, got {speed}")
    return 0.5 * rho * speed * speed


@dataclass(frozen=True)
class FlowConditions:
    """Free-stream state of the tunnel.

    ``stagnation_factor`` scales the Bernoulli link between atmospheric and
    free-stream pressure, ``P_atm = P_inf + stagnation_factor * q_inf``. The
    value 1 is the ideal relation; other values emulate the mismatch that the
    calibration coefficient absorbs in processing.
    """

    wind_speed: float = 40.0
    air_density: float = 1.225
    atmospheric_pressure: float = 101325.0
    stagnation_factor: float = 1.0
    reynolds: float = 3.5e6
    mach: float = 0.12

    def __post_init__(self):
        for f in fields(self):
            _check_finite(f.name, getattr(self, f.name))
        if self.wind_speed < 0:
            raise ValueError("wind_speed must be non-negative")
        if self.air_density <= 0:
            raise ValueError("air_density must be positive")
        if self.atmospheric_pressure <= 0:
            raise ValueError("atmospheric_pressure must be positive")
        if self.stagnation_factor <= 0:
            raise ValueError("stagnation_factor must be positive")

    @property
    def dynamic_pressure(self) -> float:
        return dynamic_pressure(self.air_density, self.wind_speed)

    @property
    def free_stream_pressure(self) -> float:
        return self.atmospheric_pressure - self.stagnation_factor * self.dynamic_pressure

    def still_air(self) -> "FlowConditions":
        """Same atmosphere with the wind off."""
        return FlowConditions(
            wind_speed=0.0,
            air_density=self.air_density,
            atmospheric_pressure=self.atmospheric_pressure,
            stagnation_factor=self.stagnation_factor,
            reynolds=0.0,
            mach=0.0,
        )

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["dynamic_pressure"] = self.dynamic_pressure
        d["free_stream_pressure"] = self.free_stream_pressure
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FlowConditions":
        known = {f.name for f in fields(cls)}
        derived = {"dynamic_pressure", "free_stream_pressure"}
        unknown = set(d) - known - derived
        if unknown:
            raise ValueError(f"unknown flow condition field(s): {sorted(unknown)}")
        fc = cls(**{k: float(v) for k, v in d.items() if k in known})
        # derived values are recomputed; a stored copy must agree with them
        for name in derived & set(d):
            stored, actual = float(d[name]), getattr(fc, name)
            if not math.isclose(stored, actual, rel_tol=1e-9, abs_tol=1e-9):
                raise ValueError(f"{name}={stored} inconsistent with recomputed value {actual}")
        return fc


@dataclass(frozen=True)
class FlowModelParams:
    linear_regime: tuple[float, float] = (-10.0, 8.0)
    te_separation_aoa: float = 10.0
    full_separation_aoa: float = 26.0
    plateau_pressure: float = -500.0
    slope_coeffs: tuple[float, float] = (150.0, 140.0)
    offset_pressure: float = -100.0
    blend_width: float = 0.03
    base_std: float = 15.0
    peak_std: float = 120.0
    peak_width: float = 0.08
    stall_std: float = 60.0
    fluctuation_cutoff: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "linear_regime", tuple(float(v) for v in self.linear_regime))
        object.__setattr__(self, "slope_coeffs", tuple(float(v) for v in self.slope_coeffs))
        if len(self.linear_regime) != 2 or self.linear_regime[0] >= self.linear_regime[1]:
            raise ValueError("linear_regime must be an increasing [min, max] pair")
        if len(self.slope_coeffs) != 2:
            raise ValueError("slope_coeffs must be a pair (s0, s1)")
        for f in fields(self):
            v = getattr(self, f.name)
            for item in v if isinstance(v, tuple) else (v,):
                _check_finite(f.name, item)
        if self.te_separation_aoa >= self.full_separation_aoa:
            raise ValueError("te_separation_aoa must be below full_separation_aoa")
        if self.blend_width <= 0 or self.peak_width <= 0:
            raise ValueError("blend_width and peak_width must be positive")
        if min(self.base_std, self.peak_std, self.stall_std) < 0:
            raise ValueError("fluctuation standard deviations must be non-negative")
        if self.plateau_pressure >= 0:
            raise ValueError("plateau_pressure must be negative (suction)")
        if self.fluctuation_cutoff <= 0:
            raise ValueError("fluctuation_cutoff must be positive")

    def slope(self, x_c):
        """Attached-flow pressure slope in Pa/deg at chord fraction ``x_c``."""
        s0, s1 = self.slope_coeffs
        return -(s0 - s1 * np.asarray(x_c, dtype=float))

    def quiet(self) -> "FlowModelParams":
        """Copy with every fluctuation amplitude set to zero."""
        return self.replace(base_std=0.0, peak_std=0.0, stall_std=0.0)

    def replace(self, **changes) -> "FlowModelParams":
        d = self.to_dict()
        d.update(changes)
        return FlowModelParams.from_dict(d)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["linear_regime"] = list(d["linear_regime"])
        d["slope_coeffs"] = list(d["slope_coeffs"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FlowModelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown flow model field(s): {sorted(unknown)}")
        kw = {}
        for k, v in d.items():
            kw[k] = tuple(float(x) for x in v) if k in ("linear_regime", "slope_coeffs") else float(v)
        return cls(**kw)


class SensorKind(str, Enum):
    MEMS = "mems"
    TAP = "tap"


@dataclass(frozen=True)
class ChordStation:
    position: float
    kind: SensorKind = SensorKind.MEMS
    label: str = ""

    def __post_init__(self):
        pos = float(self.position)
        if not (0.0 <= pos <= 1.0):
            raise ValueError(f"station position must lie in [0, 1], got {pos}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "kind", SensorKind(self.kind))
        if not self.label:
            object.__setattr__(self, "label", f"{self.kind.value}_{pos:.3f}")


def separation_front(aoa: float, params: FlowModelParams) -> float:
    """Chord fraction of the separation front at ``aoa`` degrees.

    1 (trailing edge) up to ``te_separation_aoa``, then linear down to 0 at
    ``full_separation_aoa``.
    """
    if aoa <= params.te_separation_aoa:
        return 1.0
    span = params.full_separation_aoa - params.te_separation_aoa
    return min(1.0, max(0.0, 1.0 - (aoa - params.te_separation_aoa) / span))


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def mean_pressure(station, aoa: float, fc: FlowConditions, params: FlowModelParams) -> float:
    """Mean differential pressure at a station.

    ``fc`` is accepted for interface symmetry; the model is expressed directly
    in Pa at the reference tunnel speed.
    """
    x = station.position if isinstance(station, ChordStation) else float(station)
    x_sep = separation_front(aoa, params)
    attached = params.slope(x) * aoa + params.offset_pressure
    w = _logistic((x - x_sep) / params.blend_width)
    return float(w * params.plateau_pressure + (1.0 - w) * attached)


def fluctuation_std(station, aoa: float, params: FlowModelParams) -> float:
    """Standard deviation of the pressure fluctuations at a station, Pa."""
    x = station.position if isinstance(station, ChordStation) else float(station)
    if aoa < params.te_separation_aoa:
        return params.base_std
    if aoa >= params.full_separation_aoa:
        return params.base_std + params.stall_std
    x_sep = separation_front(aoa, params)
    return params.base_std + params.peak_std * math.exp(-(((x - x_sep) / params.peak_width) ** 2))


def ar1_noise(n: int, coeff: float, rng: np.random.Generator) -> np.ndarray:
    """Stationary unit-variance AR(1) sequence ``y[k] = a*y[k-1] + sqrt(1-a^2)*e[k]``."""
    y0 = rng.standard_normal()
    e = rng.standard_normal(n)
    gain = math.sqrt(1.0 - coeff * coeff)
    y, _ = signal.lfilter([gain], [1.0, -coeff], e, zi=[coeff * y0])
    return y


def ground_truth_series(
    station,
    aoa: float,
    fc: FlowConditions,
    params: FlowModelParams,
    duration: float,
    master_rate: float = 2048.0,
    seed: int = 0,
    channel: str | None = None,
) -> TimeSeries:
    """Sampled ground-truth pressure ``mean + sigma * AR(1)`` at one station.

    The AR coefficient is ``exp(-2*pi*fc/master_rate)`` with ``fc`` the
    fluctuation cutoff, so the process has unit long-run variance and a
    first-order spectrum rolling off above the cutoff.
    """
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if master_rate < 2 * params.fluctuation_cutoff:
        raise ValueError("master_rate must be at least twice the fluctuation cutoff")
    n_float = duration * master_rate
    if not math.isfinite(n_float) or n_float > MAX_SAMPLES:
        raise ValueError(f"{n_float:.3g} samples exceeds the budget of {MAX_SAMPLES}")
    n = int(round(n_float))
    if n < 1:
        raise ValueError("duration too short for a single sample")

    mu = mean_pressure(station, aoa, fc, params)
    sigma = fluctuation_std(station, aoa, params)
    if channel is None:
        channel = station.label if isinstance(station, ChordStation) else f"x{float(station):.3f}"
    if sigma == 0.0:
        return TimeSeries(channel, 0.0, master_rate, np.full(n, mu))
    coeff = math.exp(-2.0 * math.pi * params.fluctuation_cutoff / master_rate)
    rng = np.random.default_rng(seed)
    return TimeSeries(channel, 0.0, master_rate, mu + sigma * ar1_noise(n, coeff, rng))
