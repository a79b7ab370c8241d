"""Sweep-level analyses: separation onset and front, AoA inference, system comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .pipeline import StationAggregate


def _key(x: float) -> float:
    # positions come from CSV text and arithmetic; compare on a 1e-9 chord grid
    return round(float(x), 9)


@dataclass
class SweepSummary:
    """Aggregates of one measurement system over an AoA sweep.

    ``entries`` is keyed by ``(station position, aoa)``.
    """

    blade_state: str
    system: str
    entries: dict[tuple[float, float], StationAggregate] = field(default_factory=dict)

    def __post_init__(self):
        if self.system not in ("mems", "scanner"):
            raise ValueError(f"unknown system {self.system!r}")

    @classmethod
    def from_aggregates(cls, aggregates: Iterable[StationAggregate], blade_state: str, system: str):
        sweep = cls(blade_state, system)
        for agg in aggregates:
            key = (_key(agg.station.position), float(agg.aoa))
            if key in sweep.entries:
                raise ValueError(f"duplicate aggregate for station {key[0]} at AoA {key[1]}")
            sweep.entries[key] = agg
        return sweep

    @property
    def aoa_grid(self) -> list[float]:
        return sorted({aoa for _, aoa in self.entries})

    @property
    def stations(self) -> list[float]:
        return sorted({x for x, _ in self.entries})

    def curve(self, position: float) -> list[StationAggregate]:
        """Aggregates of one station ordered by AoA."""
        x = _key(position)
        return [self.entries[k] for k in sorted(self.entries) if k[0] == x]

    def profile(self, aoa: float) -> list[StationAggregate]:
        """Aggregates at one AoA ordered along the chord."""
        rows = [a for (x, a2), a in self.entries.items() if math.isclose(a2, aoa, abs_tol=1e-9)]
        return sorted(rows, key=lambda a: a.station.position)


def detect_separation_aoa(
    curve: Sequence[StationAggregate], k: float = 3.0, attached_max: float = 8.0
) -> float | None:
    """First AoA above the attached window whose fluctuation level leaves the attached-flow band.

    The band is ``median + k * IQR`` of the standard deviations at AoA up to
    ``attached_max``; the window itself only serves as the baseline. Returns
    ``None`` when the sweep never leaves the band.
    """
    curve = sorted(curve, key=lambda a: a.aoa)
    attached = np.array([a.std for a in curve if a.aoa <= attached_max])
    if attached.size < 4:
        raise ValueError(f"need at least 4 points at AoA <= {attached_max}, got {attached.size}")
    q25, q50, q75 = np.percentile(attached, [25, 50, 75])
    threshold = q50 + k * (q75 - q25)
    for a in curve:
        if a.aoa > attached_max and a.std > threshold:
            return float(a.aoa)
    return None


def separation_point_estimate(profile: Sequence[StationAggregate]) -> float:
    """Chord position of the largest fluctuation; ties go to the rearmost station."""
    if len(profile) < 3:
        raise ValueError(f"need at least 3 stations, got {len(profile)}")
    best = max(profile, key=lambda a: (a.std, a.station.position))
    return float(best.station.position)


@dataclass
class SeparationEstimate:
    per_station_onset: dict[float, float | None]
    per_aoa_front: dict[float, float]
    method_params: dict

    def to_dict(self) -> dict:
        return {
            "per_station_onset": [
                {"station_xc": x, "onset_deg": v} for x, v in sorted(self.per_station_onset.items())
            ],
            "per_aoa_front": [
                {"aoa_deg": a, "front_xc": v} for a, v in sorted(self.per_aoa_front.items())
            ],
            "method_params": self.method_params,
        }


def estimate_separation(sweep: SweepSummary, k: float = 3.0, attached_max: float = 8.0) -> SeparationEstimate:
    onset = {x: detect_separation_aoa(sweep.curve(x), k, attached_max) for x in sweep.stations}
    front = {}
    for aoa in sweep.aoa_grid:
        profile = sweep.profile(aoa)
        if len(profile) >= 3:
            front[aoa] = separation_point_estimate(profile)
    return SeparationEstimate(onset, front, {"k_threshold": k, "attached_window": [None, attached_max]})


@dataclass(frozen=True)
class LinearModel:
    slope: float  # Pa/deg
    intercept: float  # Pa
    residual: float  # RMS of fit error, Pa

    def predict(self, aoa):
        return self.slope * np.asarray(aoa) + self.intercept


def fit_linear_models(sweep: SweepSummary, window=(-10.0, 8.0)) -> dict[float, LinearModel]:
    """Least-squares ``mean = slope * aoa + intercept`` per station inside ``window``."""
    lo, hi = window
    models = {}
    for x in sweep.stations:
        pts = [a for a in sweep.curve(x) if lo <= a.aoa <= hi]
        aoa = np.array([a.aoa for a in pts])
        if np.unique(aoa).size < 3:
            raise ValueError(f"station {x}: need at least 3 distinct AoA in {window}, got {np.unique(aoa).size}")
        mean = np.array([a.mean for a in pts])
        design = np.column_stack([aoa, np.ones_like(aoa)])
        (slope, intercept), *_ = np.linalg.lstsq(design, mean, rcond=None)
        resid = mean - design @ np.array([slope, intercept])
        models[x] = LinearModel(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))
    return models


def infer_aoa(snapshot: Mapping[float, float], models: Mapping[float, LinearModel]) -> tuple[float, float]:
    """AoA from one set of station means, by weighted least squares over the fitted lines.

    Weights are ``1/residual**2`` from the fits, uniform when any residual is
    zero. The returned residual is the RMS misfit of the snapshot to the lines
    at the inferred AoA; a large value flags a snapshot outside the attached
    regime.
    """
    keyed = {_key(x): m for x, m in models.items()}
    common = sorted(set(keyed) & {_key(x) for x in snapshot})
    if len(common) < 2:
        raise ValueError("AoA inference needs at least two stations with fitted models")
    p = {_key(x): v for x, v in snapshot.items()}
    m = np.array([keyed[x].slope for x in common])
    c = np.array([keyed[x].intercept for x in common])
    r = np.array([keyed[x].residual for x in common])
    v = np.array([p[x] for x in common])
    w = np.ones_like(r) if np.any(r <= 0) else 1.0 / r**2
    denom = np.sum(w * m * m)
    if denom == 0:
        raise ValueError("all fitted slopes are zero")
    aoa = float(np.sum(w * m * (v - c)) / denom)
    misfit = v - (m * aoa + c)
    return aoa, float(np.sqrt(np.mean(misfit**2)))


def pair_stations(mems_positions, tap_positions, max_distance: float = 0.05) -> dict[float, float]:
    """Nearest tap for every MEMS station within ``max_distance`` chord."""
    taps = sorted(_key(t) for t in tap_positions)
    pairing = {}
    for x in sorted(_key(p) for p in mems_positions):
        if not taps:
            break
        best = min(taps, key=lambda t: (abs(t - x), t))
        if abs(best - x) <= max_distance + 1e-12:
            pairing[x] = best
    return pairing


@dataclass
class ComparisonRow:
    station_xc: float
    reference_xc: float
    mean_error_pct: float
    std_error_pct: float


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow]
    normalization: str = "scanner_range"

    def by_station(self) -> dict[float, ComparisonRow]:
        return {r.station_xc: r for r in self.rows}

    def to_dict(self) -> dict:
        return {
            "normalization": self.normalization,
            "rows": [vars(r) for r in self.rows],
        }


def compare_systems(
    mems: SweepSummary, scanner: SweepSummary, station_pairing: Mapping[float, float]
) -> ComparisonReport:
    """Average absolute difference over AoA as a percentage of the scanner's AoA range.

    For each pair the mean error is ``100 * mean_aoa |mean_mems - mean_scanner| / R``
    with ``R`` the max-min spread of the scanner mean over the sweep; the
    standard deviation error uses the spread of the scanner std.
    """
    rows = []
    for x_m, x_s in sorted(station_pairing.items()):
        cm = {a.aoa: a for a in mems.curve(x_m)}
        cs = {a.aoa: a for a in scanner.curve(x_s)}
        if not cm or not cs:
            raise ValueError(f"pair {x_m}/{x_s} missing from one of the sweeps")
        if set(cm) != set(cs):
            raise ValueError(f"pair {x_m}/{x_s} does not share the AoA grid")
        grid = sorted(cs)
        s_mean = np.array([cs[a].mean for a in grid])
        s_std = np.array([cs[a].std for a in grid])
        m_mean = np.array([cm[a].mean for a in grid])
        m_std = np.array([cm[a].std for a in grid])
        r_mean = s_mean.max() - s_mean.min()
        r_std = s_std.max() - s_std.min()
        if r_mean <= 0 or r_std <= 0:
            raise ValueError(f"scanner station {x_s} has zero range over the sweep")
        rows.append(ComparisonRow(
            x_m, x_s,
            float(100.0 * np.mean(np.abs(m_mean - s_mean)) / r_mean),
            float(100.0 * np.mean(np.abs(m_std - s_std)) / r_std),
        ))
    return ComparisonReport(rows)


@dataclass
class ImpactRow:
    station_xc: float
    onset_clean: float | None
    onset_instrumented: float | None
    onset_shift_deg: float | None
    peak_std_ratio: float


@dataclass
class ImpactReport:
    rows: list[ImpactRow]
    method_params: dict = field(default_factory=dict)

    def shifts(self) -> list[float]:
        return [r.onset_shift_deg for r in self.rows if r.onset_shift_deg is not None]

    def to_dict(self) -> dict:
        return {"method_params": self.method_params, "rows": [vars(r) for r in self.rows]}


def impact_shift(
    clean: SweepSummary, instrumented: SweepSummary, k: float = 3.0, attached_max: float = 8.0
) -> ImpactReport:
    """Per-station change of separation onset caused by the instrumentation.

    ``onset_shift_deg`` is clean minus instrumented onset (positive when the
    instrumented blade separates earlier); ``None`` if either sweep never
    separates at that station.
    """
    if clean.stations != instrumented.stations or clean.aoa_grid != instrumented.aoa_grid:
        raise ValueError("clean and instrumented sweeps must share stations and AoA grid")
    rows = []
    for x in clean.stations:
        cc, ci = clean.curve(x), instrumented.curve(x)
        oc = detect_separation_aoa(cc, k, attached_max)
        oi = detect_separation_aoa(ci, k, attached_max)
        peak_c = max(a.std for a in cc)
        peak_i = max(a.std for a in ci)
        ratio = peak_i / peak_c if peak_c > 0 else (1.0 if peak_i == 0 else math.inf)
        shift = None if oc is None or oi is None else oc - oi
        rows.append(ImpactRow(x, oc, oi, shift, ratio))
    return ImpactReport(rows, {"k_threshold": k, "attached_max": attached_max})
