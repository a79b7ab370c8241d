"""Campaign manifests and the simulate → process → analyze → compare chain."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .analysis import (
    SweepSummary,
    compare_systems,
    estimate_separation,
    impact_shift,
    pair_stations,
)
from .flow import ChordStation, FlowConditions, FlowModelParams, SensorKind, ground_truth_series
from .pipeline import (
    AcquisitionRun,
    CalibrationParams,
    ProcessedRun,
    StationAggregate,
    calibrate_alpha,
    process_run,
)
from .sensors import (
    MemsSpec,
    ScannerSpec,
    draw_mems_offset,
    draw_scanner_offset,
    mems_acquire,
    scanner_acquire,
    sync_pulses,
)
from .timeseries import TimeSeries, derive_seed

log = logging.getLogger(__name__)

BLADE_STATES = ("clean", "instrumented")
# 18 runs over -10..+28 deg; 2 deg spacing except at the low end
DEFAULT_AOA = [-10, -6, -2, 0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28]
DEFAULT_TAPS = [0.28, 0.34, 0.40, 0.44, 0.47, 0.49, 0.52, 0.55]


class ManifestError(ValueError):
    """Manifest content that fails validation; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def default_stations() -> list[ChordStation]:
    """Ten MEMS stations equidistant from x/c 0.28 to 0.55 plus eight taps in the same span."""
    mems = [ChordStation(round(0.28 + 0.03 * i, 6), SensorKind.MEMS) for i in range(10)]
    taps = [ChordStation(x, SensorKind.TAP) for x in DEFAULT_TAPS]
    return mems + taps


@dataclass
class CampaignManifest:
    campaign_id: str = "campaign"
    aoa_list: list[float] = field(default_factory=lambda: [float(a) for a in DEFAULT_AOA])
    wind_speed: float = 40.0
    air_density: float = 1.225
    atmospheric_pressure: float = 101325.0
    stagnation_factor: float = 1.0
    duration: float = 120.0
    stationary_duration: float = 10.0
    stations: list[ChordStation] = field(default_factory=default_stations)
    blade_states: list[str] = field(default_factory=lambda: list(BLADE_STATES))
    seed: int = 0
    master_rate: float = 12800.0
    noise_free: bool = False
    scanner_offsets: bool = False
    reference_aoa: float = 24.0
    mems_clock_offset: float = 0.0
    scanner_clock_offset: float = 0.0
    model: FlowModelParams = field(default_factory=FlowModelParams)
    instrumented_model: dict = field(default_factory=dict)
    mems: MemsSpec = field(default_factory=MemsSpec)
    scanner: ScannerSpec = field(default_factory=ScannerSpec)

    def __post_init__(self):
        self.validate()

    @property
    def conditions(self) -> FlowConditions:
        return FlowConditions(
            wind_speed=self.wind_speed,
            air_density=self.air_density,
            atmospheric_pressure=self.atmospheric_pressure,
            stagnation_factor=self.stagnation_factor,
        )

    def model_for(self, blade_state: str) -> FlowModelParams:
        params = self.model
        if blade_state == "instrumented" and self.instrumented_model:
            params = params.replace(**self.instrumented_model)
        return params.quiet() if self.noise_free else params

    def mems_spec(self) -> MemsSpec:
        if not self.noise_free:
            return self.mems
        return MemsSpec(**{**self.mems.to_dict(), "noise_rms": 0.0, "offset_bound": 0.0})

    def scanner_spec(self) -> ScannerSpec:
        if not self.noise_free:
            return self.scanner
        return ScannerSpec(**{**self.scanner.to_dict(), "noise_rms": 0.0})

    def stations_for(self, blade_state: str) -> list[ChordStation]:
        if blade_state == "clean":
            return [s for s in self.stations if s.kind is SensorKind.TAP]
        return list(self.stations)

    def run_id(self, blade_state: str, aoa: float) -> str:
        return f"{self.campaign_id}-{blade_state}-aoa{aoa:+05.1f}"

    def validate(self):
        if not self.campaign_id or any(c in self.campaign_id for c in "/\\ "):
            raise ManifestError("campaign_id", "must be a non-empty name without spaces or slashes")
        if not self.aoa_list:
            raise ManifestError("aoa_list", "must not be empty")
        for i, a in enumerate(self.aoa_list):
            if not (math.isfinite(a) and -90.0 <= a <= 90.0):
                raise ManifestError(f"aoa_list[{i}]", f"AoA {a} outside [-90, 90] deg")
            if i and a <= self.aoa_list[i - 1]:
                raise ManifestError(f"aoa_list[{i}]", "AoA list must be strictly increasing")
        for name in ("wind_speed", "air_density", "atmospheric_pressure", "stagnation_factor"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0 or (v == 0 and name != "wind_speed"):
                raise ManifestError(name, f"invalid value {v}")
        if not self.duration >= 2:
            raise ManifestError("duration", "must span at least two sync pulses (>= 2 s)")
        if not self.stationary_duration >= 10:
            raise ManifestError("stationary_duration", "must be at least 10 s")
        seen = set()
        for i, s in enumerate(self.stations):
            key = (round(s.position, 9), s.kind)
            if key in seen:
                raise ManifestError(f"stations[{i}]", f"duplicate {s.kind.value} station at {s.position}")
            seen.add(key)
        if not self.stations:
            raise ManifestError("stations", "must not be empty")
        for i, b in enumerate(self.blade_states):
            if b not in BLADE_STATES:
                raise ManifestError(f"blade_states[{i}]", f"unknown blade state {b!r}")
        if len(set(self.blade_states)) != len(self.blade_states) or not self.blade_states:
            raise ManifestError("blade_states", "must be a non-empty list without repeats")
        for name, rate in (("mems.sample_rate", self.mems.sample_rate), ("scanner.sample_rate", self.scanner.sample_rate)):
            ratio = self.master_rate / rate
            if abs(ratio - round(ratio)) > 1e-9 * ratio or ratio < 1:
                raise ManifestError("master_rate", f"{self.master_rate} Hz is not an integer multiple of {name}={rate}")
        if self.master_rate < 2 * self.model.fluctuation_cutoff:
            raise ManifestError("master_rate", "below twice the fluctuation cutoff")
        if self.instrumented_model:
            try:
                self.model.replace(**self.instrumented_model)
            except (TypeError, ValueError) as exc:
                raise ManifestError("instrumented_model", str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "aoa_list": list(self.aoa_list),
            "wind_speed": self.wind_speed,
            "air_density": self.air_density,
            "atmospheric_pressure": self.atmospheric_pressure,
            "stagnation_factor": self.stagnation_factor,
            "duration": self.duration,
            "stationary_duration": self.stationary_duration,
            "stations": [{"x_c": s.position, "kind": s.kind.value, "label": s.label} for s in self.stations],
            "blade_states": list(self.blade_states),
            "seed": self.seed,
            "master_rate": self.master_rate,
            "noise_free": self.noise_free,
            "scanner_offsets": self.scanner_offsets,
            "reference_aoa": self.reference_aoa,
            "sync": {"mems_clock_offset_s": self.mems_clock_offset, "scanner_clock_offset_s": self.scanner_clock_offset},
            "model": self.model.to_dict(),
            "instrumented_model": dict(self.instrumented_model),
            "mems": self.mems.to_dict(),
            "scanner": self.scanner.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignManifest":
        if not isinstance(d, dict):
            raise ManifestError("<root>", "manifest must be a JSON object")
        kw = {}
        scalars = {
            "campaign_id": str, "wind_speed": float, "air_density": float,
            "atmospheric_pressure": float, "stagnation_factor": float, "duration": float,
            "stationary_duration": float, "seed": int, "master_rate": float,
            "noise_free": bool, "scanner_offsets": bool, "reference_aoa": float,
        }
        known = set(scalars) | {"aoa_list", "stations", "blade_states", "sync", "model",
                                "instrumented_model", "mems", "scanner"}
        for key in d:
            if key not in known:
                raise ManifestError(key, "unknown manifest field")
        for key, typ in scalars.items():
            if key in d:
                v = d[key]
                if typ is bool and not isinstance(v, bool):
                    raise ManifestError(key, "must be true or false")
                if typ is int and (isinstance(v, bool) or not isinstance(v, int)):
                    raise ManifestError(key, "must be an integer")
                if typ is float and (isinstance(v, bool) or not isinstance(v, (int, float))):
                    raise ManifestError(key, "must be a number")
                if typ is str and not isinstance(v, str):
                    raise ManifestError(key, "must be a string")
                kw[key] = typ(v)
        if "aoa_list" in d:
            if not isinstance(d["aoa_list"], list):
                raise ManifestError("aoa_list", "must be a list of numbers")
            for i, a in enumerate(d["aoa_list"]):
                if isinstance(a, bool) or not isinstance(a, (int, float)):
                    raise ManifestError(f"aoa_list[{i}]", "must be a number")
            kw["aoa_list"] = [float(a) for a in d["aoa_list"]]
        if "stations" in d:
            if not isinstance(d["stations"], list):
                raise ManifestError("stations", "must be a list")
            stations = []
            for i, s in enumerate(d["stations"]):
                try:
                    stations.append(ChordStation(float(s["x_c"]), SensorKind(s.get("kind", "mems")), s.get("label", "")))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ManifestError(f"stations[{i}]", str(exc)) from None
            kw["stations"] = stations
        if "blade_states" in d:
            if not isinstance(d["blade_states"], list):
                raise ManifestError("blade_states", "must be a list")
            kw["blade_states"] = [str(b) for b in d["blade_states"]]
        if "sync" in d:
            sync = d["sync"]
            try:
                kw["mems_clock_offset"] = float(sync.get("mems_clock_offset_s", 0.0))
                kw["scanner_clock_offset"] = float(sync.get("scanner_clock_offset_s", 0.0))
            except (AttributeError, TypeError, ValueError) as exc:
                raise ManifestError("sync", str(exc)) from None
        for key, loader in (("model", FlowModelParams.from_dict), ("mems", MemsSpec.from_dict), ("scanner", ScannerSpec.from_dict)):
            if key in d:
                try:
                    kw[key] = loader(d[key])
                except (AttributeError, TypeError, ValueError) as exc:
                    raise ManifestError(key, str(exc)) from None
        if "instrumented_model" in d:
            if not isinstance(d["instrumented_model"], dict):
                raise ManifestError("instrumented_model", "must be an object of model overrides")
            kw["instrumented_model"] = dict(d["instrumented_model"])
        try:
            return cls(**kw)
        except ManifestError:
            raise
        except (TypeError, ValueError) as exc:
            raise ManifestError("<root>", str(exc)) from None


def load_manifest(path) -> CampaignManifest:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return CampaignManifest.from_dict(data)


# --------------------------------------------------------------------- simulate


def channel_name(station: ChordStation) -> str:
    return f"{station.kind.value}_{station.position:.3f}"


def simulate_run(manifest: CampaignManifest, blade_state: str, aoa: float) -> AcquisitionRun:
    """Build one acquisition in memory."""
    run_id = manifest.run_id(blade_state, aoa)
    fc = manifest.conditions
    params = manifest.model_for(blade_state)
    mems_spec, scanner_spec = manifest.mems_spec(), manifest.scanner_spec()
    stations = manifest.stations_for(blade_state)

    truths: dict[float, TimeSeries] = {}
    channels, stationary, station_map, pulses = {}, {}, {}, {}
    mems_pulses = sync_pulses(manifest.duration) + manifest.mems_clock_offset
    scanner_pulses = sync_pulses(manifest.duration) + manifest.scanner_clock_offset
    n_still = int(round(manifest.stationary_duration * manifest.master_rate))
    still_truth = TimeSeries("still", 0.0, manifest.master_rate, np.zeros(n_still))

    for st in stations:
        name = channel_name(st)
        key = round(st.position, 9)
        # co-located sensors see the same realization of the flow
        if key not in truths:
            truths[key] = ground_truth_series(
                st, aoa, fc, params, manifest.duration, manifest.master_rate,
                seed=derive_seed(manifest.seed, run_id, "truth", f"{key:.9f}"),
            )
        truth = truths[key]
        ch_seed = derive_seed(manifest.seed, run_id, name)
        if st.kind is SensorKind.MEMS:
            offset = draw_mems_offset(mems_spec, derive_seed(manifest.seed, "offset", name))
            rec = mems_acquire(truth, mems_spec, fc, ch_seed, offset=offset, channel=name)
            channels[name] = rec.shifted(manifest.mems_clock_offset)
            pulses[name] = mems_pulses
            still = mems_acquire(
                still_truth, mems_spec, fc.still_air(),
                derive_seed(manifest.seed, run_id, name, "stationary"), offset=offset, channel=name,
            )
            stationary[name] = still
        else:
            offset = 0.0
            if manifest.scanner_offsets and not manifest.noise_free:
                offset = draw_scanner_offset(scanner_spec, derive_seed(manifest.seed, "offset", name))
            rec = scanner_acquire(truth, scanner_spec, ch_seed, offset=offset, channel=name)
            channels[name] = rec.shifted(manifest.scanner_clock_offset)
            pulses[name] = scanner_pulses
        station_map[name] = st

    return AcquisitionRun(
        run_id=run_id, aoa=float(aoa), conditions=fc, channels=channels, stations=station_map,
        stationary=stationary, pulses=pulses, duration=manifest.duration, blade_state=blade_state,
    )


def simulate_campaign(manifest: CampaignManifest, out_dir) -> Path:
    """Write every run's channel, stationary and sync files plus ``run_index.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    for state in manifest.blade_states:
        for aoa in manifest.aoa_list:
            run = simulate_run(manifest, state, aoa)
            log.info("simulated %s", run.run_id)
            runs.append(_write_run(run, out))
    index = {
        "campaign_id": manifest.campaign_id,
        "reference_aoa": manifest.reference_aoa,
        "scanner": manifest.scanner_spec().to_dict(),
        "runs": runs,
        "simulation": manifest.to_dict(),
    }
    path = out / "run_index.json"
    io.write_json(path, index)
    return path


def _write_run(run: AcquisitionRun, out: Path) -> dict:
    entry = {
        "run_id": run.run_id,
        "aoa_deg": run.aoa,
        "wind_speed_mps": run.conditions.wind_speed,
        "air_density_kgm3": run.conditions.air_density,
        "blade_state": run.blade_state,
        "duration_s": run.duration,
        "channels": [],
        "stationary": [],
        "sync": {},
    }
    boards = {}
    for name in sorted(run.channels):
        st = run.stations[name]
        board = "mems" if st.kind is SensorKind.MEMS else "scanner"
        fname = f"{run.run_id}__{name}.csv"
        io.write_series_csv(out / fname, run.channels[name])
        entry["channels"].append({
            "channel": name, "file": fname, "station_xc": st.position, "kind": st.kind.value,
            "board": board, "sample_rate": run.channels[name].sample_rate,
        })
        boards[board] = run.pulses[name]
        if name in run.stationary:
            sname = f"{run.run_id}__{name}_stationary.csv"
            io.write_series_csv(out / sname, run.stationary[name])
            entry["stationary"].append({
                "channel": name, "file": sname, "sample_rate": run.stationary[name].sample_rate,
            })
    for board, p in sorted(boards.items()):
        fname = f"{run.run_id}__sync_{board}.csv"
        io.write_pulses_csv(out / fname, p)
        entry["sync"][board] = fname
    return entry


# ---------------------------------------------------------------------- process


def load_run(entry: dict, root: Path) -> AcquisitionRun:
    fc = FlowConditions(wind_speed=float(entry["wind_speed_mps"]), air_density=float(entry["air_density_kgm3"]))
    pulses_by_board = {b: io.read_pulses_csv(root / f) for b, f in entry["sync"].items()}
    channels, stations, pulses, stationary = {}, {}, {}, {}
    for ch in entry["channels"]:
        name = ch["channel"]
        channels[name] = io.read_series_csv(root / ch["file"], name, ch.get("sample_rate"))
        stations[name] = ChordStation(float(ch["station_xc"]), SensorKind(ch["kind"]))
        pulses[name] = pulses_by_board[ch["board"]]
    for s in entry.get("stationary", []):
        stationary[s["channel"]] = io.read_series_csv(root / s["file"], s["channel"], s.get("sample_rate"))
    return AcquisitionRun(
        run_id=entry["run_id"], aoa=float(entry["aoa_deg"]), conditions=fc, channels=channels,
        stations=stations, stationary=stationary, pulses=pulses,
        duration=float(entry.get("duration_s", 120.0)), blade_state=entry["blade_state"],
    )


def calibrate_runs(processed: list[ProcessedRun], reference_aoa: float) -> CalibrationParams | None:
    """Alpha from every instrumented run at the reference AoA; ``None`` if no MEMS data exists."""
    alphas = []
    has_mems = False
    for p in processed:
        aggs = p.aggregates(None)
        mems = [a for a in aggs if a.station.kind is SensorKind.MEMS]
        has_mems = has_mems or bool(mems)
        if mems and math.isclose(p.run.aoa, reference_aoa, abs_tol=1e-9):
            taps = [a for a in aggs if a.station.kind is SensorKind.TAP]
            alphas.append(calibrate_alpha(mems, taps, p.run.conditions.dynamic_pressure, reference_aoa).alpha)
    if not alphas:
        if has_mems:
            raise ValueError(f"no run with MEMS and co-located taps at reference AoA {reference_aoa}")
        return None
    return CalibrationParams(float(np.mean(alphas)), reference_aoa)


@dataclass
class ProcessResult:
    aggregates: list[tuple[str, StationAggregate]]
    calibration: CalibrationParams | None
    errors: dict[str, str]
    runs: dict[str, dict]


def process_runs(
    runs: list[AcquisitionRun],
    scanner_spec: ScannerSpec,
    reference_aoa: float = 24.0,
    alpha: float | None = None,
) -> ProcessResult:
    """Process in-memory runs, calibrate alpha (unless given) and aggregate."""
    processed, errors = [], {}
    for run in runs:
        try:
            processed.append(process_run(run, scanner_spec))
        except (ValueError, KeyError) as exc:
            errors[run.run_id] = str(exc)
            log.error("run %s failed: %s", run.run_id, exc)
    cal = CalibrationParams(alpha, reference_aoa) if alpha is not None else calibrate_runs(processed, reference_aoa)
    rows = []
    for p in processed:
        rows += [(p.run.run_id, a) for a in p.aggregates(cal)]
    info = {p.run.run_id: {"blade_state": p.run.blade_state, "aoa_deg": p.run.aoa,
                           "q_inf_pa": p.run.conditions.dynamic_pressure} for p in processed}
    return ProcessResult(rows, cal, errors, info)


def process_campaign(index_path, out_dir, alpha: float | None = None) -> ProcessResult:
    index_path = Path(index_path)
    index = io.read_json(index_path)
    root = index_path.parent
    scanner_spec = ScannerSpec.from_dict(index.get("scanner", {}))
    reference_aoa = float(index.get("reference_aoa", 24.0))
    runs, load_errors = [], {}
    for entry in index["runs"]:
        try:
            runs.append(load_run(entry, root))
        except (OSError, ValueError, KeyError) as exc:
            load_errors[entry.get("run_id", "?")] = f"{type(exc).__name__}: {exc}"
            log.error("run %s could not be loaded: %s", entry.get("run_id"), exc)
    result = process_runs(runs, scanner_spec, reference_aoa, alpha)
    result.errors = {**load_errors, **result.errors}

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_aggregates_csv(out / "aggregates.csv", result.aggregates)
    cal = result.calibration
    io.write_json(out / "calibration.json", {
        "alpha": None if cal is None else cal.alpha,
        "reference_aoa": reference_aoa,
        "source": "override" if alpha is not None else ("calibrated" if cal else "none"),
        "runs": result.runs,
        "errors": result.errors,
    })
    return result


# ---------------------------------------------------------------------- analyze


def _blade_state_of(run_id: str, run_info: dict) -> str:
    if run_id in run_info:
        return run_info[run_id]["blade_state"]
    for state in BLADE_STATES:
        if f"-{state}-" in run_id or run_id.startswith(state):
            return state
    return "clean"


def load_sweeps(aggregates_path) -> dict[tuple[str, str], SweepSummary]:
    """Sweeps keyed by ``(blade_state, system)`` from an aggregates CSV.

    Blade states come from a sibling ``calibration.json`` when present,
    otherwise from the run id.
    """
    aggregates_path = Path(aggregates_path)
    rows = io.read_aggregates_csv(aggregates_path)
    cal_path = aggregates_path.with_name("calibration.json")
    run_info = io.read_json(cal_path).get("runs", {}) if cal_path.exists() else {}
    grouped: dict[tuple[str, str], list[StationAggregate]] = {}
    for run_id, agg in rows:
        system = "mems" if agg.station.kind is SensorKind.MEMS else "scanner"
        grouped.setdefault((_blade_state_of(run_id, run_info), system), []).append(agg)
    return {k: SweepSummary.from_aggregates(v, k[0], k[1]) for k, v in sorted(grouped.items())}


def analyze_aggregates(aggregates_path, out_dir, k: float = 3.0, attached_max: float = 8.0,
                       max_distance: float = 0.05) -> dict:
    """Write plot-ready tables and reports; returns the summary document."""
    sweeps = load_sweeps(aggregates_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"sweeps": [f"{s}/{sys}" for s, sys in sweeps], "notes": [], "method_params": {
        "k_threshold": k, "attached_max_deg": attached_max, "pairing_max_distance": max_distance}}

    curves, profiles, onsets, fronts = [], [], [], []
    for (state, system), sweep in sweeps.items():
        for x in sweep.stations:
            for a in sweep.curve(x):
                curves.append((state, system, x, a.aoa, a.mean, a.std))
        for aoa in sweep.aoa_grid:
            for a in sweep.profile(aoa):
                profiles.append((state, system, aoa, a.station.position, a.mean, a.std))
        try:
            est = estimate_separation(sweep, k, attached_max)
        except ValueError as exc:
            summary["notes"].append(f"separation not estimated for {state}/{system}: {exc}")
            continue
        onsets += [(state, system, x, v) for x, v in sorted(est.per_station_onset.items())]
        fronts += [(state, system, a, v) for a, v in sorted(est.per_aoa_front.items())]
    io.write_rows_csv(out / "suction_curves.csv",
                      ["blade_state", "system", "station_xc", "aoa_deg", "mean_pa", "std_pa"], curves)
    io.write_rows_csv(out / "chordwise_profiles.csv",
                      ["blade_state", "system", "aoa_deg", "station_xc", "mean_pa", "std_pa"], profiles)
    io.write_rows_csv(out / "separation_onsets.csv", ["blade_state", "system", "station_xc", "onset_deg"], onsets)
    io.write_rows_csv(out / "separation_points.csv", ["blade_state", "system", "aoa_deg", "front_xc"], fronts)

    mems = sweeps.get(("instrumented", "mems"))
    taps = sweeps.get(("instrumented", "scanner"))
    if mems and taps:
        pairing = pair_stations(mems.stations, taps.stations, max_distance)
        try:
            report = compare_systems(mems, taps, pairing)
            write_comparison(out, report, {"pairing_max_distance": max_distance})
            summary["comparison"] = "comparison.csv"
        except ValueError as exc:
            summary["notes"].append(f"comparison skipped: {exc}")
    else:
        summary["notes"].append("comparison skipped: needs MEMS and tap sweeps of the instrumented blade")

    clean = sweeps.get(("clean", "scanner"))
    if clean and taps:
        try:
            report = impact_shift(clean, taps, k, attached_max)
            io.write_rows_csv(out / "impact.csv", io.IMPACT_HEADER,
                              [(r.station_xc, r.onset_shift_deg, r.peak_std_ratio) for r in report.rows])
            io.write_json(out / "impact.json", report.to_dict())
            summary["impact"] = "impact.csv"
        except ValueError as exc:
            summary["notes"].append(f"impact report skipped: {exc}")
    else:
        summary["notes"].append("impact report absent: needs clean and instrumented scanner sweeps")
    io.write_json(out / "summary.json", summary)
    return summary


def write_comparison(out: Path, report, params: dict) -> None:
    io.write_rows_csv(out / "comparison.csv", io.COMPARISON_HEADER,
                      [(r.station_xc, r.mean_error_pct, r.std_error_pct) for r in report.rows])
    io.write_json(out / "comparison.json", {**report.to_dict(), "method_params": params})


def compare_aggregates(path_a, path_b, out_dir=None, max_distance: float = 0.05):
    """Compare the first file's MEMS sweep (or its only sweep) against the second file's taps.

    Each side prefers the instrumented blade state when it is present.
    """
    def pick(sweeps, system):
        for state in ("instrumented", "clean"):
            if (state, system) in sweeps:
                return sweeps[(state, system)]
        return None

    sa, sb = load_sweeps(path_a), load_sweeps(path_b)
    first = pick(sa, "mems") or pick(sa, "scanner")
    second = pick(sb, "scanner") or pick(sb, "mems")
    if first is None or second is None:
        raise ManifestError("input", "aggregates file holds no sweep")
    pairing = pair_stations(first.stations, second.stations, max_distance)
    if not pairing:
        raise ManifestError("pairing", f"no station pairs within {max_distance} chord")
    report = compare_systems(first, second, pairing)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_comparison(out, report, {"pairing_max_distance": max_distance})
    return report
