"""CSV and JSON readers/writers.

Floats are written with ``repr`` so every file re-reads bit-for-bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

import numpy as np

from .flow import ChordStation, SensorKind
from .pipeline import StationAggregate
from .timeseries import TimeSeries

SERIES_HEADER = ["time_s", "pressure_pa"]
AGGREGATE_HEADER = ["run_id", "station_xc", "kind", "aoa_deg", "mean_pa", "std_pa", "n"]
COMPARISON_HEADER = ["station_xc", "mean_error_pct", "std_error_pct"]
IMPACT_HEADER = ["station_xc", "onset_shift_deg", "peak_std_ratio"]


class FormatError(ValueError):
    """A data file does not follow the expected layout."""


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def parse_optional_float(text: str) -> float | None:
    return None if text.strip() == "" else float(text)


def write_series_csv(path, series: TimeSeries) -> None:
    t = series.times()
    lines = [",".join(SERIES_HEADER)]
    lines += [f"{a!r},{b!r}" for a, b in zip(t.tolist(), series.values.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_series_csv(path, channel: str | None = None, sample_rate: float | None = None) -> TimeSeries:
    """Read a ``time_s,pressure_pa`` file.

    ``sample_rate`` should be given when known; otherwise it is inferred from
    the time column and rounded to 1e-6 Hz.
    """
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if header != SERIES_HEADER:
        raise FormatError(f"{path}: expected header {','.join(SERIES_HEADER)}, got {','.join(header)}")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if data.shape[0] < 2 or data.shape[1] != 2:
        raise FormatError(f"{path}: need at least two rows of two columns")
    t, v = data[:, 0], data[:, 1]
    if sample_rate is None:
        sample_rate = round((t.size - 1) / (t[-1] - t[0]), 6)
    return TimeSeries(channel or path.stem.split("__")[-1], float(t[0]), float(sample_rate), v)


def write_pulses_csv(path, pulses) -> None:
    lines = ["pulse_s"] + [repr(float(p)) for p in pulses]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pulses_csv(path) -> np.ndarray:
    path = Path(path)
    with path.open() as fh:
        if fh.readline().strip() != "pulse_s":
            raise FormatError(f"{path}: expected header pulse_s")
        return np.array([float(line) for line in fh if line.strip()])


def write_rows_csv(path, header: list[str], rows: Iterable[Iterable]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def read_rows_csv(path, header: list[str]) -> list[dict[str, str]]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if got != header:
            raise FormatError(f"{path}: expected header {','.join(header)}, got {','.join(got)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append(dict(zip(header, row)))
    return rows


def write_aggregates_csv(path, rows: Iterable[tuple[str, StationAggregate]]) -> None:
    write_rows_csv(path, AGGREGATE_HEADER, (
        (run_id, a.station.position, a.station.kind.value, a.aoa, a.mean, a.std, a.n_samples)
        for run_id, a in rows
    ))


def read_aggregates_csv(path) -> list[tuple[str, StationAggregate]]:
    out = []
    for lineno, r in enumerate(read_rows_csv(path, AGGREGATE_HEADER), start=2):
        try:
            station = ChordStation(float(r["station_xc"]), SensorKind(r["kind"]))
            agg = StationAggregate(
                station, float(r["aoa_deg"]), float(r["mean_pa"]), float(r["std_pa"]), int(r["n"])
            )
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in (agg.aoa, agg.mean, agg.std)):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        out.append((r["run_id"], agg))
    return out


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
