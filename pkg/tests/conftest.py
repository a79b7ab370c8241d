import numpy as np
import pytest

from bladepressure.analysis import SweepSummary
from bladepressure.campaign import CampaignManifest, process_runs, simulate_run
from bladepressure.flow import ChordStation, SensorKind
from bladepressure.sensors import MemsSpec, ScannerSpec
from bladepressure.timeseries import TimeSeries

SWEEP_2DEG = [float(a) for a in range(-10, 29, 2)]


def mems_stations(positions):
    return [ChordStation(round(x, 6), SensorKind.MEMS) for x in positions]


def tap_stations(positions):
    return [ChordStation(round(x, 6), SensorKind.TAP) for x in positions]


def mems_manifest(stations, aoa_list=SWEEP_2DEG, **kw):
    """Manifest for MEMS-only sweeps; 2 kHz master rate keeps Monte-Carlo runs cheap."""
    kw.setdefault("master_rate", 2000.0)
    kw.setdefault("scanner", ScannerSpec(sample_rate=100.0))
    kw.setdefault("blade_states", ["instrumented"])
    return CampaignManifest(aoa_list=list(aoa_list), stations=stations, **kw)


def tap_manifest(stations, aoa_list=SWEEP_2DEG, **kw):
    kw.setdefault("master_rate", 2048.0)
    kw.setdefault("mems", MemsSpec(sample_rate=512.0))
    return CampaignManifest(aoa_list=list(aoa_list), stations=stations, **kw)


def simulate_sweep(manifest, blade_state, system, alpha=1.0):
    """In-memory simulate + process of every AoA of one blade state."""
    runs = [simulate_run(manifest, blade_state, a) for a in manifest.aoa_list]
    result = process_runs(runs, manifest.scanner_spec(), manifest.reference_aoa, alpha)
    assert not result.errors, result.errors
    kind = SensorKind.MEMS if system == "mems" else SensorKind.TAP
    aggs = [a for _, a in result.aggregates if a.station.kind is kind]
    return SweepSummary.from_aggregates(aggs, blade_state, system)


@pytest.fixture
def series_factory():
    def make(values, rate=100.0, start=0.0, channel="ch"):
        return TimeSeries(channel, start, rate, np.asarray(values, dtype=float))
    return make


ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
