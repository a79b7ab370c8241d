"""Simulation and processing of blade surface-pressure measurements from a MEMS array and a tap scanner."""

from .flow import (
    ChordStation,
    FlowConditions,
    FlowModelParams,
    SensorKind,
    dynamic_pressure,
    fluctuation_std,
    ground_truth_series,
    mean_pressure,
    separation_front,
)
from .sensors import MemsSpec, ScannerSpec, mems_acquire, scanner_acquire, sensing_power, sync_pulses
from .timeseries import TimeSeries

__version__ = "0.1.0"
