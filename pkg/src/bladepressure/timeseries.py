"""Uniformly sampled pressure records."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TimeSeries:
    """A uniformly sampled pressure record for one channel.

    ``values`` are in Pa. Sample ``k`` is taken at ``start_time + k / sample_rate``
    in the clock of the board that recorded it.
    """

    channel: str
    start_time: float
    sample_rate: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError(f"{self.channel}: values must be one-dimensional")
        if not np.isfinite(self.sample_rate) or self.sample_rate <= 0:
            raise ValueError(f"{self.channel}: sample_rate must be positive, got {self.sample_rate}")
        if not np.isfinite(self.start_time):
            raise ValueError(f"{self.channel}: start_time must be finite")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{self.channel}: values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def duration(self) -> float:
        """Record length ``n / sample_rate`` in seconds."""
        return self.values.size / self.sample_rate

    @property
    def end_time(self) -> float:
        """Timestamp of the last sample."""
        return self.start_time + (self.values.size - 1) / self.sample_rate

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.values.size) / self.sample_rate

    def with_values(self, values, channel: str | None = None) -> "TimeSeries":
        return TimeSeries(
            channel=self.channel if channel is None else channel,
            start_time=self.start_time,
            sample_rate=self.sample_rate,
            values=values,
        )

    def shifted(self, dt: float) -> "TimeSeries":
        """Same samples with the time axis moved by ``dt`` seconds."""
        return TimeSeries(self.channel, self.start_time + dt, self.sample_rate, self.values)


def derive_seed(seed: int, *keys) -> int:
    """Stable sub-seed for ``keys`` (strings or numbers) under a base seed.

    Uses CRC32 of the key text so the result does not depend on Python's
    per-process hash randomization.
    """
    words = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF]
    words += [zlib.crc32(str(k).encode()) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)[0])
