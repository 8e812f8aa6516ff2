"""Measured frequency -> conductance data for a binary memristor.

The device only holds two reliable states, but the conductance seen by a
half-sine read pulse depends on the pulse frequency.  The table below is the
averaged GeSeSn-W measurement (frequency in Hz, conductances in mS).

Lookups interpolate linearly in log10(frequency) and never extrapolate.
"""

from __future__ import annotations

import bisect
import csv
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BranchError, RangeError, TableError

CSV_HEADER = ("freq_hz", "g_off_ms", "g_on_ms")

# (freq_hz, g_off_ms, g_on_ms), as published
TABLE_I = (
    (10000.0, 1.71, 2.10),
    (1000.0, 1.49, 3.13),
    (750.0, 1.56, 4.20),
    (500.0, 2.20, 5.97),
    (100.0, 2.26, 7.60),
    (10.0, 1.4, 8.40),
    (1.0, 1.32, 10.8),
    (0.5, 1.15, 11.4),
)

# grid snapping for inverse lookups; far below any measurement precision
_SNAP_RTOL = 1e-12


class DeviceState(enum.Enum):
    ON = "ON"
    OFF = "OFF"


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative Gaussian read variation, drawn once per device read."""

    relative_sigma: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not self.relative_sigma >= 0:
            raise ValueError(f"relative_sigma must be >= 0, got {self.relative_sigma}")

    @property
    def is_ideal(self):
        return self.relative_sigma == 0

    def rng(self, *key):
        """Independent generator for a substream keyed by integers."""
        return np.random.default_rng([int(self.seed) & (2**64 - 1), *[int(k) for k in key]])


@dataclass(frozen=True)
class ConductanceTable:
    """Two-branch conductance table, stored in ascending frequency order."""

    entries: tuple[tuple[float, float, float], ...]
    source_label: str = ""

    def __post_init__(self):
        entries = tuple(sorted((float(f), float(off), float(on)) for f, off, on in self.entries))
        object.__setattr__(self, "entries", entries)
        _validate(entries)

    @property
    def frequencies(self):
        return tuple(e[0] for e in self.entries)

    @property
    def f_min(self):
        return self.entries[0][0]

    @property
    def f_max(self):
        return self.entries[-1][0]

    def branch(self, state):
        col = 2 if DeviceState(state) is DeviceState.ON else 1
        return tuple(e[col] for e in self.entries)

    @property
    def on_range(self):
        g = self.branch(DeviceState.ON)
        return min(g), max(g)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for f, off, on in sorted(self.entries, reverse=True):
            w.writerow([repr(f), repr(off), repr(on)])
        return buf.getvalue()


def _validate(entries, lines=None):
    def where(i):
        return f"row {lines[i] if lines else i + 1}"

    if len(entries) < 2:
        raise TableError("table needs at least 2 rows")
    for i, (f, off, on) in enumerate(entries):
        if not (math.isfinite(f) and math.isfinite(off) and math.isfinite(on)):
            raise TableError(f"{where(i)}: non-finite value")
        if f <= 0:
            raise TableError(f"{where(i)}: frequency must be positive")
        if off <= 0 or on <= 0:
            raise TableError(f"{where(i)}: conductance must be positive")
        if on <= off:
            raise TableError(f"{where(i)}: g_on must exceed g_off")
    for i in range(1, len(entries)):
        if entries[i][0] == entries[i - 1][0]:
            raise TableError(f"{where(i)}: duplicate frequency {entries[i][0]!r}")
        if not entries[i][2] < entries[i - 1][2]:
            raise TableError(f"{where(i)}: ON branch must strictly decrease with frequency")


def default_table():
    return ConductanceTable(TABLE_I, source_label="GeSeSn-W (Table I)")


def load_table(path):
    """Read a ``freq_hz,g_off_ms,g_on_ms`` CSV into a validated table."""
    path = Path(path)
    rows = []
    lines = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise TableError(f"row 1: expected header {','.join(CSV_HEADER)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != 3:
                raise TableError(f"row {lineno}: expected 3 fields, got {len(rec)}")
            try:
                rows.append(tuple(float(c) for c in rec))
            except ValueError:
                raise TableError(f"row {lineno}: malformed number in {rec!r}") from None
            lines.append(lineno)

    order = sorted(range(len(rows)), key=lambda i: rows[i][0])
    _validate([rows[i] for i in order], [lines[i] for i in order])
    return ConductanceTable(tuple(rows), source_label=str(path))


def conductance_at(table, state, f):
    """Conductance in mS on ``state``'s branch at frequency ``f`` (Hz)."""
    freqs = table.frequencies
    g = table.branch(state)
    if not freqs[0] <= f <= freqs[-1]:
        raise RangeError(
            f"frequency {f!r} Hz outside table range [{freqs[0]}, {freqs[-1]}]",
            interval=(freqs[0], freqs[-1]),
        )
    i = bisect.bisect_left(freqs, f)
    if freqs[i] == f:
        return g[i]
    lo, hi = math.log10(freqs[i - 1]), math.log10(freqs[i])
    frac = (math.log10(f) - lo) / (hi - lo)
    return g[i - 1] + frac * (g[i] - g[i - 1])


def frequency_for(table, state, g):
    """Frequency in Hz whose ON-branch conductance is ``g`` mS."""
    if DeviceState(state) is not DeviceState.ON:
        raise BranchError("inverse lookup is only defined on the monotone ON branch")
    freqs = table.frequencies
    gon = table.branch(DeviceState.ON)
    lo_g, hi_g = gon[-1], gon[0]
    for fi, gi in zip(freqs, gon):
        if abs(g - gi) <= _SNAP_RTOL * gi:
            return fi
    if not lo_g <= g <= hi_g:
        raise RangeError(
            f"conductance {g!r} mS outside representable ON range [{lo_g}, {hi_g}]",
            interval=(lo_g, hi_g),
        )
    # gon is descending; index of first grid conductance below g
    i = next(k for k in range(1, len(gon)) if gon[k] < g)
    frac = (g - gon[i - 1]) / (gon[i] - gon[i - 1])
    lo, hi = math.log10(freqs[i - 1]), math.log10(freqs[i])
    return 10.0 ** (lo + frac * (hi - lo))


def sample_conductance(table, state, f, noise, rng):
    """One noisy read: ``conductance_at * (1 + eps)``, eps ~ N(0, sigma)."""
    g = conductance_at(table, state, f)
    if noise.is_ideal:
        return g
    return g * (1.0 + noise.relative_sigma * rng.standard_normal())
