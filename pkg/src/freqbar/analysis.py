"""Power, energy, latency and area for one column MAC.

Average power of a sinusoidal drive is ``sum(G_j * (V_j0/sqrt(2))**2)``; it
does not depend on frequency.  The comparison baseline is a DC-driven
bit-sliced column set: the same conductances replicated over ``n_bits``
columns with no RMS factor.
"""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import FreqbarError

DEFAULT_READOUT_S = 500e-9


class AnalysisError(FreqbarError, ValueError):
    module = "analysis"


def _amps(program, amplitudes):
    v = np.broadcast_to(np.asarray(amplitudes, dtype=float), (len(program),)) if np.ndim(amplitudes) == 0 else np.asarray(amplitudes, dtype=float)
    if v.shape != (len(program),):
        raise AnalysisError(f"{v.size} amplitudes for {len(program)} cells")
    return v


def pulse_energy_uj(g_ms, v0, f):
    """Energy of one half-sine pulse in uJ (mS * V^2 * s = mJ)."""
    return g_ms * v0 * v0 / 2.0 * (0.5 / f) * 1e3


def mac_power(program, amplitudes):
    """Average power in mW."""
    v = _amps(program, amplitudes)
    return float(np.sum(program.conductances * (v / np.sqrt(2.0)) ** 2))


def mac_energy(program, amplitudes):
    """Energy of one MAC in uJ; each row dissipates for half its own period."""
    v = _amps(program, amplitudes)
    return float(np.sum(pulse_energy_uj(program.conductances, v, program.frequencies)))


def latency(program, readout_s=DEFAULT_READOUT_S):
    """Seconds per MAC: the slowest half period plus the current readout."""
    if len(program) == 0:
        raise AnalysisError("latency of an empty program is undefined")
    return 0.5 / program.f_min + readout_s


@dataclass(frozen=True)
class CostReport:
    avg_power_mw: float
    energy_per_mac_uj: float
    latency_s: float
    columns_used: int
    baseline_power_mw: float
    baseline_columns: int
    power_ratio: float
    area_fraction: float
    n_bits: int

    @property
    def throughput_hz(self):
        return 1.0 / self.latency_s


COST_HEADER = (
    "avg_power_mw",
    "energy_uj",
    "latency_s",
    "columns",
    "baseline_power_mw",
    "baseline_columns",
    "power_ratio",
    "area_fraction",
    "n_bits",
)


def compare_baseline(program, n_bits, amplitudes, readout_s=DEFAULT_READOUT_S):
    if n_bits < 1:
        raise AnalysisError(f"n_bits must be >= 1, got {n_bits}")
    v = _amps(program, amplitudes)
    dc = float(np.sum(program.conductances * v * v))
    power = dc / 2.0
    baseline = n_bits * dc
    # identical formulas up to the factor 2*n_bits, also when both are zero
    ratio = baseline / power if power > 0 else 2.0 * n_bits
    return CostReport(
        avg_power_mw=power,
        energy_per_mac_uj=mac_energy(program, v),
        latency_s=latency(program, readout_s),
        columns_used=1,
        baseline_power_mw=baseline,
        baseline_columns=n_bits,
        power_ratio=ratio,
        area_fraction=1 / n_bits,
        n_bits=n_bits,
    )


def report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COST_HEADER)
    w.writerow([repr(x) for x in astuple(report)])
    return buf.getvalue()


def parse_report_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2 or tuple(rows[0]) != COST_HEADER:
        raise AnalysisError("not a cost report CSV")
    kinds = [f.type for f in fields(CostReport)]
    vals = [int(x) if k in ("int", int) else float(x) for x, k in zip(rows[1], kinds)]
    return CostReport(*vals)
